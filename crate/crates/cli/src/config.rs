//! Job configuration: a JSON file whose fields inline flags override.

use std::path::Path;

use serde::Deserialize;

use kstar::star::required_phi_order;
use kstar::{Builtin, BuiltinPotential, Jet, PotentialSource};

use crate::expr::{parse_expression, ExprPotential};

pub const DEFAULT_NU_ORDER: usize = 4;
pub const DEFAULT_JET_ORDER: u32 = 4;

/// Every field is optional so that a file and flags can be layered.
#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub n: Option<usize>,
    pub potential: Option<String>,
    pub nu_order: Option<usize>,
    pub jet_order: Option<u32>,
    pub phi_order: Option<u32>,
    pub f: Option<String>,
    pub g: Option<String>,
    pub h: Option<String>,
    pub seed: Option<u64>,
}

impl JobConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    /// Fields set in `flags` win.
    pub fn overridden_by(self, flags: JobConfig) -> JobConfig {
        JobConfig {
            n: flags.n.or(self.n),
            potential: flags.potential.or(self.potential),
            nu_order: flags.nu_order.or(self.nu_order),
            jet_order: flags.jet_order.or(self.jet_order),
            phi_order: flags.phi_order.or(self.phi_order),
            f: flags.f.or(self.f),
            g: flags.g.or(self.g),
            h: flags.h.or(self.h),
            seed: flags.seed.or(self.seed),
        }
    }

    pub fn resolve(self) -> Result<Job, String> {
        let n = self.n.ok_or("missing dimension (--n)")?;
        if !(1..=kstar::jet::MAX_DIM).contains(&n) {
            return Err(format!("dimension {n} is not supported (must be 1..={})", kstar::jet::MAX_DIM));
        }
        let text = self.potential.ok_or("missing potential (--potential)")?;
        let potential: Box<dyn PotentialSource> = match text.trim().parse::<Builtin>() {
            Ok(kind) => Box::new(BuiltinPotential::new(kind, n)),
            Err(_) => Box::new(ExprPotential::parse(&text, n).map_err(|e| format!("potential: {e}"))?),
        };
        let nu_order = self.nu_order.unwrap_or(DEFAULT_NU_ORDER);
        let jet_order = self.jet_order.unwrap_or(DEFAULT_JET_ORDER);
        if jet_order < 2 {
            return Err(format!("jet order {jet_order} is below the minimum 2"));
        }
        let phi_order = self.phi_order.unwrap_or_else(|| required_phi_order(jet_order, nu_order as u32));
        let function = |name: &str, text: Option<String>| -> Result<Option<Function>, String> {
            text.map(|t| {
                parse_expression(&t, n)
                    .map(|expr| Function { text: t.clone(), expr })
                    .map_err(|e| format!("{name}: {e}"))
            })
            .transpose()
        };
        Ok(Job {
            n,
            potential,
            nu_order,
            jet_order,
            phi_order,
            f: function("f", self.f)?,
            g: function("g", self.g)?,
            h: function("h", self.h)?,
            seed: self.seed.unwrap_or(0),
        })
    }
}

pub struct Function {
    pub text: String,
    pub expr: crate::expr::Expr,
}

impl Function {
    pub fn jet(&self, n: usize, order: u32) -> Result<Jet, String> {
        self.expr.eval(n, order).map_err(|e| format!("{}: {e}", self.text))
    }
}

pub struct Job {
    pub n: usize,
    pub potential: Box<dyn PotentialSource>,
    pub nu_order: usize,
    pub jet_order: u32,
    pub phi_order: u32,
    pub f: Option<Function>,
    pub g: Option<Function>,
    pub h: Option<Function>,
    pub seed: u64,
}

impl Job {
    pub fn require<'a>(&self, name: &str, f: &'a Option<Function>) -> Result<&'a Function, String> {
        f.as_ref().ok_or_else(|| format!("missing function {name} (--{name})"))
    }
}
