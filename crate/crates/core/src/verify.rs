//! Executable checks of the algebraic identities behind the construction.
//!
//! Every check runs on deterministic pseudo-random inputs and compares
//! exactly. Failures become report entries with a witness; they are never
//! returned as errors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::calculus::{
    apply_symbol_operator, commutator, compose, compose_series, euler_apply, left_mult_symbol,
    q_apply, q_apply_coordinate, right_mult_phi_symbol,
};
use crate::error::Result;
use crate::geometry::{GeometryCache, Orientation, RhoPath};
use crate::jet::{builtin_potential, Builtin, Exponents, Jet, MultiIndex, Var};
use crate::potential::PotentialSource;
use crate::scalar::GaussRational;
use crate::star::{
    closed_form_t_reference, required_phi_order, star, star_graded, star_series, star_via_t, tensor_t,
};
use crate::symbol::{FiberIndex, FiberVar, NuSeries, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    pub witness: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReportConfig {
    pub potential: String,
    pub n: usize,
    pub phi_order: u32,
    pub nu_order: usize,
    pub jet_order: u32,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub config: ReportConfig,
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status == Status::Pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Appends the checks of `other`, keeping the list sorted by name.
    pub fn merge(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
        self.checks.sort_by(|a, b| a.name.cmp(&b.name));
    }
}

/// Seeded generator of small random test inputs.
pub struct TestRng(ChaCha8Rng);

impl TestRng {
    /// Independent streams for distinct `stream` labels under one seed.
    pub fn new(seed: u64, stream: &str) -> Self {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in stream.bytes() {
            h = (h ^ b as u64).wrapping_mul(0x0100_0000_01b3);
        }
        TestRng(ChaCha8Rng::seed_from_u64(seed ^ h))
    }

    fn coefficient(&mut self) -> GaussRational {
        loop {
            let re = self.0.gen_range(-3..=3);
            let im = if self.0.gen_bool(0.3) {
                self.0.gen_range(-2..=2)
            } else {
                0
            };
            let c = GaussRational::new(re.into(), im.into());
            if !c.is_zero() {
                return c;
            }
        }
    }

    fn polynomial_from(&mut self, n: usize, order: u32, monomials: Vec<MultiIndex>) -> Jet {
        let mut terms = Vec::new();
        for m in &monomials {
            if self.0.gen_bool(0.35) {
                terms.push((*m, self.coefficient()));
            }
        }
        if terms.is_empty() {
            let m = monomials[self.0.gen_range(0..monomials.len())];
            terms.push((m, self.coefficient()));
        }
        Jet::from_terms(n, order, terms)
    }

    /// A nonzero polynomial of total degree at most `degree`, as a jet of
    /// the given order.
    pub fn polynomial(&mut self, n: usize, degree: u32, order: u32) -> Jet {
        let mut ms = Vec::new();
        for a in 0..=degree {
            for b in 0..=degree - a {
                for h in Exponents::all_of_degree(n, a) {
                    for ah in Exponents::all_of_degree(n, b) {
                        ms.push(MultiIndex::new(h, ah));
                    }
                }
            }
        }
        self.polynomial_from(n, order, ms)
    }

    /// A nonzero polynomial in `z` only.
    pub fn holomorphic(&mut self, n: usize, degree: u32, order: u32) -> Jet {
        let ms = (0..=degree)
            .flat_map(|d| Exponents::all_of_degree(n, d))
            .map(|e| MultiIndex::new(e, Exponents::EMPTY))
            .collect();
        self.polynomial_from(n, order, ms)
    }

    /// A nonzero polynomial in `z̄` only.
    pub fn antiholomorphic(&mut self, n: usize, degree: u32, order: u32) -> Jet {
        let ms = (0..=degree)
            .flat_map(|d| Exponents::all_of_degree(n, d))
            .map(|e| MultiIndex::new(Exponents::EMPTY, e))
            .collect();
        self.polynomial_from(n, order, ms)
    }

    /// A symbol with a few random fiber monomials of `η̄`-degree at most
    /// `max_eta_bar` and `ζ̄`-degree at most `max_zeta_bar`.
    pub fn symbol(&mut self, n: usize, order: u32, max_eta_bar: u32, max_zeta_bar: u32) -> Symbol {
        let mut s = Symbol::zero(n, order);
        while s.is_zero() {
            for _ in 0..3 {
                let d = self.0.gen_range(0..=max_eta_bar);
                let es = Exponents::all_of_degree(n, d);
                let eb = es[self.0.gen_range(0..es.len())];
                let d = self.0.gen_range(0..=max_zeta_bar);
                let zs = Exponents::all_of_degree(n, d);
                let zb = zs[self.0.gen_range(0..zs.len())];
                let fi = FiberIndex {
                    eta_bar: eb,
                    zeta_bar: zb,
                    ..FiberIndex::ONE
                };
                let c = self.polynomial(n, 2, order);
                s = &s + &Symbol::monomial(fi, &c);
            }
        }
        s
    }
}

fn short(text: String) -> String {
    const LIMIT: usize = 240;
    if text.chars().count() <= LIMIT {
        return text;
    }
    let cut: String = text.chars().take(LIMIT).collect();
    format!("{cut}...")
}

/// `None` when the jets agree to their common order, otherwise a witness.
pub fn jet_witness(label: &str, a: &Jet, b: &Jet) -> Option<String> {
    let o = a.order().min(b.order());
    let (a, b) = (a.truncated(o), b.truncated(o));
    (a != b).then(|| short(format!("{label}: lhs - rhs = {}", &a - &b)))
}

pub fn symbol_witness(label: &str, a: &Symbol, b: &Symbol) -> Option<String> {
    let o = a.order().min(b.order());
    let (a, b) = (a.truncated(o), b.truncated(o));
    (a != b).then(|| short(format!("{label}: lhs - rhs = {:?}", &a - &b)))
}

pub fn series_witness(label: &str, a: &NuSeries<Jet>, b: &NuSeries<Jet>) -> Option<String> {
    a.iter()
        .zip(b.iter())
        .enumerate()
        .find_map(|(r, (x, y))| jet_witness(&format!("{label}, nu^{r}"), x, y))
}

struct Checks<'a>(Vec<CheckResult>, Option<&'a [&'a str]>);

impl Checks<'_> {
    fn run(&mut self, name: &str, body: impl FnOnce() -> Result<Option<String>>) {
        if self.1.is_some_and(|only| !only.contains(&name)) {
            return;
        }
        let (status, witness) = match body() {
            Ok(None) => (Status::Pass, String::new()),
            Ok(Some(w)) => (Status::Fail, w),
            Err(e) => (Status::Fail, format!("error: {e}")),
        };
        self.0.push(CheckResult {
            name: name.to_string(),
            status,
            witness,
        });
    }

    fn into_report(mut self, config: ReportConfig) -> VerificationReport {
        self.0.sort_by(|a, b| a.name.cmp(&b.name));
        VerificationReport {
            config,
            checks: self.0,
        }
    }
}

fn first<I>(items: I) -> Result<Option<String>>
where
    I: IntoIterator<Item = Result<Option<String>>>,
{
    for item in items {
        if let Some(w) = item? {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

fn config(g: &GeometryCache, nu_order: usize, jet_order: u32, seed: u64) -> ReportConfig {
    ReportConfig {
        potential: g.label().to_string(),
        n: g.n(),
        phi_order: g.phi_order(),
        nu_order,
        jet_order,
        seed,
    }
}

fn phi_jet(g: &GeometryCache, holo: &[usize], anti: &[usize]) -> Result<Jet> {
    g.potential_derivative(&MultiIndex::from_indices(holo, anti))
}

/// Number of random inputs per check.
pub const SAMPLES: usize = 20;

/// Random triples per associativity check.
pub const ASSOCIATIVITY_SAMPLES: usize = 10;

/// Test-jet order used by [`verify_algebraic_identities`].
pub fn identity_jet_order(g: &GeometryCache) -> u32 {
    g.phi_order().saturating_sub(3).min(6)
}

/// Jacobi identities, derivative rules for the inverse metric, the canonical
/// relations, commutation and symmetry of contravariant derivatives, the
/// commutators of symbols, the two forms of `Q`, and associativity and
/// faithfulness of symbol composition.
pub fn verify_algebraic_identities(g: &GeometryCache, seed: u64) -> VerificationReport {
    verify_algebraic_identities_only(g, seed, None)
}

/// [`verify_algebraic_identities`] restricted to the named checks.
pub fn verify_algebraic_identities_only(g: &GeometryCache, seed: u64, only: Option<&[&str]>) -> VerificationReport {
    let n = g.n();
    let w = identity_jet_order(g);
    let mut checks = Checks(Vec::new(), only);
    let ok = w >= 2;
    let too_short = || {
        Ok(Some(format!(
            "potential order {} leaves test jets of order {w} (< 2)",
            g.phi_order()
        )))
    };

    checks.run("jacobi_identity", || {
        if !ok {
            return too_short();
        }
        let o = w;
        let inv = |l, k| g.inverse_metric(l, k, o);
        let mut out = Vec::new();
        for l in 0..n {
            for q in 0..n {
                for p in 0..n {
                    let mut hl = Jet::zero(n, o - 1);
                    let mut hr = Jet::zero(n, o - 1);
                    let mut al = Jet::zero(n, o - 1);
                    let mut ar = Jet::zero(n, o - 1);
                    for k in 0..n {
                        hl = &hl + &(&inv(l, k)? * &inv(q, p)?.partial(Var::Holo(k))?);
                        hr = &hr + &(&inv(q, k)? * &inv(l, p)?.partial(Var::Holo(k))?);
                        // summation index is the barred slot here
                        al = &al + &(&inv(k, l)? * &inv(q, p)?.partial(Var::Antiholo(k))?);
                        ar = &ar + &(&inv(k, p)? * &inv(q, l)?.partial(Var::Antiholo(k))?);
                    }
                    out.push(Ok(jet_witness(&format!("holomorphic l={l} q={q} p={p}"), &hl, &hr)));
                    out.push(Ok(jet_witness(&format!("antiholomorphic k={l} q={q} p={p}"), &al, &ar)));
                }
            }
        }
        first(out)
    });

    checks.run("metric_derivative_rules", || {
        if !ok {
            return too_short();
        }
        let o = w;
        let mut out = Vec::new();
        for l in 0..n {
            for k in 0..n {
                let ginv = g.inverse_metric(l, k, o)?;
                for p in 0..n {
                    let lhs = ginv.partial(Var::Holo(p))?;
                    let mut rhs = Jet::zero(n, o - 1);
                    for s in 0..n {
                        let c = g.christoffel_holo(k, s, p, o - 1)?;
                        rhs = &rhs - &(&g.inverse_metric(l, s, o - 1)? * &c);
                    }
                    out.push(Ok(jet_witness(&format!("d g^(l={l},k={k}) / dz{p}"), &lhs, &rhs)));
                    let lhs = ginv.partial(Var::Antiholo(p))?;
                    let mut rhs = Jet::zero(n, o - 1);
                    for t in 0..n {
                        let c = g.christoffel_bar(l, p, t, o - 1)?;
                        rhs = &rhs - &(&c * &g.inverse_metric(t, k, o - 1)?);
                    }
                    out.push(Ok(jet_witness(&format!("d g^(l={l},k={k}) / dzbar{p}"), &lhs, &rhs)));
                }
            }
        }
        first(out)
    });

    checks.run("canonical_relations", || {
        if !ok {
            return too_short();
        }
        let mut rng = TestRng::new(seed, "canonical_relations");
        let mut out = Vec::new();
        for i in 0..SAMPLES {
            let u = rng.polynomial(n, 3, w);
            for l in 0..n {
                let dl_u = g.dbar_lower(l, &u)?;
                for q in 0..n {
                    let phi_q = phi_jet(g, &[], &[q])?.truncated(w);
                    let zq = Jet::variable(n, w, Var::Antiholo(q))?;
                    let delta = if l == q { u.clone() } else { Jet::zero(n, w) };
                    let lhs = &g.dbar_lower(l, &(&phi_q * &u))? - &(&phi_q * &dl_u);
                    out.push(Ok(jet_witness(&format!("sample {i}: [Dbar_{l}, Phi_{q}bar]"), &lhs, &Jet::zero(n, w))));
                    let lhs = &g.dbar_lower(l, &g.contravariant_apply(&u, q, Orientation::Antiholo)?)?
                        - &g.contravariant_apply(&dl_u, q, Orientation::Antiholo)?;
                    out.push(Ok(jet_witness(&format!("sample {i}: [Dbar_{l}, Dbar^{q}]"), &lhs, &Jet::zero(n, w))));
                    let lhs = &g.dbar_lower(l, &(&zq * &u))? - &(&zq * &dl_u);
                    out.push(Ok(jet_witness(&format!("sample {i}: [Dbar_{l}, zbar{q}]"), &lhs, &delta)));
                    let lhs = &g.contravariant_apply(&(&phi_q * &u), l, Orientation::Antiholo)?
                        - &(&phi_q * &g.contravariant_apply(&u, l, Orientation::Antiholo)?);
                    out.push(Ok(jet_witness(&format!("sample {i}: [Dbar^{l}, Phi_{q}bar]"), &lhs, &delta)));
                    let lhs = &g.dbar_lower(l, &g.dbar_lower(q, &u)?)? - &g.dbar_lower(q, &dl_u)?;
                    out.push(Ok(jet_witness(&format!("sample {i}: [Dbar_{l}, Dbar_{q}]"), &lhs, &Jet::zero(n, w))));
                }
            }
        }
        first(out)
    });

    checks.run("contravariant_commutation", || {
        if !ok {
            return too_short();
        }
        let mut rng = TestRng::new(seed, "contravariant_commutation");
        let mut out = Vec::new();
        for i in 0..SAMPLES {
            let u = rng.polynomial(n, 3, w);
            for o in [Orientation::Holo, Orientation::Antiholo] {
                for a in 0..n {
                    for b in a + 1..n {
                        let ab = g.contravariant_apply(&g.contravariant_apply(&u, b, o)?, a, o)?;
                        let ba = g.contravariant_apply(&g.contravariant_apply(&u, a, o)?, b, o)?;
                        out.push(Ok(jet_witness(&format!("sample {i}: {o:?} {a},{b}"), &ab, &ba)));
                    }
                }
            }
        }
        first(out)
    });

    checks.run("contravariant_tensor_symmetry", || {
        if w < 3 {
            return too_short();
        }
        let mut rng = TestRng::new(seed, "contravariant_tensor_symmetry");
        let mut out = Vec::new();
        for i in 0..SAMPLES.min(5) {
            let u = rng.polynomial(n, 3, w);
            for o in [Orientation::Holo, Orientation::Antiholo] {
                for e in Exponents::all_of_degree(n, 3) {
                    let idx = e.indices();
                    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
                    let apply = |p: &[usize; 3]| -> Result<Jet> {
                        p.iter().try_fold(u.clone(), |acc, &j| g.contravariant_apply(&acc, idx[j], o))
                    };
                    let base = apply(&perms[0])?;
                    for p in &perms[1..] {
                        out.push(Ok(jet_witness(&format!("sample {i}: {o:?} {idx:?} perm {p:?}"), &base, &apply(p)?)));
                    }
                }
            }
        }
        first(out)
    });

    checks.run("curvature_raising", || {
        if w < 3 {
            return too_short();
        }
        let o = w - 2;
        let mut out = Vec::new();
        for l in 0..n {
            for q in 0..n {
                for up in Exponents::all_of_degree(n, 2) {
                    let ix = up.indices();
                    let mut raised = Jet::zero(n, o);
                    for k1 in 0..n {
                        for k2 in 0..n {
                            let r = g.curvature_low(k1, k2, l, q, o)?;
                            let c = &g.inverse_metric(ix[0], k1, o)? * &g.inverse_metric(ix[1], k2, o)?;
                            raised = &raised + &(&c * &r);
                        }
                    }
                    let upper = g.curvature_upper(l, q, up, o)?;
                    out.push(Ok(jet_witness(&format!("l={l} q={q} uppers={ix:?}"), &raised, &upper)));
                }
            }
        }
        first(out)
    });

    checks.run("curvature_low_symmetry", || {
        if w < 3 {
            return too_short();
        }
        let o = w - 2;
        let direct = |k: usize, p: usize, l: usize, q: usize| -> Result<Jet> {
            let mut acc = -&phi_jet(g, &[k, p], &[l, q])?.truncated(o);
            for a in 0..n {
                for b in 0..n {
                    let t = &phi_jet(g, &[k, p], &[a])?.truncated(o) * &g.inverse_metric(a, b, o)?;
                    acc = &acc + &(&t * &phi_jet(g, &[b], &[l, q])?.truncated(o));
                }
            }
            Ok(acc)
        };
        let mut out = Vec::new();
        for k in 0..n {
            for p in 0..n {
                for l in 0..n {
                    for q in 0..n {
                        let r = g.curvature_low(k, p, l, q, o)?;
                        for (a, b, c, d) in [(k, p, l, q), (p, k, l, q), (k, p, q, l), (p, k, q, l)] {
                            out.push(Ok(jet_witness(&format!("R[{k}{p}{l}{q}] vs [{a}{b}{c}{d}]"), &r, &direct(a, b, c, d)?)));
                        }
                    }
                }
            }
        }
        first(out)
    });

    checks.run("symbol_commutators", || {
        if !ok {
            return too_short();
        }
        let mut rng = TestRng::new(seed, "symbol_commutators");
        let mut out = Vec::new();
        for i in 0..SAMPLES {
            let f = rng.symbol(n, w, 2, 1);
            for l in 0..n {
                let phi_l = Symbol::from_jet(&phi_jet(g, &[], &[l])?.truncated(w));
                let lhs = commutator(g, &f, &phi_l)?;
                out.push(Ok(symbol_witness(&format!("sample {i}: [F, Phi_{l}bar]"), &lhs, &f.fiber_partial(FiberVar::EtaBar(l)))));
                let eta = Symbol::fiber_monomial(n, w, FiberIndex::var(FiberVar::EtaBar(l)));
                let lhs = commutator(g, &eta, &f)?;
                let rhs = f.try_map_jets(w - 1, |j| g.contravariant_apply(j, l, Orientation::Antiholo))?;
                out.push(Ok(symbol_witness(&format!("sample {i}: [etabar{l}, F]"), &lhs, &rhs)));
                let zeta = Symbol::fiber_monomial(n, w, FiberIndex::var(FiberVar::ZetaBar(l)));
                let lhs = commutator(g, &zeta, &f)?;
                let rhs = f.try_map_jets(w - 1, |j| g.dbar_lower(l, j))?;
                out.push(Ok(symbol_witness(&format!("sample {i}: [zetabar{l}, F]"), &lhs, &rhs)));
            }
        }
        first(out)
    });

    checks.run("q_forms_agree", || {
        if !ok {
            return too_short();
        }
        let mut rng = TestRng::new(seed, "q_forms_agree");
        let mut out = Vec::new();
        for i in 0..SAMPLES {
            let f = rng.symbol(n, w, 2, 0);
            let (a, b) = (q_apply(g, &f)?, q_apply_coordinate(g, &f)?);
            out.push(Ok(symbol_witness(&format!("sample {i}"), &a, &b)));
        }
        first(out)
    });

    checks.run("compose_associative", || {
        if !ok {
            return too_short();
        }
        let mut rng = TestRng::new(seed, "compose_associative");
        let mut out = Vec::new();
        for i in 0..SAMPLES.min(5) {
            let a = rng.symbol(n, w, 1, 1);
            let b = rng.symbol(n, w, 1, 1);
            let c = rng.symbol(n, w, 1, 1);
            let lhs = compose(g, &compose(g, &a, &b)?, &c)?;
            let rhs = compose(g, &a, &compose(g, &b, &c)?)?;
            out.push(Ok(symbol_witness(&format!("sample {i}"), &lhs, &rhs)));
        }
        first(out)
    });

    checks.run("compose_faithful", || {
        if !ok {
            return too_short();
        }
        let mut rng = TestRng::new(seed, "compose_faithful");
        let mut out = Vec::new();
        for i in 0..SAMPLES.min(10) {
            let a = rng.symbol(n, w, 1, 1);
            let b = rng.symbol(n, w, 1, 1);
            let u = rng.polynomial(n, 3, w);
            let lhs = apply_symbol_operator(g, &compose(g, &a, &b)?, &u)?;
            let rhs = apply_symbol_operator(g, &a, &apply_symbol_operator(g, &b, &u)?)?;
            out.push(Ok(jet_witness(&format!("sample {i}"), &lhs, &rhs)));
        }
        first(out)
    });

    checks.into_report(config(g, 0, w, seed))
}

fn lift(j: &Jet, nu_order: usize) -> NuSeries<Jet> {
    let mut c = vec![Jet::zero(j.n(), j.order()); nu_order + 1];
    c[0] = j.clone();
    NuSeries::new(c)
}

/// `Σ_r ν^r Σ_{|α|=r} (1/α!) ∂^α_{z̄} f ∂^α_z g`, the flat-space product,
/// computed with plain partial derivatives.
pub fn wick_star(f: &Jet, g: &Jet, nu_order: usize, jet_order: u32) -> Result<NuSeries<Jet>> {
    let n = f.n();
    let mut out = Vec::with_capacity(nu_order + 1);
    for r in 0..=nu_order as u32 {
        let mut acc = Jet::zero(n, jet_order);
        for alpha in Exponents::all_of_degree(n, r) {
            let df = f.derivative(&MultiIndex::new(Exponents::EMPTY, alpha))?;
            let dg = g.derivative(&MultiIndex::new(alpha, Exponents::EMPTY))?;
            let w = alpha.factorial().recip()?;
            acc = &acc + &(&df * &dg).scale_rational(&w);
        }
        if acc.order() < jet_order {
            return Err(crate::error::exhausted("wick product", jet_order as i64, acc.order() as i64));
        }
        out.push(acc);
    }
    Ok(NuSeries::new(out))
}

fn is_flat(g: &GeometryCache) -> bool {
    builtin_potential(Builtin::Flat, g.n(), g.phi_order()).is_ok_and(|flat| &flat == g.phi())
}

/// Associativity, unit and separation laws, the defining relations, the
/// governing equation `E(F) = νQ(F)`, commutation with right multiplication
/// by `∂Φ/∂z̄`, the Poisson bracket and, on flat space, the Wick formula.
pub fn verify_star_laws(g: &GeometryCache, nu_order: usize, jet_order: u32, seed: u64) -> VerificationReport {
    verify_star_laws_only(g, nu_order, jet_order, seed, None)
}

/// [`verify_star_laws`] restricted to the named checks.
pub fn verify_star_laws_only(
    g: &GeometryCache,
    nu_order: usize,
    jet_order: u32,
    seed: u64,
    only: Option<&[&str]>,
) -> VerificationReport {
    let n = g.n();
    let (nn, m) = (nu_order, jet_order);
    let mid = m + nn as u32;
    let mut checks = Checks(Vec::new(), only);
    let samples = SAMPLES;

    checks.run("associativity", || {
        let mut rng = TestRng::new(seed, "associativity");
        let mut out = Vec::new();
        for i in 0..ASSOCIATIVITY_SAMPLES {
            let f = rng.polynomial(n, 3, mid);
            let gg = rng.polynomial(n, 3, mid);
            let h = rng.polynomial(n, 3, mid);
            let fg = star_graded(g, &f, &gg, nn, m)?;
            let gh = star_graded(g, &gg, &h, nn, m)?;
            let left = star_series(g, &fg, &lift(&h, nn), m)?;
            let right = star_series(g, &lift(&f, nn), &gh, m)?;
            out.push(Ok(series_witness(&format!("triple {i}"), &left, &right)));
        }
        first(out)
    });

    checks.run("unit_law", || {
        let mut rng = TestRng::new(seed, "unit_law");
        let one = Jet::one(n, mid);
        let mut out = Vec::new();
        for i in 0..samples / 2 {
            let f = rng.polynomial(n, 3, mid);
            let expect = lift(&f.truncated(m), nn);
            out.push(Ok(series_witness(&format!("sample {i}: f*1"), &star(g, &f, &one, nn, m)?.series, &expect)));
            out.push(Ok(series_witness(&format!("sample {i}: 1*f"), &star(g, &one, &f, nn, m)?.series, &expect)));
        }
        first(out)
    });

    checks.run("separation_of_variables", || {
        let mut rng = TestRng::new(seed, "separation_of_variables");
        let mut out = Vec::new();
        for i in 0..samples / 2 {
            let a = rng.holomorphic(n, 3, mid);
            let b = rng.antiholomorphic(n, 3, mid);
            let v = rng.polynomial(n, 3, mid);
            let lhs = star(g, &a, &v, nn, m)?.series;
            out.push(Ok(series_witness(&format!("sample {i}: a*v"), &lhs, &lift(&(&a * &v).truncated(m), nn))));
            let lhs = star(g, &v, &b, nn, m)?.series;
            out.push(Ok(series_witness(&format!("sample {i}: u*b"), &lhs, &lift(&(&v * &b).truncated(m), nn))));
        }
        first(out)
    });

    checks.run("defining_relations", || {
        let mut rng = TestRng::new(seed, "defining_relations");
        let mut out = Vec::new();
        for i in 0..samples.min(4) {
            let v = rng.polynomial(n, 3, mid);
            for k in 0..n {
                let phi_k = phi_jet(g, &[k], &[])?.truncate(mid)?;
                let mut expect = lift(&(&phi_k * &v).truncated(m), nn).into_components();
                if nn >= 1 {
                    expect[1] = v.partial(Var::Holo(k))?.truncated(m);
                }
                let lhs = star(g, &phi_k, &v, nn, m)?.series;
                out.push(Ok(series_witness(&format!("sample {i}: L(dPhi/dz{k})"), &lhs, &NuSeries::new(expect))));
                let phi_l = phi_jet(g, &[], &[k])?.truncate(mid)?;
                let mut expect = lift(&(&phi_l * &v).truncated(m), nn).into_components();
                if nn >= 1 {
                    expect[1] = v.partial(Var::Antiholo(k))?.truncated(m);
                }
                let lhs = star(g, &v, &phi_l, nn, m)?.series;
                out.push(Ok(series_witness(&format!("sample {i}: R(dPhi/dzbar{k})"), &lhs, &NuSeries::new(expect))));
            }
        }
        first(out)
    });

    checks.run("governing_equation", || {
        let mut rng = TestRng::new(seed, "governing_equation");
        let mut out = Vec::new();
        for i in 0..samples {
            let f = rng.polynomial(n, 3, mid);
            let fs = left_mult_symbol(g, &lift(&f, nn))?;
            out.push(Ok(symbol_witness(&format!("sample {i}: E(F_0)"), &euler_apply(&fs[0]), &Symbol::zero(n, mid))));
            for r in 1..=nn {
                let lhs = euler_apply(&fs[r]);
                let rhs = q_apply(g, &fs[r - 1])?;
                out.push(Ok(symbol_witness(&format!("sample {i}: nu^{r}"), &lhs, &rhs)));
            }
        }
        first(out)
    });

    checks.run("right_multiplication_commutes", || {
        let mut rng = TestRng::new(seed, "right_multiplication_commutes");
        let mut out = Vec::new();
        for i in 0..samples.min(4) {
            let f = rng.polynomial(n, 3, mid);
            let fs = left_mult_symbol(g, &lift(&f, nn))?;
            for l in 0..n {
                let mut r = right_mult_phi_symbol(g, l, mid)?.into_components();
                r.resize(nn + 1, Symbol::zero(n, mid));
                r.truncate(nn + 1);
                let r = NuSeries::new(r);
                let ab = compose_series(g, &fs, &r)?;
                let ba = compose_series(g, &r, &fs)?;
                for k in 0..=nn {
                    out.push(Ok(symbol_witness(&format!("sample {i}: l={l} nu^{k}"), &ab[k].truncated(m), &ba[k].truncated(m))));
                }
            }
        }
        first(out)
    });

    checks.run("poisson_bracket", || {
        if nn == 0 {
            return Ok(None);
        }
        let mut rng = TestRng::new(seed, "poisson_bracket");
        let mut out = Vec::new();
        for i in 0..samples {
            let f = rng.polynomial(n, 3, mid);
            let h = rng.polynomial(n, 3, mid);
            let lhs = &star(g, &f, &h, 1, m)?.series[1] - &star(g, &h, &f, 1, m)?.series[1];
            let mut rhs = Jet::zero(n, m);
            for l in 0..n {
                for k in 0..n {
                    let a = &f.partial(Var::Antiholo(l))? * &h.partial(Var::Holo(k))?;
                    let b = &h.partial(Var::Antiholo(l))? * &f.partial(Var::Holo(k))?;
                    rhs = &rhs + &(&g.inverse_metric(l, k, m)? * &(&a - &b));
                }
            }
            out.push(Ok(jet_witness(&format!("sample {i}"), &lhs, &rhs)));
        }
        first(out)
    });

    if is_flat(g) {
        checks.run("wick_oracle", || {
            let mut rng = TestRng::new(seed, "wick_oracle");
            let mut out = Vec::new();
            for i in 0..samples {
                let f = rng.polynomial(n, 3, mid);
                let h = rng.polynomial(n, 3, mid);
                let lhs = star(g, &f, &h, nn, m)?.series;
                out.push(Ok(series_witness(&format!("sample {i}"), &lhs, &wick_star(&f, &h, nn, m)?)));
            }
            first(out)
        });
    }

    checks.into_report(config(g, nu_order, jet_order, seed))
}

/// Closed form of `T` through `ν⁴`, the two derivations of `ρ₂₃` and `ρ₃₂`,
/// agreement of the two paths for `ρ₂₂`, `star` against `star_via_t`, and
/// stability of all of these when the potential is expanded one order
/// further.
pub fn verify_cross_checks(
    source: &dyn PotentialSource,
    nu_order: usize,
    jet_order: u32,
    seed: u64,
) -> Result<VerificationReport> {
    verify_cross_checks_at(source, nu_order, jet_order, seed, required_phi_order(jet_order, nu_order as u32))
}

/// [`verify_cross_checks`] with the potential expanded to `phi_order`.
pub fn verify_cross_checks_at(
    source: &dyn PotentialSource,
    nu_order: usize,
    jet_order: u32,
    seed: u64,
    phi_order: u32,
) -> Result<VerificationReport> {
    let n = source.dimension();
    let p = phi_order;
    let g = GeometryCache::from_source(source, p)?;
    let (nn, m) = (nu_order, jet_order);
    let mut checks = Checks(Vec::new(), None);

    let mut rng = TestRng::new(seed, "cross_checks");
    let pairs: Vec<(Jet, Jet)> = (0..SAMPLES / 4)
        .map(|_| (rng.polynomial(n, 3, m + nn as u32), rng.polynomial(n, 3, m + nn as u32)))
        .collect();

    // Everything the stability check recomputes.
    let outputs = |g: &GeometryCache| -> Result<(crate::star::TensorT, crate::star::TensorT, Vec<NuSeries<Jet>>)> {
        let t = tensor_t(g, nn, m)?;
        let closed = closed_form_t_reference(g, nn, m)?;
        let stars = pairs
            .iter()
            .map(|(u, v)| Ok(star(g, u, v, nn, m)?.series))
            .collect::<Result<_>>()?;
        Ok((t, closed, stars))
    };
    let base = outputs(&g);

    checks.run("closed_form_t", || {
        let (t, closed, _) = base.clone()?;
        let t4 = t.truncated(4, m);
        Ok(t4
            .series
            .iter()
            .zip(closed.series.iter())
            .enumerate()
            .find_map(|(r, (a, b))| symbol_witness(&format!("nu^{r}"), a, b)))
    });

    checks.run("rho_cross_derivation", || {
        let rho22 = g.rho(2, 2, m + 1)?;
        let anti = g.symmetrized_covariant_derivative(&rho22, Orientation::Antiholo)?;
        let holo = g.symmetrized_covariant_derivative(&rho22, Orientation::Holo)?;
        Ok(symbol_witness("rho_2,3", &anti, &g.rho(2, 3, m)?)
            .or_else(|| symbol_witness("rho_3,2", &holo, &g.rho(3, 2, m).ok()?)))
    });

    checks.run("rho_paths_agree", || {
        Ok(symbol_witness(
            "rho_2,2",
            &g.rho_via(2, 2, RhoPath::LowerAntiholo, m)?,
            &g.rho_via(2, 2, RhoPath::LowerHolo, m)?,
        ))
    });

    checks.run("star_via_t", || {
        let (t, _, stars) = base.clone()?;
        let mut out = Vec::new();
        for (i, ((u, v), s)) in pairs.iter().zip(&stars).enumerate() {
            out.push(Ok(series_witness(&format!("pair {i}"), &star_via_t(&g, &t, u, v, m)?, s)));
        }
        first(out)
    });

    checks.run("phi_order_stability", || {
        let (t, closed, stars) = base.clone()?;
        let g1 = GeometryCache::from_source(source, p + 1)?;
        let (t1, closed1, stars1) = outputs(&g1)?;
        if t != t1 {
            return Ok(Some("tensor T changed".into()));
        }
        if closed != closed1 {
            return Ok(Some("closed-form T changed".into()));
        }
        Ok(stars
            .iter()
            .zip(&stars1)
            .enumerate()
            .find_map(|(i, (a, b))| series_witness(&format!("star pair {i}"), a, b)))
    });

    Ok(checks.into_report(config(&g, nu_order, jet_order, seed)))
}

/// All three groups on one potential, with the geometry expanded to the
/// order the star-product checks need.
pub fn verify_all(
    source: &dyn PotentialSource,
    nu_order: usize,
    jet_order: u32,
    seed: u64,
) -> Result<VerificationReport> {
    verify_all_at(source, nu_order, jet_order, seed, required_phi_order(jet_order, nu_order as u32))
}

/// [`verify_all`] with the potential expanded to `phi_order`; too short an
/// expansion shows up as failing checks.
pub fn verify_all_at(
    source: &dyn PotentialSource,
    nu_order: usize,
    jet_order: u32,
    seed: u64,
    phi_order: u32,
) -> Result<VerificationReport> {
    let p = phi_order;
    let g = GeometryCache::from_source(source, p)?;
    let mut report = verify_algebraic_identities(&g, seed);
    report.config = config(&g, nu_order, jet_order, seed);
    report.merge(verify_star_laws(&g, nu_order, jet_order, seed));
    report.merge(verify_cross_checks_at(source, nu_order, jet_order, seed, p)?);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Corruption;
    use crate::potential::{BuiltinPotential, PolynomialPotential};

    fn cache(kind: Builtin, n: usize, order: u32) -> GeometryCache {
        GeometryCache::new(builtin_potential(kind, n, order).unwrap()).unwrap()
    }

    fn assert_passes(r: &VerificationReport) {
        let bad: Vec<_> = r.failures().collect();
        assert!(bad.is_empty(), "{bad:#?}");
    }

    #[test]
    fn identities_hold_on_builtins() {
        for kind in Builtin::ALL {
            assert_passes(&verify_algebraic_identities(&cache(kind, 1, 9), 1));
        }
    }

    #[test]
    fn identities_hold_on_random_potential() {
        let p = PolynomialPotential::random_perturbed_flat(2, 5).unwrap();
        let g = GeometryCache::from_source(&p, 9).unwrap();
        assert_passes(&verify_algebraic_identities(&g, 3));
    }

    #[test]
    fn corrupted_connection_is_caught() {
        let phi = builtin_potential(Builtin::FubiniStudy, 1, 9).unwrap();
        let g = GeometryCache::with_corruption(phi.clone(), Corruption::FlipChristoffelSign).unwrap();
        let r = verify_algebraic_identities(&g, 1);
        assert_eq!(r.check("q_forms_agree").unwrap().status, Status::Fail);
        assert_eq!(r.check("metric_derivative_rules").unwrap().status, Status::Fail);
        assert!(!r.check("q_forms_agree").unwrap().witness.is_empty());

        let g = GeometryCache::with_corruption(phi, Corruption::FlipConnectionTerm).unwrap();
        let r = verify_algebraic_identities(&g, 1);
        let c = r.check("canonical_relations").unwrap();
        assert_eq!(c.status, Status::Fail);
        assert!(c.witness.contains("Dbar_0"), "{}", c.witness);
    }

    #[test]
    fn star_laws_on_flat_include_wick() {
        let g = cache(Builtin::Flat, 1, required_phi_order(3, 3));
        let r = verify_star_laws(&g, 3, 3, 2);
        assert!(r.check("wick_oracle").is_some());
        assert_passes(&r);
    }

    #[test]
    fn star_laws_with_zero_nu_order() {
        let g = cache(Builtin::FubiniStudy, 1, required_phi_order(3, 0));
        assert_passes(&verify_star_laws(&g, 0, 3, 2));
    }

    #[test]
    fn wick_matches_known_product() {
        let zb2 = Jet::monomial(1, 6, MultiIndex::from_indices(&[], &[0, 0]), GaussRational::one());
        let z2 = Jet::monomial(1, 6, MultiIndex::from_indices(&[0, 0], &[]), GaussRational::one());
        let w = wick_star(&zb2, &z2, 2, 4).unwrap();
        assert_eq!(w[0], (&zb2 * &z2).truncated(4));
        assert_eq!(w[1], Jet::monomial(1, 4, MultiIndex::from_indices(&[0], &[0]), GaussRational::from_integer(4)));
        assert_eq!(w[2], Jet::constant(1, 4, GaussRational::from_integer(2)));
    }

    #[test]
    fn cross_checks_on_hyperbolic() {
        let r = verify_cross_checks(&BuiltinPotential::new(Builtin::Hyperbolic, 1), 4, 2, 0).unwrap();
        assert_passes(&r);
    }

    #[test]
    fn report_is_sorted_and_deterministic() {
        let src = BuiltinPotential::new(Builtin::Flat, 1);
        let a = verify_all(&src, 2, 2, 9).unwrap();
        let b = verify_all(&src, 2, 2, 9).unwrap();
        assert_eq!(a, b);
        let names: Vec<_> = a.checks.iter().map(|c| c.name.clone()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        assert!(a.passed());
    }
}
