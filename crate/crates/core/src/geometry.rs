//! Metric, connection and curvature data derived from a potential jet.
//!
//! All tensor components are jets around the chart origin. Every accessor
//! that takes an `order` returns the component exact to exactly that order,
//! or fails with [`Error::OrderExhausted`] when the potential expansion is
//! too short. Components are cached by index and by the highest order
//! computed so far.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::error::{exhausted, Error, Result};
use crate::jet::{check_shape, Exponents, Jet, MultiIndex, Var};
use crate::potential::PotentialSource;
use crate::scalar::GaussRational;
use crate::symbol::{FiberIndex, FiberVar, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    Holo,
    Antiholo,
}

/// Deliberate defects for negative-control tests of the verification suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Corruption {
    /// `christoffel_bar` returns `-Γ`.
    FlipChristoffelSign,
    /// `dbar_lower` adds `Φ_{l̄q̄} D̄^q` instead of subtracting it.
    FlipConnectionTerm,
}

/// Which canonical fiber polynomial to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CanonicalSymbol {
    /// `γ = g_{pq̄} η^p η̄^q`
    Gamma,
    /// `ρ_{r,s}`, `r, s ≥ 2`
    Rho(u32, u32),
    /// `ρ̃ = R_{k₁k₂q̄₁q̄₂} g^{q̄₁p₁} g^{q̄₂p₂} R_{p₁p₂l̄₁l̄₂} η^{k₁}η^{k₂}η̄^{l₁}η̄^{l₂}`
    RhoTilde,
}

/// How a canonical tensor `R_{k₁…k_r l̄₁…l̄_s}` is assembled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RhoPath {
    /// Lower the upper indices of `-D̄^{l₁}…D̄^{l_r} Φ_{l̄q̄}` (needs `s = 2`).
    LowerAntiholo,
    /// Lower the upper indices of `-D^{k₁}…D^{k_s} Φ_{kp}` (needs `r = 2`).
    LowerHolo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum TensorKey {
    /// `D̄^α Φ_{l̄q̄}` with `l ≤ q`
    AntiTower(usize, usize, Exponents),
    /// `D^β Φ_{kp}` with `k ≤ p`
    HoloTower(usize, usize, Exponents),
    /// `Γ^t̄_{l̄q̄}` with `l ≤ q`
    ChristoffelBar(usize, usize, usize),
    /// `Γ^t_{kp}` with `k ≤ p`
    ChristoffelHolo(usize, usize, usize),
    /// `R_{kpl̄q̄}` with `k ≤ p`, `l ≤ q`
    CurvatureLow(usize, usize, usize, usize),
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

pub struct GeometryCache {
    n: usize,
    label: String,
    phi: Jet,
    /// `g^{l̄k}(0)`, indexed `[l][k]`.
    base_inverse: Vec<Vec<GaussRational>>,
    corruption: Option<Corruption>,
    derivs: RwLock<HashMap<MultiIndex, Jet>>,
    inverse: RwLock<Option<Vec<Vec<Jet>>>>,
    /// Truncations of the inverse metric, one per order asked for.
    grids: RwLock<HashMap<u32, Arc<Vec<Vec<Jet>>>>>,
    tensors: RwLock<HashMap<TensorKey, Jet>>,
}

impl std::fmt::Debug for GeometryCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeometryCache")
            .field("label", &self.label)
            .field("n", &self.n)
            .field("phi_order", &self.phi.order())
            .finish_non_exhaustive()
    }
}

/// Inverts a constant matrix by Gauss-Jordan elimination.
fn invert_constant(m: &[Vec<GaussRational>]) -> Result<Vec<Vec<GaussRational>>> {
    let n = m.len();
    let mut a: Vec<Vec<GaussRational>> = m.to_vec();
    let mut inv: Vec<Vec<GaussRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { GaussRational::one() } else { GaussRational::zero() })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or(Error::DegenerateMetric)?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col].recip()?;
        for j in 0..n {
            a[col][j] = &a[col][j] * &p;
            inv[col][j] = &inv[col][j] * &p;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..n {
                let t = &a[col][j] * &f;
                a[r][j] -= &t;
                let t = &inv[col][j] * &f;
                inv[r][j] -= &t;
            }
        }
    }
    Ok(inv)
}

impl GeometryCache {
    pub fn new(phi: Jet) -> Result<Self> {
        Self::build(phi, String::from("custom"), None)
    }

    pub fn from_source(source: &dyn PotentialSource, phi_order: u32) -> Result<Self> {
        Self::build(source.expand(phi_order)?, source.label(), None)
    }

    /// A cache with a deliberate defect, for negative-control tests.
    pub fn with_corruption(phi: Jet, corruption: Corruption) -> Result<Self> {
        Self::build(phi, String::from("corrupted"), Some(corruption))
    }

    fn build(phi: Jet, label: String, corruption: Option<Corruption>) -> Result<Self> {
        let n = phi.n();
        check_shape(n, phi.order())?;
        if phi.order() < 2 {
            return Err(exhausted("metric", 2, phi.order() as i64));
        }
        let g0: Vec<Vec<GaussRational>> = (0..n)
            .map(|k| {
                (0..n)
                    .map(|l| phi.coeff(&MultiIndex::from_indices(&[k], &[l])))
                    .collect()
            })
            .collect();
        // g0[k][l] = g_{kl̄}(0); its matrix inverse is indexed [l][k].
        let base_inverse = invert_constant(&g0)?;
        Ok(GeometryCache {
            n,
            label,
            phi,
            base_inverse,
            corruption,
            derivs: RwLock::new(HashMap::new()),
            inverse: RwLock::new(None),
            grids: RwLock::new(HashMap::new()),
            tensors: RwLock::new(HashMap::new()),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn phi(&self) -> &Jet {
        &self.phi
    }

    pub fn phi_order(&self) -> u32 {
        self.phi.order()
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange {
                index: i + 1,
                n: self.n,
            });
        }
        Ok(())
    }

    fn cached<F>(&self, key: TensorKey, order: u32, compute: F) -> Result<Jet>
    where
        F: FnOnce() -> Result<Jet>,
    {
        if let Some(j) = self.tensors.read().unwrap().get(&key) {
            if j.order() >= order {
                return Ok(j.truncated(order));
            }
        }
        let j = compute()?;
        debug_assert_eq!(j.order(), order);
        let mut map = self.tensors.write().unwrap();
        let keep = map.get(&key).is_some_and(|old| old.order() >= j.order());
        if !keep {
            map.insert(key, j.clone());
        }
        Ok(j)
    }

    /// `∂^{|idx|}Φ / ∂z^{holo} ∂z̄^{antiholo}`, exact to `Φ.order - |idx|`.
    pub fn potential_derivative(&self, idx: &MultiIndex) -> Result<Jet> {
        if idx.degree() > self.phi.order() {
            return Err(exhausted(
                format!("potential derivative {idx:?}"),
                idx.degree() as i64,
                self.phi.order() as i64,
            ));
        }
        if let Some(j) = self.derivs.read().unwrap().get(idx) {
            return Ok(j.clone());
        }
        let j = self.phi.derivative(idx)?;
        self.derivs.write().unwrap().insert(*idx, j.clone());
        Ok(j)
    }

    fn phi_derivative_to(&self, holo: &[usize], antiholo: &[usize], order: u32) -> Result<Jet> {
        let idx = MultiIndex::from_indices(holo, antiholo);
        self.potential_derivative(&idx)?.truncate(order)
    }

    /// `g_{kl̄}`.
    pub fn metric(&self, k: usize, l: usize) -> Result<Jet> {
        self.check_index(k)?;
        self.check_index(l)?;
        self.potential_derivative(&MultiIndex::from_indices(&[k], &[l]))
    }

    /// Highest order to which the inverse metric can be computed.
    pub fn inverse_order(&self) -> u32 {
        self.phi.order() - 2
    }

    fn shared_inverse_grid(&self, order: u32) -> Result<Arc<Vec<Vec<Jet>>>> {
        if let Some(grid) = self.grids.read().unwrap().get(&order) {
            return Ok(grid.clone());
        }
        let grid = Arc::new(self.inverse_grid(order)?);
        self.grids.write().unwrap().insert(order, grid.clone());
        Ok(grid)
    }

    fn inverse_grid(&self, order: u32) -> Result<Vec<Vec<Jet>>> {
        if order > self.inverse_order() {
            return Err(exhausted(
                "inverse metric",
                order as i64,
                self.inverse_order() as i64,
            ));
        }
        if let Some(grid) = self.inverse.read().unwrap().as_ref() {
            if grid[0][0].order() >= order {
                return Ok(grid
                    .iter()
                    .map(|row| row.iter().map(|j| j.truncated(order)).collect())
                    .collect());
            }
        }
        let n = self.n;
        let constant = |c: &GaussRational| Jet::constant(n, order, c.clone());
        // g = g0 + h, so g⁻¹ = Σ_j (-g0⁻¹ h)^j g0⁻¹.
        let mut h = vec![vec![Jet::zero(n, order); n]; n];
        for (k, row) in h.iter_mut().enumerate() {
            for (l, cell) in row.iter_mut().enumerate() {
                let g = self.metric(k, l)?.truncate(order)?;
                *cell = &g - &constant(&g.constant_term());
            }
        }
        let a: Vec<Vec<Jet>> = self
            .base_inverse
            .iter()
            .map(|row| row.iter().map(constant).collect())
            .collect();
        let step: Vec<Vec<Jet>> = (0..n)
            .map(|l| {
                (0..n)
                    .map(|m| {
                        let mut acc = Jet::zero(n, order);
                        for k in 0..n {
                            acc = &acc - &(&a[l][k] * &h[k][m]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let mut term = a.clone();
        let mut sum = a;
        for _ in 0..order {
            term = (0..n)
                .map(|l| {
                    (0..n)
                        .map(|k| {
                            let mut acc = Jet::zero(n, order);
                            for m in 0..n {
                                acc = &acc + &(&step[l][m] * &term[m][k]);
                            }
                            acc
                        })
                        .collect()
                })
                .collect();
            if term.iter().flatten().all(Jet::is_zero) {
                break;
            }
            for l in 0..n {
                for k in 0..n {
                    sum[l][k] = &sum[l][k] + &term[l][k];
                }
            }
        }
        let mut slot = self.inverse.write().unwrap();
        if slot.as_ref().map_or(true, |g| g[0][0].order() < order) {
            *slot = Some(sum.clone());
        }
        Ok(sum)
    }

    /// `g^{l̄k}` exact to `order`.
    pub fn inverse_metric(&self, l: usize, k: usize, order: u32) -> Result<Jet> {
        self.check_index(l)?;
        self.check_index(k)?;
        Ok(self.inverse_grid(order)?[l][k].clone())
    }

    /// The full inverse metric grid `[l][k] = g^{l̄k}` at the highest
    /// available order.
    pub fn invert_metric(&self) -> Result<Vec<Vec<Jet>>> {
        self.inverse_grid(self.inverse_order())
    }

    /// `D̄^i f = g^{īk} ∂f/∂z^k` (antiholomorphic orientation) or
    /// `D^i f = g^{l̄i} ∂f/∂z̄^l` (holomorphic orientation).
    ///
    /// The result is exact to `min(f.order - 1, Φ.order - 2)`.
    pub fn contravariant_apply(&self, f: &Jet, index: usize, orientation: Orientation) -> Result<Jet> {
        self.check_index(index)?;
        if f.order() == 0 {
            return Err(exhausted("contravariant derivative", 1, 0));
        }
        let order = (f.order() - 1).min(self.inverse_order());
        let f = f.truncated(order + 1);
        let grid = self.shared_inverse_grid(order)?;
        let mut acc = Jet::zero(self.n, order);
        for j in 0..self.n {
            let (g, var) = match orientation {
                Orientation::Antiholo => (&grid[index][j], Var::Holo(j)),
                Orientation::Holo => (&grid[j][index], Var::Antiholo(j)),
            };
            let d = f.partial(var)?;
            if !d.is_zero() {
                acc = &acc + &(g * &d);
            }
        }
        Ok(acc)
    }

    /// Applies `D̄^α` (or `D^α`) to `f`.
    pub fn contravariant_apply_multi(
        &self,
        f: &Jet,
        alpha: Exponents,
        orientation: Orientation,
    ) -> Result<Jet> {
        alpha.indices().into_iter().try_fold(f.clone(), |acc, i| {
            self.contravariant_apply(&acc, i, orientation)
        })
    }

    /// `D̄_l f = ∂f/∂z̄^l - Φ_{l̄q̄} D̄^q f`.
    pub fn dbar_lower(&self, l: usize, f: &Jet) -> Result<Jet> {
        self.check_index(l)?;
        let mut acc = f.partial(Var::Antiholo(l))?;
        for q in 0..self.n {
            let d = self.contravariant_apply(f, q, Orientation::Antiholo)?;
            if d.is_zero() {
                continue;
            }
            let order = d.order().min(acc.order());
            let phi_lq = self.phi_derivative_to(&[], &[l, q], order)?;
            acc = match self.corruption {
                Some(Corruption::FlipConnectionTerm) => &acc + &(&phi_lq * &d),
                _ => &acc - &(&phi_lq * &d),
            };
        }
        Ok(acc)
    }

    /// Highest order available for `D̄^α Φ_{l̄q̄}` with `|α| = level`.
    pub fn tower_order(&self, level: u32) -> i64 {
        self.phi.order() as i64 - 2 - level as i64
    }

    /// `D̄^α Φ_{l̄q̄}` exact to `order`.
    pub fn antiholo_tower(&self, l: usize, q: usize, alpha: Exponents, order: u32) -> Result<Jet> {
        self.tower(Orientation::Antiholo, l, q, alpha, order)
    }

    /// `D^β Φ_{kp}` exact to `order`.
    pub fn holo_tower(&self, k: usize, p: usize, beta: Exponents, order: u32) -> Result<Jet> {
        self.tower(Orientation::Holo, k, p, beta, order)
    }

    fn tower(&self, o: Orientation, a: usize, b: usize, alpha: Exponents, order: u32) -> Result<Jet> {
        self.check_index(a)?;
        self.check_index(b)?;
        let available = self.tower_order(alpha.degree());
        if order as i64 > available {
            return Err(exhausted(
                format!("contravariant tower of level {}", alpha.degree()),
                order as i64,
                available,
            ));
        }
        let (a, b) = ordered(a, b);
        let key = match o {
            Orientation::Antiholo => TensorKey::AntiTower(a, b, alpha),
            Orientation::Holo => TensorKey::HoloTower(a, b, alpha),
        };
        self.cached(key, order, || {
            let Some(&t) = alpha.indices().first() else {
                return match o {
                    Orientation::Antiholo => self.phi_derivative_to(&[], &[a, b], order),
                    Orientation::Holo => self.phi_derivative_to(&[a, b], &[], order),
                };
            };
            let rest = alpha.decremented(t).unwrap();
            let inner = self.tower(o, a, b, rest, order + 1)?;
            self.contravariant_apply(&inner, t, o)
        })
    }

    /// `Γ^t̄_{l̄q̄} = g^{t̄s} g_{sl̄q̄}`.
    pub fn christoffel_bar(&self, t: usize, l: usize, q: usize, order: u32) -> Result<Jet> {
        self.check_index(t)?;
        let (l, q) = ordered(l, q);
        let gamma = self.cached(TensorKey::ChristoffelBar(t, l, q), order, || {
            let mut acc = Jet::zero(self.n, order);
            for s in 0..self.n {
                let third = self.phi_derivative_to(&[s], &[l, q], order)?;
                acc = &acc + &(&self.inverse_metric(t, s, order)? * &third);
            }
            Ok(acc)
        })?;
        Ok(match self.corruption {
            Some(Corruption::FlipChristoffelSign) => -&gamma,
            _ => gamma,
        })
    }

    /// `Γ^t_{kp} = g^{l̄t} g_{kpl̄}`.
    pub fn christoffel_holo(&self, t: usize, k: usize, p: usize, order: u32) -> Result<Jet> {
        self.check_index(t)?;
        let (k, p) = ordered(k, p);
        self.cached(TensorKey::ChristoffelHolo(t, k, p), order, || {
            let mut acc = Jet::zero(self.n, order);
            for l in 0..self.n {
                let third = self.phi_derivative_to(&[k, p], &[l], order)?;
                acc = &acc + &(&self.inverse_metric(l, t, order)? * &third);
            }
            Ok(acc)
        })
    }

    /// `R_{kpl̄q̄} = g_{kpn̄} g^{n̄m} g_{ml̄q̄} - g_{kpl̄q̄}`.
    pub fn curvature_low(&self, k: usize, p: usize, l: usize, q: usize, order: u32) -> Result<Jet> {
        for i in [k, p, l, q] {
            self.check_index(i)?;
        }
        let (k, p) = ordered(k, p);
        let (l, q) = ordered(l, q);
        self.cached(TensorKey::CurvatureLow(k, p, l, q), order, || {
            let mut acc = -&self.phi_derivative_to(&[k, p], &[l, q], order)?;
            for nn in 0..self.n {
                let left = self.phi_derivative_to(&[k, p], &[nn], order)?;
                if left.is_zero() {
                    continue;
                }
                for m in 0..self.n {
                    let right = self.phi_derivative_to(&[m], &[l, q], order)?;
                    let g = self.inverse_metric(nn, m, order)?;
                    acc = &acc + &(&(&left * &g) * &right);
                }
            }
            Ok(acc)
        })
    }

    /// `R^{l̄₁…l̄_r}_{l̄q̄} = -D̄^{l₁}…D̄^{l_r} Φ_{l̄q̄}` for `r ≥ 2`.
    pub fn curvature_upper(&self, l: usize, q: usize, uppers: Exponents, order: u32) -> Result<Jet> {
        if uppers.degree() < 2 {
            return Err(Error::Unsupported(format!(
                "curvature tensor needs at least two upper indices, got {}",
                uppers.degree()
            )));
        }
        Ok(-&self.antiholo_tower(l, q, uppers, order)?)
    }

    /// Holomorphic mirror: `-D^{k₁}…D^{k_s} Φ_{kp}` for `s ≥ 2`.
    pub fn curvature_upper_holo(&self, k: usize, p: usize, uppers: Exponents, order: u32) -> Result<Jet> {
        if uppers.degree() < 2 {
            return Err(Error::Unsupported(format!(
                "curvature tensor needs at least two upper indices, got {}",
                uppers.degree()
            )));
        }
        Ok(-&self.holo_tower(k, p, uppers, order)?)
    }

    fn fiber_linear(&self, order: u32, var: impl Fn(usize) -> FiberVar, coeff: impl Fn(usize) -> Result<Jet>) -> Result<Symbol> {
        let mut s = Symbol::zero(self.n, order);
        for i in 0..self.n {
            s = &s + &Symbol::monomial(FiberIndex::var(var(i)), &coeff(i)?);
        }
        Ok(s)
    }

    /// `θ_t = g_{kt̄} η^k`: the result of lowering an upper `t̄` index.
    fn lowered_eta(&self, t: usize, order: u32) -> Result<Symbol> {
        self.fiber_linear(order, FiberVar::Eta, |k| self.metric(k, t)?.truncate(order))
    }

    /// `θ̄_u = g_{ul̄} η̄^l`: the result of lowering an upper `u` index.
    fn lowered_eta_bar(&self, u: usize, order: u32) -> Result<Symbol> {
        self.fiber_linear(order, FiberVar::EtaBar, |l| self.metric(u, l)?.truncate(order))
    }

    fn power_product(&self, forms: &[Symbol], e: Exponents, order: u32) -> Symbol {
        let mut out = Symbol::fiber_monomial(self.n, order, FiberIndex::ONE);
        for i in e.indices() {
            out = &out * &forms[i];
        }
        out
    }

    pub fn gamma(&self, order: u32) -> Result<Symbol> {
        let mut s = Symbol::zero(self.n, order);
        for p in 0..self.n {
            for q in 0..self.n {
                let fi = FiberIndex::var(FiberVar::Eta(p)).times(FiberVar::EtaBar(q));
                s = &s + &Symbol::monomial(fi, &self.metric(p, q)?.truncate(order)?);
            }
        }
        Ok(s)
    }

    /// `ρ_{r,s}` assembled along the given path.
    pub fn rho_via(&self, r: u32, s: u32, path: RhoPath, order: u32) -> Result<Symbol> {
        if r < 2 || s < 2 {
            return Err(Error::Unsupported(format!(
                "rho_{{{r},{s}}} needs r, s >= 2"
            )));
        }
        let n = self.n;
        let mut out = Symbol::zero(n, order);
        match path {
            RhoPath::LowerAntiholo => {
                if s != 2 {
                    return Err(Error::Unsupported(format!(
                        "antiholomorphic lowering builds rho_{{r,2}} only, got s = {s}"
                    )));
                }
                let forms: Vec<Symbol> =
                    (0..n).map(|t| self.lowered_eta(t, order)).collect::<Result<_>>()?;
                for alpha in Exponents::all_of_degree(n, r) {
                    let theta = self.power_product(&forms, alpha, order);
                    let weight = alpha.orderings();
                    for l in 0..n {
                        for q in 0..n {
                            let c = self.curvature_upper(l, q, alpha, order)?;
                            let fi = FiberIndex::var(FiberVar::EtaBar(l)).times(FiberVar::EtaBar(q));
                            out = &out + &theta.shift(fi).mul_jet(&c.scale_rational(&weight));
                        }
                    }
                }
            }
            RhoPath::LowerHolo => {
                if r != 2 {
                    return Err(Error::Unsupported(format!(
                        "holomorphic lowering builds rho_{{2,s}} only, got r = {r}"
                    )));
                }
                let forms: Vec<Symbol> = (0..n)
                    .map(|u| self.lowered_eta_bar(u, order))
                    .collect::<Result<_>>()?;
                for beta in Exponents::all_of_degree(n, s) {
                    let theta = self.power_product(&forms, beta, order);
                    let weight = beta.orderings();
                    for k in 0..n {
                        for p in 0..n {
                            let c = self.curvature_upper_holo(k, p, beta, order)?;
                            let fi = FiberIndex::var(FiberVar::Eta(k)).times(FiberVar::Eta(p));
                            out = &out + &theta.shift(fi).mul_jet(&c.scale_rational(&weight));
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// `ρ_{r,s}`: via antiholomorphic lowering when `s = 2`, holomorphic
    /// lowering when `r = 2`.
    pub fn rho(&self, r: u32, s: u32, order: u32) -> Result<Symbol> {
        match (r, s) {
            (r, 2) if r >= 2 => self.rho_via(r, 2, RhoPath::LowerAntiholo, order),
            (2, s) if s >= 2 => self.rho_via(2, s, RhoPath::LowerHolo, order),
            _ => Err(Error::Unsupported(format!(
                "rho_{{{r},{s}}}: only r = 2 or s = 2 (both >= 2) are supported"
            ))),
        }
    }

    pub fn rho_tilde(&self, order: u32) -> Result<Symbol> {
        let n = self.n;
        let pair = |a: FiberVar, b: FiberVar| FiberIndex::var(a).times(b);
        // left[q1][q2] = R_{k1k2q̄1q̄2} η^{k1}η^{k2}, right[p1][p2] = R_{p1p2l̄1l̄2} η̄^{l1}η̄^{l2}
        let mut left = vec![vec![Symbol::zero(n, order); n]; n];
        let mut right = vec![vec![Symbol::zero(n, order); n]; n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let r = self.curvature_low(a, b, c, d, order)?;
                        left[c][d] = &left[c][d]
                            + &Symbol::monomial(pair(FiberVar::Eta(a), FiberVar::Eta(b)), &r);
                        right[a][b] = &right[a][b]
                            + &Symbol::monomial(pair(FiberVar::EtaBar(c), FiberVar::EtaBar(d)), &r);
                    }
                }
            }
        }
        let grid = self.inverse_grid(order)?;
        let mut out = Symbol::zero(n, order);
        for q1 in 0..n {
            for q2 in 0..n {
                for p1 in 0..n {
                    for p2 in 0..n {
                        let g = &grid[q1][p1] * &grid[q2][p2];
                        out = &out + &(&left[q1][q2] * &right[p1][p2]).mul_jet(&g);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn canonical_symbol(&self, which: CanonicalSymbol, order: u32) -> Result<Symbol> {
        match which {
            CanonicalSymbol::Gamma => self.gamma(order),
            CanonicalSymbol::Rho(r, s) => self.rho(r, s, order),
            CanonicalSymbol::RhoTilde => self.rho_tilde(order),
        }
    }

    /// The fiberwise vector field `∇̄ = η̄^l ∂/∂z̄^l - Γ^t̄_{l̄q̄} η̄^l η̄^q ∂/∂η̄^t`
    /// (or its holomorphic mirror) applied to a fiber polynomial. On a
    /// separately symmetric tensor this is the symmetrized covariant
    /// derivative. Fiber variables of the other type are inert.
    pub fn symmetrized_covariant_derivative(&self, s: &Symbol, orientation: Orientation) -> Result<Symbol> {
        if s.order() == 0 {
            return Err(exhausted("covariant derivative", 1, 0));
        }
        let n = self.n;
        let (coord, fiber): (fn(usize) -> Var, fn(usize) -> FiberVar) = match orientation {
            Orientation::Antiholo => (Var::Antiholo, FiberVar::EtaBar),
            Orientation::Holo => (Var::Holo, FiberVar::Eta),
        };
        let fiber_degree = match orientation {
            Orientation::Antiholo => s.max_eta_bar_degree(),
            Orientation::Holo => s.max_eta_degree(),
        };
        let mut order = s.order() - 1;
        if fiber_degree > 0 {
            let available = self.phi.order() as i64 - 3;
            if available < 0 {
                return Err(exhausted("christoffel symbols", 0, available));
            }
            order = order.min(available as u32);
        }
        let mut out = Symbol::zero(n, order);
        for l in 0..n {
            let d = s.try_map_jets(order, |j| j.partial(coord(l)))?;
            out = &out + &d.truncated(order).shift(FiberIndex::var(fiber(l)));
        }
        let s = s.truncated(order);
        for t in 0..n {
            let dt = s.fiber_partial(fiber(t));
            if dt.is_zero() {
                continue;
            }
            for l in 0..n {
                for q in 0..n {
                    let gamma = match orientation {
                        Orientation::Antiholo => self.christoffel_bar(t, l, q, order)?,
                        Orientation::Holo => self.christoffel_holo(t, l, q, order)?,
                    };
                    let fi = FiberIndex::var(fiber(l)).times(fiber(q));
                    out = &out - &dt.shift(fi).mul_jet(&gamma);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{builtin_potential, Builtin};

    fn cache(kind: Builtin, n: usize, order: u32) -> GeometryCache {
        GeometryCache::new(builtin_potential(kind, n, order).unwrap()).unwrap()
    }

    fn q(a: i64) -> GaussRational {
        GaussRational::from_integer(a)
    }

    fn jet1(order: u32, terms: &[(u32, u32, i64)]) -> Jet {
        Jet::from_terms(
            1,
            order,
            terms.iter().map(|&(a, b, c)| {
                (
                    MultiIndex::new(Exponents::from_counts(&[a]), Exponents::from_counts(&[b])),
                    q(c),
                )
            }),
        )
    }

    #[test]
    fn potential_derivative_values() {
        let flat = cache(Builtin::Flat, 1, 6);
        let d = flat.potential_derivative(&MultiIndex::from_indices(&[0], &[0])).unwrap();
        assert_eq!(d, Jet::one(1, 4));
        let pure = flat.potential_derivative(&MultiIndex::from_indices(&[0, 0], &[])).unwrap();
        assert!(pure.is_zero());
        let fs = cache(Builtin::FubiniStudy, 1, 8);
        let d4 = fs
            .potential_derivative(&MultiIndex::from_indices(&[0, 0], &[0, 0]))
            .unwrap();
        assert_eq!(d4.constant_term(), q(-2));
        assert!(fs
            .potential_derivative(&MultiIndex::from_indices(&[0; 5], &[0; 4]))
            .is_err());
    }

    #[test]
    fn inverse_metric_values() {
        let flat = cache(Builtin::Flat, 2, 6);
        let inv = flat.invert_metric().unwrap();
        for (l, row) in inv.iter().enumerate() {
            for (k, j) in row.iter().enumerate() {
                let expected = if k == l { Jet::one(2, 4) } else { Jet::zero(2, 4) };
                assert_eq!(j, &expected);
            }
        }
        let fs = cache(Builtin::FubiniStudy, 1, 6);
        assert_eq!(
            fs.invert_metric().unwrap()[0][0],
            jet1(4, &[(0, 0, 1), (1, 1, 2), (2, 2, 1)])
        );
        let hy = cache(Builtin::Hyperbolic, 1, 4);
        assert_eq!(
            hy.inverse_metric(0, 0, 2).unwrap(),
            jet1(2, &[(0, 0, 1), (1, 1, -2)])
        );
    }

    #[test]
    fn inverse_metric_multiplies_back() {
        let g = GeometryCache::from_source(
            &crate::potential::PolynomialPotential::random_perturbed_flat(2, 3).unwrap(),
            8,
        )
        .unwrap();
        let inv = g.invert_metric().unwrap();
        for k in 0..2 {
            for m in 0..2 {
                let mut acc = Jet::zero(2, 6);
                for s in 0..2 {
                    acc = &acc + &(&g.metric(k, s).unwrap() * &inv[s][m]);
                }
                let expected = if k == m { Jet::one(2, 6) } else { Jet::zero(2, 6) };
                assert_eq!(acc, expected);
            }
        }
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let phi = Jet::from_terms(
            2,
            4,
            [(MultiIndex::from_indices(&[0], &[0]), q(1))],
        );
        assert_eq!(GeometryCache::new(phi).unwrap_err(), Error::DegenerateMetric);
    }

    #[test]
    fn contravariant_apply_values() {
        let flat = cache(Builtin::Flat, 1, 6);
        let z2 = jet1(5, &[(2, 0, 1)]);
        assert_eq!(
            flat.contravariant_apply(&z2, 0, Orientation::Antiholo).unwrap(),
            jet1(4, &[(1, 0, 2)])
        );
        let zb2 = jet1(5, &[(0, 2, 1)]);
        assert_eq!(
            flat.contravariant_apply(&zb2, 0, Orientation::Holo).unwrap(),
            jet1(4, &[(0, 1, 2)])
        );
        let fs = cache(Builtin::FubiniStudy, 1, 6);
        let zb = jet1(5, &[(0, 1, 1)]);
        assert!(fs.contravariant_apply(&zb, 0, Orientation::Antiholo).unwrap().is_zero());
        assert!(fs.contravariant_apply(&Jet::one(1, 0), 0, Orientation::Holo).is_err());
    }

    #[test]
    fn christoffel_values() {
        let flat = cache(Builtin::Flat, 2, 6);
        assert!(flat.christoffel_bar(0, 1, 0, 3).unwrap().is_zero());
        let fs = cache(Builtin::FubiniStudy, 1, 8);
        // -2z/(1+zz̄) = -2z + 2z²z̄ - 2z³z̄² + …
        assert_eq!(
            fs.christoffel_bar(0, 0, 0, 5).unwrap(),
            jet1(5, &[(1, 0, -2), (2, 1, 2), (3, 2, -2)])
        );
        let hy = cache(Builtin::Hyperbolic, 1, 6);
        assert!(hy.christoffel_bar(0, 0, 0, 3).unwrap().constant_term().is_zero());
        // Γ agrees with the first level of the contravariant tower.
        assert_eq!(
            fs.christoffel_bar(0, 0, 0, 4).unwrap(),
            fs.antiholo_tower(0, 0, Exponents::unit(0), 4).unwrap()
        );
    }

    #[test]
    fn curvature_values() {
        assert!(cache(Builtin::Flat, 2, 6)
            .curvature_low(0, 1, 1, 0, 2)
            .unwrap()
            .is_zero());
        let fs = cache(Builtin::FubiniStudy, 1, 8);
        assert_eq!(fs.curvature_low(0, 0, 0, 0, 3).unwrap().constant_term(), q(2));
        let hy = cache(Builtin::Hyperbolic, 1, 8);
        assert_eq!(hy.curvature_low(0, 0, 0, 0, 3).unwrap().constant_term(), q(-2));
        let two = Exponents::from_indices(&[0, 0]);
        let three = Exponents::from_indices(&[0, 0, 0]);
        assert_eq!(fs.curvature_upper(0, 0, two, 2).unwrap().constant_term(), q(2));
        assert!(fs.curvature_upper(0, 0, three, 2).unwrap().constant_term().is_zero());
        assert!(fs.curvature_upper(0, 0, Exponents::unit(0), 2).is_err());
        assert!(cache(Builtin::Flat, 1, 8)
            .curvature_upper(0, 0, three, 2)
            .unwrap()
            .is_zero());
    }

    #[test]
    fn order_exhaustion_is_reported() {
        let fs = cache(Builtin::FubiniStudy, 1, 4);
        assert!(matches!(
            fs.curvature_low(0, 0, 0, 0, 1),
            Err(Error::OrderExhausted { .. })
        ));
        assert!(fs.antiholo_tower(0, 0, Exponents::from_indices(&[0, 0]), 0).is_ok());
        assert!(fs.antiholo_tower(0, 0, Exponents::from_indices(&[0, 0, 0]), 0).is_err());
    }

    #[test]
    fn canonical_symbols_at_origin() {
        let n = 1;
        let e = |a: u32, b: u32| FiberIndex {
            eta: Exponents::from_counts(&[a]),
            eta_bar: Exponents::from_counts(&[b]),
            ..FiberIndex::ONE
        };
        let flat = cache(Builtin::Flat, n, 8);
        let gamma = flat.gamma(3).unwrap();
        assert_eq!(gamma.len(), 1);
        assert_eq!(gamma.coeff(&e(1, 1)), Jet::one(1, 3));
        assert!(flat.rho(2, 2, 2).unwrap().is_zero());
        assert!(flat.rho_tilde(2).unwrap().is_zero());

        let fs = cache(Builtin::FubiniStudy, n, 10);
        let rho22 = fs.rho(2, 2, 2).unwrap().at_origin();
        assert_eq!(rho22.len(), 1);
        assert_eq!(rho22.coeff(&e(2, 2)).constant_term(), q(2));
        let tilde = fs.rho_tilde(2).unwrap().at_origin();
        assert_eq!(tilde.len(), 1);
        assert_eq!(tilde.coeff(&e(2, 2)).constant_term(), q(4));
        assert!(fs.rho(3, 3, 2).is_err());
        assert!(fs.rho(1, 2, 2).is_err());
    }

    #[test]
    fn covariant_derivative_of_scalars() {
        let flat = cache(Builtin::Flat, 1, 6);
        let c = Symbol::from_jet(&Jet::constant(1, 4, q(3)));
        assert!(flat
            .symmetrized_covariant_derivative(&c, Orientation::Antiholo)
            .unwrap()
            .is_zero());
        let fs = cache(Builtin::FubiniStudy, 1, 8);
        let f = jet1(4, &[(1, 2, 1), (0, 1, 5)]);
        let d = fs
            .symmetrized_covariant_derivative(&Symbol::from_jet(&f), Orientation::Antiholo)
            .unwrap();
        let expected = Symbol::monomial(
            FiberIndex::var(FiberVar::EtaBar(0)),
            &f.partial(Var::Antiholo(0)).unwrap(),
        );
        assert_eq!(d, expected);
    }

    #[test]
    fn rho_cross_derivation_on_fubini_study() {
        let fs = cache(Builtin::FubiniStudy, 1, 12);
        let rho22 = fs.rho(2, 2, 4).unwrap();
        let via_derivative = fs
            .symmetrized_covariant_derivative(&rho22, Orientation::Antiholo)
            .unwrap();
        assert_eq!(via_derivative, fs.rho(2, 3, 3).unwrap());
        let via_holo = fs
            .symmetrized_covariant_derivative(&rho22, Orientation::Holo)
            .unwrap();
        assert_eq!(via_holo, fs.rho(3, 2, 3).unwrap());
    }
}
