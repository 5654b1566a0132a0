//! Composition of symbols, the operators `E`, `E⁻¹`, `Q`, and left
//! multiplication symbols.
//!
//! A symbol `Σ f_{β,α} ζ̄^β η̄^α` stands for the operator
//! `Σ D̄_β ∘ f_{β,α} ∘ D̄^α`. The `η` variables only appear in the tensor `T`
//! and are inert under every operator here.

use std::collections::HashMap;

use crate::error::{exhausted, Error, Result};
use crate::geometry::{GeometryCache, Orientation};
use crate::jet::{Exponents, Jet, Var};
use crate::scalar::{GaussRational, Rational};
use crate::symbol::{FiberIndex, FiberVar, NuSeries, Symbol};

/// Every exponent vector of degree `0..=max_degree`.
pub(crate) fn exponents_up_to(n: usize, max_degree: u32) -> Vec<Exponents> {
    (0..=max_degree)
        .flat_map(|d| Exponents::all_of_degree(n, d))
        .collect()
}

fn max_zeta_bar_degree(s: &Symbol) -> u32 {
    s.terms().map(|(k, _)| k.zeta_bar.degree()).max().unwrap_or(0)
}

/// `E = η̄^l ∂/∂η̄^l`.
pub fn euler_apply(f: &Symbol) -> Symbol {
    let terms = f.terms().map(|(k, j)| {
        let d = GaussRational::from_integer(k.eta_bar.degree() as i64);
        (*k, j.scale(&d))
    });
    Symbol::from_terms(f.n(), f.order(), terms)
}

/// Inverse of `E` on symbols without an `η̄`-free part.
pub fn euler_inverse(f: &Symbol) -> Result<Symbol> {
    let mut terms = Vec::with_capacity(f.len());
    for (k, j) in f.terms() {
        let d = k.eta_bar.degree();
        if d == 0 {
            return Err(Error::NotInImageOfEuler);
        }
        terms.push((*k, j.scale_rational(&Rational::new(1, d as i64)?)));
    }
    Ok(Symbol::from_terms(f.n(), f.order(), terms))
}

fn reject_zeta_bar(f: &Symbol, what: &str) -> Result<()> {
    if f.has_zeta_bar() {
        return Err(Error::Unsupported(format!("{what} is not defined on symbols with zetabar")));
    }
    Ok(())
}

/// Output order of `Q(F)`: one derivative of the coefficients, capped by
/// the connection and curvature data the terms need.
fn q_order(g: &GeometryCache, f: &Symbol) -> Result<u32> {
    if f.order() == 0 {
        return Err(exhausted("operator Q", 1, 0));
    }
    let mut order = f.order() as i64 - 1;
    let d = f.max_eta_bar_degree();
    if d > 0 {
        order = order.min(g.tower_order(d));
    }
    if order < 0 {
        return Err(exhausted(format!("operator Q on eta-bar degree {d}"), 0, order));
    }
    Ok(order as u32)
}

/// `Σ_{l ≤ q} c_{lq} η̄^l η̄^q · s`, counting `l ≠ q` twice.
fn add_symmetric_pair_terms(
    out: &mut Symbol,
    s: &Symbol,
    weight: &Rational,
    mut coeff: impl FnMut(usize, usize) -> Result<Jet>,
) -> Result<()> {
    let n = s.n();
    for l in 0..n {
        for q in l..n {
            let c = coeff(l, q)?;
            if c.is_zero() {
                continue;
            }
            let w = if l == q {
                weight.clone()
            } else {
                weight * &Rational::from_integer(2)
            };
            let fi = FiberIndex::var(FiberVar::EtaBar(l)).times(FiberVar::EtaBar(q));
            *out = &*out + &s.shift(fi).mul_jet(&c.scale_rational(&w));
        }
    }
    Ok(())
}

/// `Q = ∇̄ + Σ_{r≥2} (1/r!) R^{l̄₁…l̄_r}_{l̄q̄} η̄^l η̄^q ∂^r/∂η̄^{l₁}…∂η̄^{l_r}`.
pub fn q_apply(g: &GeometryCache, f: &Symbol) -> Result<Symbol> {
    reject_zeta_bar(f, "Q")?;
    let order = q_order(g, f)?;
    let f = f.truncated(order + 1);
    let mut out = g
        .symmetrized_covariant_derivative(&f, Orientation::Antiholo)?
        .truncated(order);
    let f = f.truncated(order);
    for r in 2..=f.max_eta_bar_degree() {
        for alpha in Exponents::all_of_degree(g.n(), r) {
            let d = f.eta_bar_derivative(alpha);
            if d.is_zero() {
                continue;
            }
            let w = alpha.factorial().recip()?;
            add_symmetric_pair_terms(&mut out, &d, &w, |l, q| {
                g.curvature_upper(l, q, alpha, order)
            })?;
        }
    }
    Ok(out)
}

/// `Q = η̄^l ∂/∂z̄^l - Σ_{r≥1} (1/r!) (D̄^{l₁}…D̄^{l_r} Φ_{l̄q̄}) η̄^l η̄^q ∂^r/∂η̄^{l₁}…∂η̄^{l_r}`,
/// built from contravariant derivatives of the potential only.
pub fn q_apply_coordinate(g: &GeometryCache, f: &Symbol) -> Result<Symbol> {
    reject_zeta_bar(f, "Q")?;
    let order = q_order(g, f)?;
    let n = g.n();
    let mut out = Symbol::zero(n, order);
    for l in 0..n {
        let d = f.try_map_jets(order, |j| Ok(j.partial(Var::Antiholo(l))?.truncated(order)))?;
        out = &out + &d.shift(FiberIndex::var(FiberVar::EtaBar(l)));
    }
    let f = f.truncated(order);
    for r in 1..=f.max_eta_bar_degree() {
        for alpha in Exponents::all_of_degree(n, r) {
            let d = f.eta_bar_derivative(alpha);
            if d.is_zero() {
                continue;
            }
            let w = -&alpha.factorial().recip()?;
            add_symmetric_pair_terms(&mut out, &d, &w, |l, q| {
                g.antiholo_tower(l, q, alpha, order)
            })?;
        }
    }
    Ok(out)
}

fn apply_to_coeffs(s: &Symbol, loss: u32, f: impl Fn(&Jet) -> Result<Jet>) -> Result<Symbol> {
    s.try_map_jets(s.order().saturating_sub(loss), f)
}

/// `D̄_{l₁}…D̄_{l_s} f` for the indices of `beta`.
pub fn dbar_lower_multi(g: &GeometryCache, f: &Jet, beta: Exponents) -> Result<Jet> {
    beta.indices()
        .into_iter()
        .try_fold(f.clone(), |acc, l| g.dbar_lower(l, &acc))
}

/// `F ∘ H = Σ_{α,β} ((-1)^{|β|}/(α! β!)) (∂^α_{η̄} D̄_β F)(D̄^α ∂^β_{ζ̄} H)`.
pub fn compose(g: &GeometryCache, f: &Symbol, h: &Symbol) -> Result<Symbol> {
    if f.n() != h.n() || f.n() != g.n() {
        return Err(Error::DimensionMismatch {
            left: f.n(),
            right: h.n(),
        });
    }
    let n = g.n();
    let mut out = Symbol::zero(n, f.order().min(h.order()));
    let alphas = exponents_up_to(n, f.max_eta_bar_degree());
    let betas = exponents_up_to(n, max_zeta_bar_degree(h));
    for &beta in &betas {
        let h_beta = h.zeta_bar_derivative(beta);
        if h_beta.is_zero() {
            continue;
        }
        let sign = if beta.degree() % 2 == 0 {
            Rational::one()
        } else {
            -Rational::one()
        };
        for &alpha in &alphas {
            let f_alpha = f.eta_bar_derivative(alpha);
            if f_alpha.is_zero() {
                continue;
            }
            let left = apply_to_coeffs(&f_alpha, beta.degree(), |j| dbar_lower_multi(g, j, beta))?;
            if left.is_zero() {
                continue;
            }
            let right = apply_to_coeffs(&h_beta, alpha.degree(), |j| {
                g.contravariant_apply_multi(j, alpha, Orientation::Antiholo)
            })?;
            if right.is_zero() {
                continue;
            }
            let w = &sign / &(&alpha.factorial() * &beta.factorial());
            out = &out + &(&left * &right).scale_rational(&w);
        }
    }
    Ok(out)
}

/// `[F, H]_∘ = F ∘ H - H ∘ F`.
pub fn commutator(g: &GeometryCache, f: &Symbol, h: &Symbol) -> Result<Symbol> {
    Ok(&compose(g, f, h)? - &compose(g, h, f)?)
}

/// Composition of `ν`-series of symbols, truncated at the shorter series.
pub fn compose_series(
    g: &GeometryCache,
    f: &NuSeries<Symbol>,
    h: &NuSeries<Symbol>,
) -> Result<NuSeries<Symbol>> {
    let top = f.order().min(h.order());
    let mut out = Vec::with_capacity(top + 1);
    for r in 0..=top {
        let mut acc: Option<Symbol> = None;
        for i in 0..=r {
            let c = compose(g, &f[i], &h[r - i])?;
            acc = Some(match acc {
                Some(a) => &a + &c,
                None => c,
            });
        }
        out.push(acc.unwrap());
    }
    Ok(NuSeries::new(out))
}

/// `D^α u` or `D̄^α u` for one fixed `u`, each computed once from its
/// parent `α - e_i`.
pub struct ContravariantMemo<'a> {
    g: &'a GeometryCache,
    orientation: Orientation,
    u: Jet,
    cache: HashMap<Exponents, Jet>,
}

impl<'a> ContravariantMemo<'a> {
    pub fn new(g: &'a GeometryCache, u: Jet, orientation: Orientation) -> Self {
        ContravariantMemo {
            g,
            orientation,
            u,
            cache: HashMap::new(),
        }
    }

    pub fn function(&self) -> &Jet {
        &self.u
    }

    pub fn get(&mut self, alpha: Exponents) -> Result<&Jet> {
        if alpha.is_empty() {
            return Ok(&self.u);
        }
        if !self.cache.contains_key(&alpha) {
            let idx = alpha.indices();
            let (last, rest) = idx.split_last().expect("nonempty");
            let parent = self.get(Exponents::from_indices(rest))?.clone();
            let d = self.g.contravariant_apply(&parent, *last, self.orientation)?;
            self.cache.insert(alpha, d);
        }
        Ok(&self.cache[&alpha])
    }
}

/// Applies the operator `Σ D̄_β ∘ f_{β,α} ∘ D̄^α` to a function.
pub fn apply_symbol_operator(g: &GeometryCache, f: &Symbol, u: &Jet) -> Result<Jet> {
    let mut memo = ContravariantMemo::new(g, u.clone(), Orientation::Antiholo);
    apply_symbol_operator_memo(g, f, &mut memo)
}

/// [`apply_symbol_operator`] reusing the derivatives `D̄^α u` held in `memo`.
pub fn apply_symbol_operator_memo(g: &GeometryCache, f: &Symbol, memo: &mut ContravariantMemo) -> Result<Jet> {
    if f.has_eta() {
        return Err(Error::Unsupported(
            "symbols with eta do not act on functions".into(),
        ));
    }
    let n = memo.function().n();
    if f.n() != n {
        return Err(Error::DimensionMismatch {
            left: f.n(),
            right: n,
        });
    }
    let mut acc = Jet::zero(n, f.order().min(memo.function().order()));
    for (k, c) in f.terms() {
        let du = memo.get(k.eta_bar)?;
        if du.is_zero() {
            continue;
        }
        let term = dbar_lower_multi(g, &(c * du), k.zeta_bar)?;
        acc = &acc + &term;
    }
    Ok(acc)
}

/// The symbol `F = Σ ν^r F_r` of left star multiplication by `f`, with
/// `F_0 = f_0` and `F_r = f_r + E⁻¹Q(F_{r-1})`.
///
/// Component `r` is exact to `min(f_j.order - (r - j))`, further capped by
/// the available geometry.
pub fn left_mult_symbol(g: &GeometryCache, f: &NuSeries<Jet>) -> Result<NuSeries<Symbol>> {
    let mut out: Vec<Symbol> = Vec::with_capacity(f.order() + 1);
    for (r, fr) in f.iter().enumerate() {
        if fr.n() != g.n() {
            return Err(Error::DimensionMismatch {
                left: g.n(),
                right: fr.n(),
            });
        }
        let next = match out.last() {
            None => Symbol::from_jet(fr),
            Some(prev) => &Symbol::from_jet(fr) + &euler_inverse(&q_apply(g, prev)?)?,
        };
        assert!(
            next.max_eta_bar_degree() as usize <= r,
            "component {r} has eta-bar degree {}",
            next.max_eta_bar_degree()
        );
        out.push(next);
    }
    Ok(NuSeries::new(out))
}

/// `σ(R_{∂Φ/∂z̄^l}) = Φ_l̄ + ν(ζ̄_l + Φ_{l̄q̄} η̄^q)`, exact to `order`.
pub fn right_mult_phi_symbol(g: &GeometryCache, l: usize, order: u32) -> Result<NuSeries<Symbol>> {
    let n = g.n();
    let phi = |idx: &[usize]| -> Result<Jet> {
        g.potential_derivative(&crate::jet::MultiIndex::from_indices(&[], idx))?
            .truncate(order)
    };
    let c0 = Symbol::from_jet(&phi(&[l])?);
    let mut c1 = Symbol::fiber_monomial(n, order, FiberIndex::var(FiberVar::ZetaBar(l)));
    for q in 0..n {
        c1 = &c1 + &Symbol::monomial(FiberIndex::var(FiberVar::EtaBar(q)), &phi(&[l, q])?);
    }
    Ok(NuSeries::new(vec![c0, c1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{builtin_potential, Builtin, MultiIndex};

    fn cache(kind: Builtin, n: usize, order: u32) -> GeometryCache {
        GeometryCache::new(builtin_potential(kind, n, order).unwrap()).unwrap()
    }

    fn q(a: i64) -> GaussRational {
        GaussRational::from_integer(a)
    }

    fn mono(order: u32, holo: &[usize], anti: &[usize], c: GaussRational) -> Jet {
        Jet::monomial(1, order, MultiIndex::from_indices(holo, anti), c)
    }

    fn etabar(k: u32) -> FiberIndex {
        FiberIndex::eta_bar(Exponents::from_counts(&[k]))
    }

    #[test]
    fn euler_examples() {
        let zb = mono(4, &[], &[0], q(1));
        let s = Symbol::monomial(etabar(2), &zb);
        assert_eq!(euler_apply(&s), Symbol::monomial(etabar(2), &zb.scale(&q(2))));
        assert!(euler_apply(&Symbol::from_jet(&zb)).is_zero());
        let mixed = FiberIndex::var(FiberVar::Eta(0)).times(FiberVar::EtaBar(0));
        let s = Symbol::fiber_monomial(1, 4, mixed);
        assert_eq!(euler_apply(&s), s);

        let z = mono(4, &[0], &[], q(1));
        let s = Symbol::monomial(etabar(2), &z);
        assert_eq!(
            euler_inverse(&s).unwrap(),
            Symbol::monomial(etabar(2), &z.scale(&GaussRational::ratio(1, 2)))
        );
        let s = &Symbol::fiber_monomial(1, 4, etabar(1)) + &Symbol::fiber_monomial(1, 4, etabar(3));
        let expected = &Symbol::fiber_monomial(1, 4, etabar(1))
            + &Symbol::monomial(etabar(3), &Jet::constant(1, 4, GaussRational::ratio(1, 3)));
        assert_eq!(euler_inverse(&s).unwrap(), expected);
        assert_eq!(
            euler_inverse(&Symbol::from_jet(&Jet::one(1, 4))).unwrap_err(),
            Error::NotInImageOfEuler
        );
    }

    #[test]
    fn q_examples() {
        let flat = cache(Builtin::Flat, 1, 8);
        let zb = Symbol::from_jet(&mono(5, &[], &[0], q(1)));
        assert_eq!(
            q_apply(&flat, &zb).unwrap(),
            Symbol::fiber_monomial(1, 4, etabar(1))
        );
        assert!(q_apply(&flat, &Symbol::fiber_monomial(1, 5, etabar(1)))
            .unwrap()
            .is_zero());

        let fs = cache(Builtin::FubiniStudy, 1, 10);
        let out = q_apply(&fs, &Symbol::fiber_monomial(1, 5, etabar(1))).unwrap();
        let expected = Jet::from_terms(
            1,
            4,
            [
                (MultiIndex::from_indices(&[0], &[]), q(2)),
                (MultiIndex::from_indices(&[0, 0], &[0]), q(-2)),
                (MultiIndex::from_indices(&[0, 0, 0], &[0, 0]), q(2)),
            ],
        );
        assert_eq!(out, Symbol::monomial(etabar(2), &expected));
    }

    #[test]
    fn q_forms_agree_on_curved_potential() {
        let fs = cache(Builtin::FubiniStudy, 2, 10);
        let mut s = Symbol::zero(2, 5);
        let coeffs = [
            (FiberIndex::ONE, MultiIndex::from_indices(&[0], &[1, 1])),
            (FiberIndex::var(FiberVar::EtaBar(1)), MultiIndex::from_indices(&[1], &[0])),
            (
                FiberIndex::var(FiberVar::EtaBar(0)).times(FiberVar::EtaBar(1)),
                MultiIndex::from_indices(&[], &[0]),
            ),
            (
                FiberIndex::eta_bar(Exponents::from_counts(&[3, 0])),
                MultiIndex::ZERO,
            ),
            (
                FiberIndex::var(FiberVar::Eta(0)).times(FiberVar::EtaBar(0)),
                MultiIndex::from_indices(&[1], &[]),
            ),
        ];
        for (fi, idx) in coeffs {
            s = &s + &Symbol::monomial(fi, &Jet::monomial(2, 5, idx, q(1)));
        }
        assert_eq!(q_apply(&fs, &s).unwrap(), q_apply_coordinate(&fs, &s).unwrap());
    }

    #[test]
    fn composition_examples() {
        let flat = cache(Builtin::Flat, 1, 8);
        let z = Symbol::from_jet(&mono(5, &[0], &[], q(1)));
        let eb = Symbol::fiber_monomial(1, 5, etabar(1));
        let expected = &z.shift(etabar(1)) + &Symbol::from_jet(&Jet::one(1, 4));
        assert_eq!(compose(&flat, &eb, &z).unwrap(), expected.truncated(4));

        let zb = Symbol::from_jet(&mono(5, &[], &[0], q(1)));
        let zeta = FiberIndex::var(FiberVar::ZetaBar(0));
        let zs = Symbol::fiber_monomial(1, 5, zeta);
        let expected = &zb.shift(zeta) - &Symbol::from_jet(&Jet::one(1, 4));
        assert_eq!(compose(&flat, &zb, &zs).unwrap(), expected);

        let fs = cache(Builtin::FubiniStudy, 1, 8);
        let phi_l = Symbol::from_jet(
            &fs.potential_derivative(&MultiIndex::from_indices(&[], &[0]))
                .unwrap()
                .truncated(5),
        );
        let f = &Symbol::monomial(etabar(2), &mono(5, &[0], &[], q(3))) + &zb;
        assert_eq!(compose(&fs, &phi_l, &f).unwrap(), &phi_l * &f);
    }

    #[test]
    fn apply_examples() {
        let flat = cache(Builtin::Flat, 1, 8);
        let z = mono(5, &[0], &[], q(1));
        let zb = mono(5, &[], &[0], q(1));
        let eb = Symbol::fiber_monomial(1, 5, etabar(1));
        assert_eq!(apply_symbol_operator(&flat, &eb, &z).unwrap(), Jet::one(1, 4));
        let f = mono(5, &[0, 0], &[0], GaussRational::i());
        assert_eq!(
            apply_symbol_operator(&flat, &Symbol::from_jet(&f), &z).unwrap(),
            &f * &z
        );
        let zs = Symbol::fiber_monomial(1, 5, FiberIndex::var(FiberVar::ZetaBar(0)));
        assert_eq!(apply_symbol_operator(&flat, &zs, &zb).unwrap(), Jet::one(1, 4));
        // Φ_z̄z̄ = 0 on flat space, so D̄₁ = ∂_z̄ there.
        assert!(apply_symbol_operator(&flat, &zs, &z).unwrap().is_zero());
        let fs = cache(Builtin::FubiniStudy, 1, 8);
        // On Fubini-Study D̄₁z = -Φ_z̄z̄ g^{1̄1} = z² + O(z³z̄).
        let d = apply_symbol_operator(&fs, &zs, &z).unwrap();
        assert_eq!(d.truncated(3), mono(3, &[0, 0], &[], q(1)));
    }

    #[test]
    fn left_symbol_examples() {
        let flat = cache(Builtin::Flat, 1, 10);
        let zb = mono(6, &[], &[0], q(1));
        let f = NuSeries::new(vec![zb.clone(), Jet::zero(1, 6), Jet::zero(1, 6)]);
        let s = left_mult_symbol(&flat, &f).unwrap();
        assert_eq!(s[0], Symbol::from_jet(&zb));
        assert_eq!(s[1], Symbol::fiber_monomial(1, 5, etabar(1)));
        assert!(s[2].is_zero());

        let zb2 = mono(6, &[], &[0, 0], q(1));
        let f = NuSeries::new(vec![zb2.clone(), Jet::zero(1, 6), Jet::zero(1, 6)]);
        let s = left_mult_symbol(&flat, &f).unwrap();
        assert_eq!(s[1], Symbol::monomial(etabar(1), &mono(5, &[], &[0], q(2))));
        assert_eq!(s[2], Symbol::fiber_monomial(1, 4, etabar(2)));

        let fs = cache(Builtin::FubiniStudy, 2, 10);
        let one = NuSeries::new(vec![Jet::one(2, 5), Jet::zero(2, 5), Jet::zero(2, 5)]);
        let s = left_mult_symbol(&fs, &one).unwrap();
        assert_eq!(s[0], Symbol::from_jet(&Jet::one(2, 5)));
        assert!(s[1].is_zero() && s[2].is_zero());
    }
}
