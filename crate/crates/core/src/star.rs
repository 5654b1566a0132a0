//! The star product, its invariant total symbol `T`, and the closed-form
//! expansion of `T` through `ν⁴`.

use serde::Serialize;

use crate::calculus::{apply_symbol_operator_memo, euler_inverse, left_mult_symbol, q_apply, ContravariantMemo};
use crate::error::{exhausted, Error, Result};
use crate::geometry::{GeometryCache, Orientation};
use crate::jet::{Exponents, Jet};
use crate::scalar::{GaussRational, Rational};
use crate::symbol::{FiberIndex, NuSeries, Symbol};

/// Potential order that suffices for output jets of order `jet_order`
/// through `ν^nu_order`.
pub fn required_phi_order(jet_order: u32, nu_order: u32) -> u32 {
    jet_order + 2 * nu_order + 4
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StarMeta {
    pub potential: String,
    pub phi_order: u32,
    pub base_point: String,
    pub nu_order: usize,
    pub jet_order: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StarResult {
    pub series: NuSeries<Jet>,
    pub meta: StarMeta,
}

fn meta(g: &GeometryCache, nu_order: usize, jet_order: u32) -> StarMeta {
    StarMeta {
        potential: g.label().to_string(),
        phi_order: g.phi_order(),
        base_point: "origin".into(),
        nu_order,
        jet_order,
    }
}

fn need(what: &str, have: u32, want: u32) -> Result<()> {
    if have < want {
        return Err(exhausted(what, want as i64, have as i64));
    }
    Ok(())
}

/// `f ⋆ g` through `ν^nu_order`, exact to `jet_order`.
///
/// Both inputs must be exact to `jet_order + nu_order`.
pub fn star(g: &GeometryCache, f: &Jet, h: &Jet, nu_order: usize, jet_order: u32) -> Result<StarResult> {
    let lift = |j: &Jet| {
        let mut c = vec![Jet::zero(j.n(), j.order()); nu_order + 1];
        c[0] = j.clone();
        NuSeries::new(c)
    };
    let series = star_series(g, &lift(f), &lift(h), jet_order)?;
    Ok(StarResult {
        series,
        meta: meta(g, nu_order, jet_order),
    })
}

/// Star product of two `ν`-series, truncated at the shorter one, every
/// component exact to `jet_order`.
///
/// Component `i` of each input must be exact to `jet_order + top - i`.
pub fn star_series(
    g: &GeometryCache,
    f: &NuSeries<Jet>,
    h: &NuSeries<Jet>,
    jet_order: u32,
) -> Result<NuSeries<Jet>> {
    Ok(star_series_graded(g, f, h, jet_order)?.map(|j| j.truncated(jet_order)))
}

/// Like [`star_series`], but component `r` of the result is kept exact to
/// `base + top - r`, which is what a further star product with the result
/// needs.
pub fn star_series_graded(
    g: &GeometryCache,
    f: &NuSeries<Jet>,
    h: &NuSeries<Jet>,
    base: u32,
) -> Result<NuSeries<Jet>> {
    let top = f.order().min(h.order());
    let want = |i: usize| base + (top - i) as u32;
    for s in [f, h] {
        for (i, j) in s.components()[..=top].iter().enumerate() {
            if j.n() != g.n() {
                return Err(Error::DimensionMismatch {
                    left: g.n(),
                    right: j.n(),
                });
            }
            need("star product input", j.order(), want(i))?;
        }
    }
    let f = NuSeries::new(f.components()[..=top].iter().enumerate().map(|(i, j)| j.truncated(want(i))).collect());
    let symbols = left_mult_symbol(g, &f)?;
    let mut memos: Vec<ContravariantMemo> = (0..=top)
        .map(|j| ContravariantMemo::new(g, h[j].truncated(want(j)), Orientation::Antiholo))
        .collect();
    let mut out = Vec::with_capacity(top + 1);
    for r in 0..=top {
        let mut acc = Jet::zero(g.n(), want(r));
        for i in 0..=r {
            let term = apply_symbol_operator_memo(g, &symbols[i], &mut memos[r - i])?;
            need("star product component", term.order(), want(r))?;
            acc = &acc + &term.truncated(want(r));
        }
        out.push(acc);
    }
    Ok(NuSeries::new(out))
}

/// `f ⋆ g` with component `r` exact to `base + nu_order - r`; the inputs
/// must be exact to `base + nu_order`.
pub fn star_graded(g: &GeometryCache, f: &Jet, h: &Jet, nu_order: usize, base: u32) -> Result<NuSeries<Jet>> {
    let lift = |j: &Jet| {
        let mut c = vec![Jet::zero(j.n(), j.order()); nu_order + 1];
        c[0] = j.clone();
        NuSeries::new(c)
    };
    star_series_graded(g, &lift(f), &lift(h), base)
}

/// The invariant total symbol `T = Σ ν^r T_r`, a polynomial in `η`, `η̄`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorT {
    pub series: NuSeries<Symbol>,
}

impl TensorT {
    pub fn order(&self) -> usize {
        self.series.order()
    }

    pub fn at_origin(&self) -> TensorT {
        TensorT {
            series: self.series.map(Symbol::at_origin),
        }
    }

    pub fn truncated(&self, nu_order: usize, jet_order: u32) -> TensorT {
        let top = nu_order.min(self.order());
        TensorT {
            series: NuSeries::new(
                self.series.components()[..=top]
                    .iter()
                    .map(|s| s.truncated(jet_order))
                    .collect(),
            ),
        }
    }

    /// The tensor component `T_{k₁…k_r l̄₁…l̄_s}` of `ν^nu`, indices zero-based.
    pub fn component(&self, nu: usize, holo: &[usize], antiholo: &[usize]) -> Jet {
        let s = &self.series[nu];
        let fi = FiberIndex {
            eta: Exponents::from_indices(holo),
            eta_bar: Exponents::from_indices(antiholo),
            ..FiberIndex::ONE
        };
        let w = &fi.eta.orderings() * &fi.eta_bar.orderings();
        s.coeff(&fi).scale_rational(&w.recip().expect("orderings are positive"))
    }
}

/// `T_r = E⁻¹(Q + γ) T_{r-1}`, `T_0 = 1`, exact to `jet_order`.
pub fn tensor_t(g: &GeometryCache, nu_order: usize, jet_order: u32) -> Result<TensorT> {
    let n = g.n();
    let start = jet_order + nu_order as u32;
    let mut comps = vec![Symbol::fiber_monomial(n, start, FiberIndex::ONE)];
    for r in 1..=nu_order {
        let prev = &comps[r - 1];
        let qt = q_apply(g, prev)?;
        let gamma = g.gamma(qt.order())?;
        let next = euler_inverse(&(&qt + &(&gamma * prev)))?;
        assert!(
            next.max_eta_bar_degree() as usize <= r && next.max_eta_degree() as usize <= r,
            "T component {r} exceeds fiber degree {r}"
        );
        comps.push(next);
    }
    for c in &comps {
        need("tensor T", c.order(), jet_order)?;
    }
    Ok(TensorT {
        series: NuSeries::new(comps.iter().map(|c| c.truncated(jet_order)).collect()),
    })
}

/// `u ⋆ v = Σ T_{KL̄} (D^K u)(D̄^L v)` through the order of `t`.
///
/// `u` and `v` must be exact to `jet_order + t.order()`.
pub fn star_via_t(g: &GeometryCache, t: &TensorT, u: &Jet, v: &Jet, jet_order: u32) -> Result<NuSeries<Jet>> {
    let top = t.order();
    let input_order = jet_order + top as u32;
    need("star input", u.order(), input_order)?;
    need("star input", v.order(), input_order)?;
    let mut du = ContravariantMemo::new(g, u.truncated(input_order), Orientation::Holo);
    let mut dv = ContravariantMemo::new(g, v.truncated(input_order), Orientation::Antiholo);
    let mut out = Vec::with_capacity(top + 1);
    for r in 0..=top {
        let tr = &t.series[r];
        need("tensor T", tr.order(), jet_order)?;
        let mut acc = Jet::zero(g.n(), jet_order);
        for (k, c) in tr.terms() {
            let term = &(&c.truncated(jet_order) * du.get(k.eta)?) * dv.get(k.eta_bar)?;
            need("star via T", term.order(), jet_order)?;
            acc = &acc + &term;
        }
        out.push(acc);
    }
    Ok(NuSeries::new(out))
}

/// `T` through `ν^min(nu_order, 4)` assembled from the canonical tensors:
/// `1 + νγ + ν²γ²/2 + ν³(γ³/6 + ρ₂₂/4)
///  + ν⁴(γ⁴/24 + γρ₂₂/4 + ρ₂₃/12 + ρ₃₂/12 + ρ̃/8)`.
pub fn closed_form_t_reference(g: &GeometryCache, nu_order: usize, jet_order: u32) -> Result<TensorT> {
    let top = nu_order.min(4);
    let n = g.n();
    let frac = |p: i64, q: i64| Rational::new(p, q).expect("nonzero denominator");
    let gamma = g.gamma(jet_order)?;
    let mut powers = vec![Symbol::fiber_monomial(n, jet_order, FiberIndex::ONE)];
    for k in 1..=top {
        powers.push(&powers[k - 1] * &gamma);
    }
    let mut comps: Vec<Symbol> = (0..=top)
        .map(|k| powers[k].scale_rational(&crate::jet::factorial(k as u32).recip().unwrap()))
        .collect();
    if top >= 3 {
        let rho22 = g.rho(2, 2, jet_order)?;
        comps[3] = &comps[3] + &rho22.scale_rational(&frac(1, 4));
        if top >= 4 {
            let extra = [
                (&gamma * &rho22).scale_rational(&frac(1, 4)),
                g.rho(2, 3, jet_order)?.scale_rational(&frac(1, 12)),
                g.rho(3, 2, jet_order)?.scale_rational(&frac(1, 12)),
                g.rho_tilde(jet_order)?.scale_rational(&frac(1, 8)),
            ];
            for e in &extra {
                comps[4] = &comps[4] + e;
            }
        }
    }
    Ok(TensorT {
        series: NuSeries::new(comps),
    })
}

/// Constant coefficient of the fiber monomial `η^a η̄^b`, exponents given
/// per index.
pub fn origin_coefficient(s: &Symbol, eta: &[u32], eta_bar: &[u32]) -> GaussRational {
    let fi = FiberIndex {
        eta: Exponents::from_counts(eta),
        eta_bar: Exponents::from_counts(eta_bar),
        ..FiberIndex::ONE
    };
    s.coeff(&fi).constant_term()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{builtin_potential, Builtin, MultiIndex};

    fn cache(kind: Builtin, n: usize, order: u32) -> GeometryCache {
        GeometryCache::new(builtin_potential(kind, n, order).unwrap()).unwrap()
    }

    fn var(n: usize, order: u32, holo: &[usize], anti: &[usize]) -> Jet {
        Jet::monomial(n, order, MultiIndex::from_indices(holo, anti), GaussRational::one())
    }

    #[test]
    fn flat_zbar_star_z() {
        let flat = cache(Builtin::Flat, 1, 12);
        let r = star(&flat, &var(1, 6, &[], &[0]), &var(1, 6, &[0], &[]), 2, 4).unwrap();
        assert_eq!(r.series[0], var(1, 4, &[0], &[0]));
        assert_eq!(r.series[1], Jet::one(1, 4));
        assert!(r.series[2].is_zero());
        assert_eq!(r.meta.nu_order, 2);
    }

    #[test]
    fn holomorphic_left_factor_multiplies() {
        let fs = cache(Builtin::FubiniStudy, 1, 12);
        let a = var(1, 7, &[0, 0], &[]);
        let h = &var(1, 7, &[0], &[0]) + &var(1, 7, &[], &[0, 0]);
        let r = star(&fs, &a, &h, 3, 4).unwrap();
        assert_eq!(r.series[0], (&a * &h).truncated(4));
        for k in 1..=3 {
            assert!(r.series[k].is_zero());
        }
        let one = Jet::one(1, 7);
        assert_eq!(star(&fs, &h, &one, 3, 4).unwrap().series[0], h.truncated(4));
        assert!(star(&fs, &one, &h, 3, 4).unwrap().series[2].is_zero());
    }

    #[test]
    fn tensor_t_examples() {
        let flat = cache(Builtin::Flat, 1, 14);
        let t = tensor_t(&flat, 3, 3).unwrap();
        assert_eq!(t.series[1], flat.gamma(3).unwrap());
        assert_eq!(origin_coefficient(&t.series[3], &[3], &[3]), GaussRational::ratio(1, 6));
        assert_eq!(t.series[3].len(), 1);

        let fs = cache(Builtin::FubiniStudy, 1, 14);
        let t = tensor_t(&fs, 3, 2).unwrap().at_origin();
        assert_eq!(origin_coefficient(&t.series[3], &[3], &[3]), GaussRational::ratio(1, 6));
        assert_eq!(origin_coefficient(&t.series[3], &[2], &[2]), GaussRational::ratio(1, 2));
    }

    #[test]
    fn closed_form_matches_recursion_on_fubini_study() {
        let fs = cache(Builtin::FubiniStudy, 1, 16);
        let t = tensor_t(&fs, 4, 3).unwrap();
        let reference = closed_form_t_reference(&fs, 4, 3).unwrap();
        assert_eq!(t, reference);
        let origin = reference.at_origin();
        assert_eq!(origin_coefficient(&origin.series[3], &[2], &[2]), GaussRational::ratio(1, 2));
        assert_eq!(origin_coefficient(&origin.series[4], &[2], &[2]), GaussRational::ratio(1, 2));
    }

    #[test]
    fn star_via_t_agrees_on_flat() {
        let flat = cache(Builtin::Flat, 1, 12);
        let t = tensor_t(&flat, 2, 4).unwrap();
        let s = star_via_t(&flat, &t, &var(1, 6, &[], &[0]), &var(1, 6, &[0], &[]), 4).unwrap();
        assert_eq!(s[0], var(1, 4, &[0], &[0]));
        assert_eq!(s[1], Jet::one(1, 4));
        assert!(s[2].is_zero());
    }

    #[test]
    fn tensor_components_are_symmetric() {
        let fs = cache(Builtin::FubiniStudy, 2, 14);
        let t = tensor_t(&fs, 3, 2).unwrap();
        let a = t.component(3, &[0, 1, 1], &[1, 0]);
        assert_eq!(a, t.component(3, &[1, 0, 1], &[0, 1]));
        assert_eq!(a, t.component(3, &[1, 1, 0], &[1, 0]));
    }

    #[test]
    fn insufficient_input_order_is_rejected() {
        let flat = cache(Builtin::Flat, 1, 12);
        let err = star(&flat, &var(1, 3, &[], &[0]), &var(1, 6, &[0], &[]), 2, 4).unwrap_err();
        assert!(matches!(err, Error::OrderExhausted { .. }));
    }
}
