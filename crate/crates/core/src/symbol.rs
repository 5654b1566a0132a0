//! Fiber polynomials with jet coefficients.
//!
//! A [`Symbol`] is a polynomial in the fiber variables `ζ̄_l`, `η^k`, `η̄^l`
//! whose coefficients are [`Jet`]s. Symbols of operators commuting with
//! `z̄` only use `η̄`; the invariant tensor `T` also uses `η`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::jet::{check_shape, write_powers, Exponents, Jet};
use crate::scalar::{GaussRational, Rational};

/// A fiber variable (zero-based index).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FiberVar {
    ZetaBar(usize),
    Eta(usize),
    EtaBar(usize),
}

/// Exponents of a fiber monomial `ζ̄^a η^b η̄^c`.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct FiberIndex {
    pub zeta_bar: Exponents,
    pub eta: Exponents,
    pub eta_bar: Exponents,
}

impl FiberIndex {
    pub const ONE: FiberIndex = FiberIndex {
        zeta_bar: Exponents::EMPTY,
        eta: Exponents::EMPTY,
        eta_bar: Exponents::EMPTY,
    };

    pub fn eta_bar(e: Exponents) -> Self {
        FiberIndex {
            eta_bar: e,
            ..Self::ONE
        }
    }

    pub fn eta(e: Exponents) -> Self {
        FiberIndex { eta: e, ..Self::ONE }
    }

    pub fn zeta_bar(e: Exponents) -> Self {
        FiberIndex {
            zeta_bar: e,
            ..Self::ONE
        }
    }

    pub fn var(v: FiberVar) -> Self {
        Self::ONE.times(v)
    }

    pub fn degree(self) -> u32 {
        self.zeta_bar.degree() + self.eta.degree() + self.eta_bar.degree()
    }

    pub fn times(self, v: FiberVar) -> Self {
        let mut out = self;
        match v {
            FiberVar::ZetaBar(l) => out.zeta_bar = out.zeta_bar.incremented(l),
            FiberVar::Eta(k) => out.eta = out.eta.incremented(k),
            FiberVar::EtaBar(l) => out.eta_bar = out.eta_bar.incremented(l),
        }
        out
    }

    pub fn plus(self, other: Self) -> Self {
        FiberIndex {
            zeta_bar: self.zeta_bar.plus(other.zeta_bar),
            eta: self.eta.plus(other.eta),
            eta_bar: self.eta_bar.plus(other.eta_bar),
        }
    }

    pub fn exponent(self, v: FiberVar) -> u32 {
        match v {
            FiberVar::ZetaBar(l) => self.zeta_bar.get(l),
            FiberVar::Eta(k) => self.eta.get(k),
            FiberVar::EtaBar(l) => self.eta_bar.get(l),
        }
    }

    /// Renders as `eta1^c*etabar1^d*zetabar1^e`, or `1` if constant.
    pub fn render(self, n: usize) -> String {
        let mut parts = Vec::new();
        self.write_parts(&mut parts, n);
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }

    pub(crate) fn write_parts(self, parts: &mut Vec<String>, n: usize) {
        write_powers(parts, "eta", self.eta, n);
        write_powers(parts, "etabar", self.eta_bar, n);
        write_powers(parts, "zetabar", self.zeta_bar, n);
    }
}

impl Ord for FiberIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.eta.cmp(&other.eta))
            .then_with(|| self.eta_bar.cmp(&other.eta_bar))
            .then_with(|| self.zeta_bar.cmp(&other.zeta_bar))
    }
}

impl PartialOrd for FiberIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for FiberIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(4))
    }
}

/// Polynomial in the fiber variables with jet coefficients, all exact to a
/// common order.
#[derive(Clone, PartialEq, Eq)]
pub struct Symbol {
    n: usize,
    order: u32,
    terms: BTreeMap<FiberIndex, Jet>,
}

impl Symbol {
    pub fn zero(n: usize, order: u32) -> Self {
        check_shape(n, order).expect("invalid symbol shape");
        Symbol {
            n,
            order,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_jet(f: &Jet) -> Self {
        Self::monomial(FiberIndex::ONE, f)
    }

    pub fn monomial(fiber: FiberIndex, coeff: &Jet) -> Self {
        let mut s = Self::zero(coeff.n(), coeff.order());
        if !coeff.is_zero() {
            s.terms.insert(fiber, coeff.clone());
        }
        s
    }

    /// A fiber monomial with constant coefficient one.
    pub fn fiber_monomial(n: usize, order: u32, fiber: FiberIndex) -> Self {
        Self::monomial(fiber, &Jet::one(n, order))
    }

    /// Sums the terms; the common order is the smallest of `order` and the
    /// coefficient orders.
    pub fn from_terms<I>(n: usize, order: u32, terms: I) -> Self
    where
        I: IntoIterator<Item = (FiberIndex, Jet)>,
    {
        let terms: Vec<(FiberIndex, Jet)> = terms.into_iter().collect();
        let order = terms.iter().map(|(_, j)| j.order()).fold(order, u32::min);
        let mut s = Self::zero(n, order);
        for (fi, j) in terms {
            debug_assert_eq!(j.n(), n);
            s.add_term(fi, &j.truncated(order));
        }
        s
    }

    fn add_term(&mut self, fi: FiberIndex, j: &Jet) {
        debug_assert!(j.order() >= self.order);
        if j.is_zero() {
            return;
        }
        match self.terms.get_mut(&fi) {
            Some(existing) => {
                let sum = &*existing + j;
                if sum.is_zero() {
                    self.terms.remove(&fi);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(fi, j.truncated(self.order));
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FiberIndex, &Jet)> {
        self.terms.iter()
    }

    pub fn coeff(&self, fi: &FiberIndex) -> Jet {
        self.terms
            .get(fi)
            .cloned()
            .unwrap_or_else(|| Jet::zero(self.n, self.order))
    }

    pub fn max_eta_bar_degree(&self) -> u32 {
        self.terms.keys().map(|k| k.eta_bar.degree()).max().unwrap_or(0)
    }

    pub fn max_eta_degree(&self) -> u32 {
        self.terms.keys().map(|k| k.eta.degree()).max().unwrap_or(0)
    }

    pub fn has_zeta_bar(&self) -> bool {
        self.terms.keys().any(|k| !k.zeta_bar.is_empty())
    }

    pub fn has_eta(&self) -> bool {
        self.terms.keys().any(|k| !k.eta.is_empty())
    }

    /// Terms with no `η̄`, i.e. the restriction to `η̄ = 0`.
    pub fn eta_bar_free_part(&self) -> Symbol {
        self.filter(|fi| fi.eta_bar.is_empty())
    }

    pub fn filter(&self, keep: impl Fn(&FiberIndex) -> bool) -> Symbol {
        Symbol {
            n: self.n,
            order: self.order,
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, j)| (*k, j.clone()))
                .collect(),
        }
    }

    pub fn truncate(&self, order: u32) -> Result<Symbol> {
        if order > self.order {
            return Err(crate::error::exhausted(
                "symbol truncate",
                order as i64,
                self.order as i64,
            ));
        }
        Ok(self.truncated(order))
    }

    pub fn truncated(&self, order: u32) -> Symbol {
        if order >= self.order {
            return self.clone();
        }
        let mut s = Symbol::zero(self.n, order);
        for (k, j) in &self.terms {
            s.add_term(*k, &j.truncated(order));
        }
        s
    }

    /// Keeps only the constant coefficient of every jet.
    pub fn at_origin(&self) -> Symbol {
        self.truncated(0)
    }

    fn check_dim(&self, other: &Symbol) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Symbol) -> Result<Symbol> {
        self.check_dim(other)?;
        let mut s = self.truncated(other.order);
        for (k, j) in &other.terms {
            s.add_term(*k, &j.truncated(s.order));
        }
        Ok(s)
    }

    pub fn scale(&self, c: &GaussRational) -> Symbol {
        let mut s = Symbol::zero(self.n, self.order);
        for (k, j) in &self.terms {
            s.add_term(*k, &j.scale(c));
        }
        s
    }

    pub fn scale_rational(&self, c: &Rational) -> Symbol {
        self.scale(&GaussRational::real(c.clone()))
    }

    pub fn mul_jet(&self, f: &Jet) -> Symbol {
        let order = self.order.min(f.order());
        let mut s = Symbol::zero(self.n, order);
        for (k, j) in &self.terms {
            s.add_term(*k, &(j * f));
        }
        s
    }

    /// Multiplies every term by a fiber monomial.
    pub fn shift(&self, fi: FiberIndex) -> Symbol {
        Symbol {
            n: self.n,
            order: self.order,
            terms: self.terms.iter().map(|(k, j)| (k.plus(fi), j.clone())).collect(),
        }
    }

    /// Pointwise product of fiber polynomials.
    pub fn checked_mul(&self, other: &Symbol) -> Result<Symbol> {
        self.check_dim(other)?;
        let order = self.order.min(other.order);
        let mut s = Symbol::zero(self.n, order);
        for (ka, ja) in &self.terms {
            for (kb, jb) in &other.terms {
                s.add_term(ka.plus(*kb), &(ja * jb));
            }
        }
        Ok(s)
    }

    /// `∂/∂v` on the fiber variable; coefficients are untouched.
    pub fn fiber_partial(&self, v: FiberVar) -> Symbol {
        let mut s = Symbol::zero(self.n, self.order);
        for (k, j) in &self.terms {
            let e = k.exponent(v);
            if e == 0 {
                continue;
            }
            let mut nk = *k;
            match v {
                FiberVar::ZetaBar(l) => nk.zeta_bar = k.zeta_bar.decremented(l).unwrap(),
                FiberVar::Eta(i) => nk.eta = k.eta.decremented(i).unwrap(),
                FiberVar::EtaBar(l) => nk.eta_bar = k.eta_bar.decremented(l).unwrap(),
            }
            s.add_term(nk, &j.scale(&GaussRational::from_integer(e as i64)));
        }
        s
    }

    /// `∂^α/∂η̄^α`.
    pub fn eta_bar_derivative(&self, alpha: Exponents) -> Symbol {
        alpha.indices().into_iter().fold(self.clone(), |acc, l| {
            acc.fiber_partial(FiberVar::EtaBar(l))
        })
    }

    /// `∂^β/∂ζ̄^β`.
    pub fn zeta_bar_derivative(&self, beta: Exponents) -> Symbol {
        beta.indices().into_iter().fold(self.clone(), |acc, l| {
            acc.fiber_partial(FiberVar::ZetaBar(l))
        })
    }

    /// Applies a fallible map to every coefficient. The result order is the
    /// smallest order returned (or `empty_order` when there are no terms).
    pub fn try_map_jets(
        &self,
        empty_order: u32,
        f: impl Fn(&Jet) -> Result<Jet>,
    ) -> Result<Symbol> {
        let mapped: Vec<(FiberIndex, Jet)> = self
            .terms
            .iter()
            .map(|(k, j)| f(j).map(|m| (*k, m)))
            .collect::<Result<_>>()?;
        Ok(Symbol::from_terms(self.n, empty_order, mapped))
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0 [order {}]", self.order);
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(k, j)| format!("({j})*{}", k.render(self.n)))
            .collect();
        write!(f, "{} [order {}]", parts.join(" + "), self.order)
    }
}

impl Add for &Symbol {
    type Output = Symbol;
    fn add(self, rhs: &Symbol) -> Symbol {
        self.checked_add(rhs).expect("symbol dimension mismatch")
    }
}

impl Sub for &Symbol {
    type Output = Symbol;
    fn sub(self, rhs: &Symbol) -> Symbol {
        self.checked_add(&-rhs).expect("symbol dimension mismatch")
    }
}

impl Mul for &Symbol {
    type Output = Symbol;
    fn mul(self, rhs: &Symbol) -> Symbol {
        self.checked_mul(rhs).expect("symbol dimension mismatch")
    }
}

impl Neg for &Symbol {
    type Output = Symbol;
    fn neg(self) -> Symbol {
        Symbol {
            n: self.n,
            order: self.order,
            terms: self.terms.iter().map(|(k, j)| (*k, -j)).collect(),
        }
    }
}

/// A formal series `Σ_{r ≤ N} ν^r c_r` truncated at `N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NuSeries<T> {
    components: Vec<T>,
}

impl<T> NuSeries<T> {
    /// `components[r]` is the coefficient of `ν^r`. Must be non-empty.
    pub fn new(components: Vec<T>) -> Self {
        assert!(!components.is_empty(), "a ν-series needs a ν^0 component");
        NuSeries { components }
    }

    /// The truncation order `N`.
    pub fn order(&self) -> usize {
        self.components.len() - 1
    }

    pub fn get(&self, r: usize) -> Option<&T> {
        self.components.get(r)
    }

    pub fn components(&self) -> &[T] {
        &self.components
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.components.iter()
    }

    pub fn into_components(self) -> Vec<T> {
        self.components
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> NuSeries<U> {
        NuSeries {
            components: self.components.iter().map(f).collect(),
        }
    }
}

impl<T> std::ops::Index<usize> for NuSeries<T> {
    type Output = T;
    fn index(&self, r: usize) -> &T {
        &self.components[r]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{MultiIndex, Var};

    #[test]
    fn fiber_rendering_and_order() {
        let fi = FiberIndex::ONE
            .times(FiberVar::Eta(0))
            .times(FiberVar::EtaBar(0))
            .times(FiberVar::EtaBar(0));
        assert_eq!(fi.render(1), "eta1*etabar1^2");
        assert_eq!(FiberIndex::ONE.render(2), "1");
        assert!(FiberIndex::var(FiberVar::EtaBar(0)) < fi);
    }

    #[test]
    fn product_and_fiber_derivative() {
        let z = Jet::variable(1, 3, Var::Holo(0)).unwrap();
        let eb = Symbol::fiber_monomial(1, 3, FiberIndex::var(FiberVar::EtaBar(0)));
        let s = &eb.mul_jet(&z) * &eb;
        let two_eb = FiberIndex::eta_bar(Exponents::from_indices(&[0, 0]));
        assert_eq!(s.coeff(&two_eb), z);
        let d = s.fiber_partial(FiberVar::EtaBar(0));
        assert_eq!(
            d.coeff(&FiberIndex::var(FiberVar::EtaBar(0))),
            z.scale(&GaussRational::from_integer(2))
        );
        assert!(d.fiber_partial(FiberVar::Eta(0)).is_zero());
    }

    #[test]
    fn common_order_is_minimum() {
        let a = Jet::one(1, 5);
        let b = Jet::monomial(1, 2, MultiIndex::from_indices(&[0], &[]), GaussRational::one());
        let s = Symbol::from_terms(
            1,
            9,
            [
                (FiberIndex::ONE, a),
                (FiberIndex::var(FiberVar::EtaBar(0)), b),
            ],
        );
        assert_eq!(s.order(), 2);
        assert!(s.terms().all(|(_, j)| j.order() == 2));
        assert_eq!(s.max_eta_bar_degree(), 1);
        assert_eq!(s.eta_bar_free_part().len(), 1);
    }

    #[test]
    fn cancellation_prunes_terms() {
        let s = Symbol::fiber_monomial(1, 2, FiberIndex::var(FiberVar::Eta(0)));
        assert!((&s - &s).is_zero());
    }
}
