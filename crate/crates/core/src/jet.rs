//! Truncated multivariate power series around the chart origin.
//!
//! A [`Jet`] in chart dimension `n` is a polynomial in the `2n` formal
//! variables `z^1..z^n, z̄^1..z̄^n` together with the order up to which its
//! coefficients are exact. Anything of higher total degree is unknown and is
//! never stored.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rustc_hash::FxHashMap;

use crate::error::{exhausted, Error, Result};
use crate::scalar::{GaussRational, Rational};

pub const MAX_DIM: usize = 4;
pub const MAX_ORDER: u32 = 200;

pub(crate) fn check_shape(n: usize, order: u32) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::UnsupportedDimension(n));
    }
    if order > MAX_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    Ok(())
}

/// Multiset of indices in `0..4`, stored as one exponent byte per index.
///
/// Ordered graded-lexicographically: lower total degree first, then larger
/// exponents on lower indices first.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Exponents(u32);

impl Exponents {
    pub const EMPTY: Exponents = Exponents(0);

    pub fn unit(i: usize) -> Self {
        debug_assert!(i < MAX_DIM);
        Exponents(1 << (8 * i))
    }

    /// Builds the multiset from a list of (possibly repeated) indices.
    pub fn from_indices(indices: &[usize]) -> Self {
        indices
            .iter()
            .fold(Self::EMPTY, |acc, &i| acc.incremented(i))
    }

    pub fn from_counts(counts: &[u32]) -> Self {
        let mut e = Self::EMPTY;
        for (i, &c) in counts.iter().enumerate() {
            debug_assert!(c < 256);
            e.0 += c << (8 * i);
        }
        e
    }

    #[inline]
    pub fn get(self, i: usize) -> u32 {
        (self.0 >> (8 * i)) & 0xff
    }

    #[inline]
    pub fn degree(self) -> u32 {
        let x = self.0;
        (x & 0xff) + ((x >> 8) & 0xff) + ((x >> 16) & 0xff) + (x >> 24)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn incremented(self, i: usize) -> Self {
        debug_assert!(self.get(i) < 255);
        Exponents(self.0 + (1 << (8 * i)))
    }

    #[inline]
    pub fn decremented(self, i: usize) -> Option<Self> {
        (self.get(i) > 0).then(|| Exponents(self.0 - (1 << (8 * i))))
    }

    /// Multiset union (exponent-wise sum).
    #[inline]
    pub fn plus(self, other: Self) -> Self {
        Exponents(self.0 + other.0)
    }

    /// Multiset difference, if `other` is contained in `self`.
    pub fn minus(self, other: Self) -> Option<Self> {
        other
            .divides(self)
            .then(|| Exponents(self.0 - other.0))
    }

    /// Whether `self` is a sub-multiset of `other`.
    pub fn divides(self, other: Self) -> bool {
        (0..MAX_DIM).all(|i| self.get(i) <= other.get(i))
    }

    /// Every sub-multiset of `self`, including the empty one and `self`.
    pub fn sub_multisets(self) -> Vec<Exponents> {
        let mut out = vec![Self::EMPTY];
        for i in 0..MAX_DIM {
            let c = self.get(i);
            if c == 0 {
                continue;
            }
            let prev = std::mem::take(&mut out);
            for e in prev {
                for k in 0..=c {
                    out.push(Exponents(e.0 + (k << (8 * i))));
                }
            }
        }
        out
    }

    /// All multisets of the given size over indices `0..n`, in graded order.
    pub fn all_of_degree(n: usize, degree: u32) -> Vec<Exponents> {
        fn rec(n: usize, i: usize, left: u32, acc: u32, out: &mut Vec<Exponents>) {
            if i + 1 == n {
                out.push(Exponents(acc + (left << (8 * i))));
                return;
            }
            for c in (0..=left).rev() {
                rec(n, i + 1, left - c, acc + (c << (8 * i)), out);
            }
        }
        let mut out = Vec::new();
        rec(n, 0, degree, 0, &mut out);
        out
    }

    /// Expands the multiset into a sorted index list.
    pub fn indices(self) -> Vec<usize> {
        let mut v = Vec::with_capacity(self.degree() as usize);
        for i in 0..MAX_DIM {
            for _ in 0..self.get(i) {
                v.push(i);
            }
        }
        v
    }

    /// `α! = Π α_i!`.
    pub fn factorial(self) -> Rational {
        (0..MAX_DIM).fold(Rational::one(), |acc, i| &acc * &factorial(self.get(i)))
    }

    /// Number of distinct orderings of the multiset, `|α|! / α!`.
    pub fn orderings(self) -> Rational {
        &factorial(self.degree()) / &self.factorial()
    }

    fn lex_key(self) -> u32 {
        self.0.swap_bytes()
    }

    #[inline]
    fn raw(self) -> u32 {
        self.0
    }
}

impl Ord for Exponents {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.lex_key().cmp(&self.lex_key()))
    }
}

impl PartialOrd for Exponents {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Exponents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.indices())
    }
}

pub fn factorial(k: u32) -> Rational {
    (2..=k as i64).fold(Rational::one(), |acc, i| &acc * &Rational::from_integer(i))
}

/// Writes `name1^a*name2^b...` for the nonzero exponents; nothing if empty.
pub(crate) fn write_powers(
    out: &mut Vec<String>,
    name: &str,
    e: Exponents,
    n: usize,
) {
    for i in 0..n {
        match e.get(i) {
            0 => {}
            1 => out.push(format!("{name}{}", i + 1)),
            p => out.push(format!("{name}{}^{p}", i + 1)),
        }
    }
}

/// A monomial `z^α z̄^β`: the pair of holomorphic and antiholomorphic
/// index multisets of a mixed partial derivative.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    pub holo: Exponents,
    pub antiholo: Exponents,
}

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex {
        holo: Exponents::EMPTY,
        antiholo: Exponents::EMPTY,
    };

    pub fn new(holo: Exponents, antiholo: Exponents) -> Self {
        MultiIndex { holo, antiholo }
    }

    /// From index lists, e.g. `from_indices(&[0, 0], &[1])` is `z1² z̄2`
    /// (or the derivative `∂³/∂z¹∂z¹∂z̄²`).
    pub fn from_indices(holo: &[usize], antiholo: &[usize]) -> Self {
        MultiIndex {
            holo: Exponents::from_indices(holo),
            antiholo: Exponents::from_indices(antiholo),
        }
    }

    pub fn degree(self) -> u32 {
        self.holo.degree() + self.antiholo.degree()
    }

    pub fn with(self, var: Var) -> Self {
        match var {
            Var::Holo(k) => MultiIndex {
                holo: self.holo.incremented(k),
                ..self
            },
            Var::Antiholo(l) => MultiIndex {
                antiholo: self.antiholo.incremented(l),
                ..self
            },
        }
    }

    pub fn exponent(self, var: Var) -> u32 {
        match var {
            Var::Holo(k) => self.holo.get(k),
            Var::Antiholo(l) => self.antiholo.get(l),
        }
    }

    #[inline]
    fn key(self) -> u64 {
        self.holo.raw() as u64 | ((self.antiholo.raw() as u64) << 32)
    }

    #[inline]
    fn from_key(key: u64) -> Self {
        MultiIndex {
            holo: Exponents(key as u32),
            antiholo: Exponents((key >> 32) as u32),
        }
    }

    /// Renders as `z1^a*zbar1^b`, or `1` for the constant monomial.
    pub fn render(self, n: usize) -> String {
        let mut parts = Vec::new();
        write_powers(&mut parts, "z", self.holo, n);
        write_powers(&mut parts, "zbar", self.antiholo, n);
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.holo.lex_key().cmp(&self.holo.lex_key()))
            .then_with(|| other.antiholo.lex_key().cmp(&self.antiholo.lex_key()))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(MAX_DIM))
    }
}

/// A chart coordinate: `z^k` or `z̄^l` (zero-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    Holo(usize),
    Antiholo(usize),
}

impl Var {
    fn index(self) -> usize {
        match self {
            Var::Holo(k) | Var::Antiholo(k) => k,
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Jet {
    n: usize,
    order: u32,
    coeffs: BTreeMap<MultiIndex, GaussRational>,
}

impl Jet {
    pub fn zero(n: usize, order: u32) -> Self {
        check_shape(n, order).expect("invalid jet shape");
        Jet {
            n,
            order,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, order: u32, c: GaussRational) -> Self {
        let mut j = Self::zero(n, order);
        if !c.is_zero() {
            j.coeffs.insert(MultiIndex::ZERO, c);
        }
        j
    }

    pub fn one(n: usize, order: u32) -> Self {
        Self::constant(n, order, GaussRational::one())
    }

    pub fn monomial(n: usize, order: u32, idx: MultiIndex, c: GaussRational) -> Self {
        Self::from_terms(n, order, [(idx, c)])
    }

    /// The coordinate function `z^k` or `z̄^l`.
    pub fn variable(n: usize, order: u32, var: Var) -> Result<Self> {
        if var.index() >= n {
            return Err(Error::IndexOutOfRange {
                index: var.index() + 1,
                n,
            });
        }
        Ok(Self::monomial(
            n,
            order,
            MultiIndex::ZERO.with(var),
            GaussRational::one(),
        ))
    }

    /// Sums the given terms, discarding those above `order` and zeros.
    pub fn from_terms<I>(n: usize, order: u32, terms: I) -> Self
    where
        I: IntoIterator<Item = (MultiIndex, GaussRational)>,
    {
        let mut j = Self::zero(n, order);
        for (idx, c) in terms {
            if idx.degree() > order {
                continue;
            }
            debug_assert!(
                (n..MAX_DIM).all(|i| idx.holo.get(i) == 0 && idx.antiholo.get(i) == 0),
                "monomial uses an index beyond the chart dimension"
            );
            j.coeffs.entry(idx).or_default().add_assign_ref(&c);
        }
        j.prune();
        j
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, c| !c.is_zero());
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total degree up to which the coefficients are exact.
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &GaussRational)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, idx: &MultiIndex) -> GaussRational {
        self.coeffs.get(idx).cloned().unwrap_or_default()
    }

    pub fn constant_term(&self) -> GaussRational {
        self.coeff(&MultiIndex::ZERO)
    }

    /// Highest total degree among the stored terms.
    pub fn degree(&self) -> Option<u32> {
        self.coeffs.keys().next_back().map(|k| k.degree())
    }

    /// Restricts to a lower validity order. Raising the order is refused,
    /// since the missing coefficients are unknown.
    pub fn truncate(&self, order: u32) -> Result<Jet> {
        if order > self.order {
            return Err(exhausted("truncate", order as i64, self.order as i64));
        }
        Ok(self.truncated(order))
    }

    /// Truncates to `min(order, self.order())`.
    pub fn truncated(&self, order: u32) -> Jet {
        if order >= self.order {
            return self.clone();
        }
        Jet {
            n: self.n,
            order,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(k, _)| k.degree() <= order)
                .map(|(k, c)| (*k, c.clone()))
                .collect(),
        }
    }

    /// Re-embeds an exact polynomial at a different order. Only meaningful
    /// when `self` is known to be a polynomial (e.g. parsed input).
    pub fn with_order(&self, order: u32) -> Jet {
        Jet::from_terms(
            self.n,
            order,
            self.coeffs.iter().map(|(k, c)| (*k, c.clone())),
        )
    }

    fn check_dim(&self, other: &Jet) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Jet) -> Result<Jet> {
        self.check_dim(other)?;
        let order = self.order.min(other.order);
        let mut out = self.truncated(order);
        for (k, c) in other.coeffs.iter() {
            if k.degree() <= order {
                out.coeffs.entry(*k).or_default().add_assign_ref(c);
            }
        }
        out.prune();
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Jet) -> Result<Jet> {
        self.checked_add(&-other)
    }

    pub fn scale(&self, c: &GaussRational) -> Jet {
        if c.is_zero() {
            return Jet::zero(self.n, self.order);
        }
        Jet {
            n: self.n,
            order: self.order,
            coeffs: self.coeffs.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    pub fn scale_rational(&self, c: &Rational) -> Jet {
        self.scale(&GaussRational::real(c.clone()))
    }

    /// Cauchy product truncated to the smaller of the two orders.
    pub fn checked_mul(&self, other: &Jet) -> Result<Jet> {
        self.check_dim(other)?;
        let order = self.order.min(other.order);
        if self.is_zero() || other.is_zero() {
            return Ok(Jet::zero(self.n, order));
        }
        if self.coeffs.len() == 1 && self.coeffs.contains_key(&MultiIndex::ZERO) {
            return Ok(other.truncated(order).scale(&self.constant_term()));
        }
        if other.coeffs.len() == 1 && other.coeffs.contains_key(&MultiIndex::ZERO) {
            return Ok(self.truncated(order).scale(&other.constant_term()));
        }
        let flat = |j: &Jet| -> Vec<(u32, u64, GaussRational)> {
            j.coeffs
                .iter()
                .filter(|(k, _)| k.degree() <= order)
                .map(|(k, c)| (k.degree(), k.key(), c.clone()))
                .collect()
        };
        // BTreeMap iteration is degree-ascending, which the early break relies on.
        let (a, b) = (flat(self), flat(other));
        let mut acc: FxHashMap<u64, GaussRational> = FxHashMap::default();
        acc.reserve(a.len().max(b.len()) * 2);
        for (da, ka, ca) in &a {
            let room = order - da;
            for (db, kb, cb) in &b {
                if *db > room {
                    break;
                }
                acc.entry(ka + kb).or_default().add_mul(ca, cb);
            }
        }
        let coeffs = acc
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| (MultiIndex::from_key(k), c))
            .collect();
        Ok(Jet {
            n: self.n,
            order,
            coeffs,
        })
    }

    pub fn pow(&self, e: u32) -> Jet {
        let mut out = Jet::one(self.n, self.order);
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// Formal partial derivative. The result is valid to one order less.
    pub fn partial(&self, var: Var) -> Result<Jet> {
        if self.order == 0 {
            return Err(exhausted("partial derivative", 1, 0));
        }
        if var.index() >= self.n {
            return Err(Error::IndexOutOfRange {
                index: var.index() + 1,
                n: self.n,
            });
        }
        let mut coeffs = BTreeMap::new();
        for (k, c) in &self.coeffs {
            let e = k.exponent(var);
            if e == 0 {
                continue;
            }
            let idx = match var {
                Var::Holo(i) => MultiIndex {
                    holo: k.holo.decremented(i).unwrap(),
                    ..*k
                },
                Var::Antiholo(i) => MultiIndex {
                    antiholo: k.antiholo.decremented(i).unwrap(),
                    ..*k
                },
            };
            coeffs.insert(idx, c * &GaussRational::from_integer(e as i64));
        }
        Ok(Jet {
            n: self.n,
            order: self.order - 1,
            coeffs,
        })
    }

    /// Mixed partial derivative by a multi-index.
    pub fn derivative(&self, idx: &MultiIndex) -> Result<Jet> {
        let mut out = self.clone();
        for k in idx.holo.indices() {
            out = out.partial(Var::Holo(k))?;
        }
        for l in idx.antiholo.indices() {
            out = out.partial(Var::Antiholo(l))?;
        }
        Ok(out)
    }

    /// Multiplicative inverse to the same order.
    pub fn reciprocal(&self) -> Result<Jet> {
        let c0 = self.constant_term();
        if c0.is_zero() {
            return Err(Error::ZeroConstantTerm);
        }
        let inv0 = c0.recip()?;
        // a = c0 (1 + u) with u(0) = 0; 1/(1+u) = 1 - u(1 - u(1 - ...)).
        let mut u = self.scale(&inv0);
        u.coeffs.remove(&MultiIndex::ZERO);
        let one = Jet::one(self.n, self.order);
        let mut r = one.clone();
        for _ in 0..self.order {
            r = &one - &(&u * &r);
        }
        Ok(r.scale(&inv0))
    }

    pub fn map_coeffs(&self, f: impl Fn(&GaussRational) -> GaussRational) -> Jet {
        let mut out = Jet {
            n: self.n,
            order: self.order,
            coeffs: self.coeffs.iter().map(|(k, c)| (*k, f(c))).collect(),
        };
        out.prune();
        out
    }
}

impl GaussRational {
    fn add_assign_ref(&mut self, other: &GaussRational) {
        *self += other;
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + O({})", self, self.order + 1)
    }
}

impl fmt::Display for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(k, c)| format!("{c}*{}", k.render(self.n)))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.checked_add(rhs).expect("jet dimension mismatch")
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.checked_sub(rhs).expect("jet dimension mismatch")
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.checked_mul(rhs).expect("jet dimension mismatch")
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet {
            n: self.n,
            order: self.order,
            coeffs: self.coeffs.iter().map(|(k, c)| (*k, -c)).collect(),
        }
    }
}

/// The built-in test potentials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Builtin {
    /// `Σ z^k z̄^k`
    Flat,
    /// `log(1 + Σ z^k z̄^k)`
    FubiniStudy,
    /// `-log(1 - Σ z^k z̄^k)`
    Hyperbolic,
}

impl Builtin {
    pub const ALL: [Builtin; 3] = [Builtin::Flat, Builtin::FubiniStudy, Builtin::Hyperbolic];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Flat => "flat",
            Builtin::FubiniStudy => "fubini-study",
            Builtin::Hyperbolic => "hyperbolic",
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Builtin {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::UnknownPotential(s.to_string()))
    }
}

/// Expands a built-in potential to the given order.
pub fn builtin_potential(kind: Builtin, n: usize, order: u32) -> Result<Jet> {
    check_shape(n, order)?;
    if order < 2 {
        return Err(exhausted(format!("{kind} potential"), 2, order as i64));
    }
    let s = Jet::from_terms(
        n,
        order,
        (0..n).map(|k| (MultiIndex::from_indices(&[k], &[k]), GaussRational::one())),
    );
    Ok(match kind {
        Builtin::Flat => s,
        Builtin::FubiniStudy | Builtin::Hyperbolic => {
            // log(1 + s) = Σ (-1)^{j+1} s^j / j, -log(1 - s) = Σ s^j / j
            let mut out = Jet::zero(n, order);
            let mut power = Jet::one(n, order);
            for j in 1..=(order / 2) as i64 {
                power = &power * &s;
                let sign = if kind == Builtin::FubiniStudy && j % 2 == 0 {
                    -1
                } else {
                    1
                };
                out = &out + &power.scale(&GaussRational::ratio(sign, j));
            }
            out
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> GaussRational {
        GaussRational::ratio(n, d)
    }

    fn mono(h: &[u32], a: &[u32]) -> MultiIndex {
        MultiIndex::new(Exponents::from_counts(h), Exponents::from_counts(a))
    }

    fn poly(n: usize, order: u32, terms: &[(&[u32], &[u32], i64, i64)]) -> Jet {
        Jet::from_terms(
            n,
            order,
            terms.iter().map(|(h, a, p, d)| (mono(h, a), q(*p, *d))),
        )
    }

    #[test]
    fn difference_of_squares() {
        let a = poly(1, 4, &[(&[0], &[0], 1, 1), (&[1], &[1], 1, 1)]);
        let b = poly(1, 4, &[(&[0], &[0], 1, 1), (&[1], &[1], -1, 1)]);
        let expected = poly(1, 4, &[(&[0], &[0], 1, 1), (&[2], &[2], -1, 1)]);
        assert_eq!(&a * &b, expected);
        assert_eq!(&a * &Jet::zero(1, 4), Jet::zero(1, 4));
    }

    #[test]
    fn product_takes_minimum_order() {
        let a = poly(1, 6, &[(&[1], &[0], 1, 1)]);
        let b = poly(1, 3, &[(&[2], &[0], 1, 1)]);
        let p = &a * &b;
        assert_eq!(p.order(), 3);
        assert_eq!(p, poly(1, 3, &[(&[3], &[0], 1, 1)]));
        assert!(a.checked_mul(&Jet::zero(2, 3)).is_err());
    }

    #[test]
    fn reciprocal_of_geometric_series() {
        let a = poly(1, 4, &[(&[0], &[0], 1, 1), (&[1], &[1], 1, 1)]);
        let expected = poly(
            1,
            4,
            &[(&[0], &[0], 1, 1), (&[1], &[1], -1, 1), (&[2], &[2], 1, 1)],
        );
        assert_eq!(a.reciprocal().unwrap(), expected);
        assert_eq!(Jet::one(1, 4).reciprocal().unwrap(), Jet::one(1, 4));
        assert_eq!(
            Jet::zero(1, 3).reciprocal().unwrap_err(),
            Error::ZeroConstantTerm
        );
    }

    #[test]
    fn reciprocal_with_linear_terms() {
        // 1/(2 + z + z̄), frozen from an independent series expansion.
        let a = poly(
            1,
            2,
            &[(&[0], &[0], 2, 1), (&[1], &[0], 1, 1), (&[0], &[1], 1, 1)],
        );
        let expected = poly(
            1,
            2,
            &[
                (&[0], &[0], 1, 2),
                (&[1], &[0], -1, 4),
                (&[0], &[1], -1, 4),
                (&[2], &[0], 1, 8),
                (&[1], &[1], 1, 4),
                (&[0], &[2], 1, 8),
            ],
        );
        let r = a.reciprocal().unwrap();
        assert_eq!(r, expected);
        assert_eq!(&a * &r, Jet::one(1, 2));
    }

    #[test]
    fn reciprocal_of_series_multiplies_back() {
        let a = poly(1, 6, &[(&[0], &[0], 1, 1), (&[1], &[1], 1, 1)]);
        let r = a.reciprocal().unwrap();
        assert_eq!(&r * &a, Jet::one(1, 6));
    }

    #[test]
    fn partial_derivatives() {
        let a = poly(1, 5, &[(&[2], &[1], 1, 1)]);
        assert_eq!(
            a.partial(Var::Holo(0)).unwrap(),
            poly(1, 4, &[(&[1], &[1], 2, 1)])
        );
        assert_eq!(
            a.partial(Var::Antiholo(0)).unwrap(),
            poly(1, 4, &[(&[2], &[0], 1, 1)])
        );
        assert!(Jet::one(1, 0).partial(Var::Holo(0)).is_err());
        assert!(a.partial(Var::Holo(1)).is_err());
    }

    #[test]
    fn mixed_second_derivative_of_log_series() {
        // ∂z∂z̄ log(1+zz̄) = 1 - 2zz̄ + 3z²z̄² + O(6)
        let phi = builtin_potential(Builtin::FubiniStudy, 1, 6).unwrap();
        let g = phi
            .partial(Var::Holo(0))
            .unwrap()
            .partial(Var::Antiholo(0))
            .unwrap();
        assert_eq!(g.order(), 4);
        let expected = poly(
            1,
            4,
            &[(&[0], &[0], 1, 1), (&[1], &[1], -2, 1), (&[2], &[2], 3, 1)],
        );
        assert_eq!(g, expected);
    }

    #[test]
    fn builtin_potentials() {
        assert_eq!(
            builtin_potential(Builtin::FubiniStudy, 1, 6).unwrap(),
            poly(
                1,
                6,
                &[(&[1], &[1], 1, 1), (&[2], &[2], -1, 2), (&[3], &[3], 1, 3)]
            )
        );
        assert_eq!(
            builtin_potential(Builtin::Flat, 2, 4).unwrap(),
            poly(2, 4, &[(&[1, 0], &[1, 0], 1, 1), (&[0, 1], &[0, 1], 1, 1)])
        );
        assert_eq!(
            builtin_potential(Builtin::Hyperbolic, 1, 4).unwrap(),
            poly(1, 4, &[(&[1], &[1], 1, 1), (&[2], &[2], 1, 2)])
        );
        assert!("kahler".parse::<Builtin>().is_err());
        assert!(builtin_potential(Builtin::Flat, 1, 1).is_err());
        assert!(builtin_potential(Builtin::Flat, 5, 4).is_err());
    }

    #[test]
    fn graded_order_and_rendering() {
        let j = poly(
            2,
            3,
            &[
                (&[0, 1], &[0, 0], 1, 1),
                (&[1, 0], &[0, 0], 1, 1),
                (&[0, 0], &[0, 0], 1, 1),
                (&[0, 0], &[1, 0], 1, 1),
            ],
        );
        let keys: Vec<String> = j.terms().map(|(k, _)| k.render(2)).collect();
        assert_eq!(keys, ["1", "z1", "z2", "zbar1"]);
        assert_eq!(mono(&[2, 0], &[0, 1]).render(2), "z1^2*zbar2");
    }

    #[test]
    fn multiset_helpers() {
        let e = Exponents::from_indices(&[0, 0, 1]);
        assert_eq!(e.degree(), 3);
        assert_eq!(e.sub_multisets().len(), 6);
        assert_eq!(e.orderings(), Rational::from_integer(3));
        assert_eq!(Exponents::all_of_degree(2, 3).len(), 4);
        assert_eq!(e.minus(Exponents::unit(1)), Some(Exponents::from_indices(&[0, 0])));
        assert_eq!(e.minus(Exponents::unit(2)), None);
    }

    fn arb_jet(n: usize, order: u32) -> impl Strategy<Value = Jet> {
        let vars = 2 * n;
        prop::collection::vec(
            (prop::collection::vec(0u32..3, vars), -3i64..4, 1i64..4, -2i64..3),
            0..8,
        )
        .prop_map(move |terms| {
            Jet::from_terms(
                n,
                order,
                terms.into_iter().map(|(e, p, d, im)| {
                    (
                        MultiIndex::new(
                            Exponents::from_counts(&e[..n]),
                            Exponents::from_counts(&e[n..]),
                        ),
                        GaussRational::new(
                            Rational::new(p, d).unwrap(),
                            Rational::from_integer(im),
                        ),
                    )
                }),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn ring_axioms(a in arb_jet(2, 5), b in arb_jet(2, 5), c in arb_jet(2, 5)) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        }

        #[test]
        fn mixed_partials_commute(a in arb_jet(2, 5)) {
            let zz = a.partial(Var::Holo(1)).unwrap().partial(Var::Antiholo(0)).unwrap();
            let zz2 = a.partial(Var::Antiholo(0)).unwrap().partial(Var::Holo(1)).unwrap();
            prop_assert_eq!(zz, zz2);
        }

        #[test]
        fn leibniz_rule(a in arb_jet(1, 5), b in arb_jet(1, 5)) {
            for var in [Var::Holo(0), Var::Antiholo(0)] {
                let lhs = (&a * &b).partial(var).unwrap();
                let rhs = &(&a.partial(var).unwrap() * &b) + &(&a * &b.partial(var).unwrap());
                prop_assert_eq!(lhs, rhs);
            }
        }

        #[test]
        fn reciprocal_inverts(a in arb_jet(2, 4), c in 1i64..5) {
            let a = &a + &Jet::constant(2, 4, GaussRational::from_integer(c) );
            prop_assume!(!a.constant_term().is_zero());
            let r = a.reciprocal().unwrap();
            prop_assert_eq!(&a * &r, Jet::one(2, 4));
        }
    }
}
