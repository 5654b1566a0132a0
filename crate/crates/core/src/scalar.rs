//! Exact scalars: rationals with an inline machine-word fast path, and
//! Gaussian rationals built on top of them.
//!
//! `Rational` keeps small values as a reduced `i64` pair and promotes to
//! `BigRational` only when an operation overflows. Every value is kept in
//! canonical form (reduced, positive denominator, demoted whenever it fits),
//! so structural equality is numeric equality.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Repr {
    /// Reduced fraction with positive denominator.
    Small(i64, i64),
    /// Only used when numerator or denominator does not fit in an `i64`.
    Big(BigRational),
}

/// An exact rational number.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rational(Repr);

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

impl Rational {
    pub fn zero() -> Self {
        Rational(Repr::Small(0, 1))
    }

    pub fn one() -> Self {
        Rational(Repr::Small(1, 1))
    }

    pub fn from_integer(n: i64) -> Self {
        Rational(Repr::Small(n, 1))
    }

    /// `num / den`, reduced. Fails on a zero denominator.
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::from_i128(num as i128, den as i128))
    }

    fn from_i128(num: i128, den: i128) -> Self {
        debug_assert!(den != 0);
        let (mut num, mut den) = if den < 0 { (-num, -den) } else { (num, den) };
        let g = gcd_u128(num.unsigned_abs(), den as u128);
        if g > 1 {
            num /= g as i128;
            den /= g as i128;
        }
        match (i64::try_from(num), i64::try_from(den)) {
            (Ok(n), Ok(d)) => Rational(Repr::Small(n, d)),
            _ => Rational(Repr::Big(BigRational::new_raw(num.into(), den.into()))),
        }
    }

    fn from_big(r: BigRational) -> Self {
        // BigRational arithmetic keeps values reduced already.
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) => Rational(Repr::Small(n, d)),
            _ => Rational(Repr::Big(r)),
        }
    }

    pub fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Repr::Big(r) => r.clone(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, _) => BigInt::from(*n),
            Repr::Big(r) => r.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small(_, d) => BigInt::from(*d),
            Repr::Big(r) => r.denom().clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0, _))
    }

    pub fn is_one(&self) -> bool {
        matches!(self.0, Repr::Small(1, 1))
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(_, d) => *d == 1,
            Repr::Big(r) => r.is_integer(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n < 0,
            Repr::Big(r) => r.is_negative(),
        }
    }

    pub fn recip(&self) -> Result<Self> {
        match &self.0 {
            Repr::Small(0, _) => Err(Error::DivisionByZero),
            Repr::Small(n, d) => Ok(Self::from_i128(*d as i128, *n as i128)),
            Repr::Big(r) => Ok(Self::from_big(r.recip())),
        }
    }

    fn add_ref(&self, other: &Self) -> Self {
        if let (Repr::Small(a, b), Repr::Small(c, d)) = (&self.0, &other.0) {
            if *a == 0 {
                return other.clone();
            }
            if *c == 0 {
                return self.clone();
            }
            if b == d {
                if let Some(n) = a.checked_add(*c) {
                    if *b == 1 || n == 0 {
                        return Rational(Repr::Small(n, if n == 0 { 1 } else { *b }));
                    }
                    let g = gcd_u64(n.unsigned_abs(), *b as u64) as i64;
                    return Rational(Repr::Small(n / g, b / g));
                }
            }
            // With g = gcd(b, d), only a factor of g can cancel.
            let g = gcd_u64(*b as u64, *d as u64) as i128;
            let (bg, dg) = (*b as i128 / g, *d as i128 / g);
            let t = (*a as i128) * dg + (*c as i128) * bg;
            if t == 0 {
                return Self::zero();
            }
            let g2 = if g == 1 {
                1
            } else {
                gcd_u64((t.unsigned_abs() % g as u128) as u64, g as u64) as i128
            };
            let num = t / g2;
            let den = bg * (*d as i128 / g2);
            if let (Ok(n), Ok(m)) = (i64::try_from(num), i64::try_from(den)) {
                return Rational(Repr::Small(n, m));
            }
            return Rational(Repr::Big(BigRational::new_raw(num.into(), den.into())));
        }
        Self::from_big(self.to_big() + other.to_big())
    }

    fn mul_ref(&self, other: &Self) -> Self {
        if let (Repr::Small(a, b), Repr::Small(c, d)) = (&self.0, &other.0) {
            if *a == 0 || *c == 0 {
                return Self::zero();
            }
            let g1 = if *d == 1 { 1 } else { gcd_u64(a.unsigned_abs(), *d as u64) as i64 };
            let g2 = if *b == 1 { 1 } else { gcd_u64(c.unsigned_abs(), *b as u64) as i64 };
            let (a, d) = (a / g1, d / g1);
            let (c, b) = (c / g2, b / g2);
            if let (Some(n), Some(m)) = (a.checked_mul(c), b.checked_mul(d)) {
                return Rational(Repr::Small(n, m));
            }
            let (num, den) = ((a as i128) * (c as i128), (b as i128) * (d as i128));
            if let (Ok(n), Ok(m)) = (i64::try_from(num), i64::try_from(den)) {
                return Rational(Repr::Small(n, m));
            }
            return Rational(Repr::Big(BigRational::new_raw(num.into(), den.into())));
        }
        Self::from_big(self.to_big() * other.to_big())
    }

    fn neg_ref(&self) -> Self {
        match &self.0 {
            Repr::Small(n, d) => match n.checked_neg() {
                Some(m) => Rational(Repr::Small(m, *d)),
                None => Self::from_big(-self.to_big()),
            },
            Repr::Big(r) => Self::from_big(-r.clone()),
        }
    }
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    if let (Ok(x), Ok(y)) = (u64::try_from(a), u64::try_from(b)) {
        return gcd_u64(x, y) as u128;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

impl Default for Rational {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Self::from_integer(n)
    }
}

impl From<BigRational> for Rational {
    fn from(r: BigRational) -> Self {
        Self::from_big(r)
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                ((*a as i128) * (*d as i128)).cmp(&((*c as i128) * (*b as i128)))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(n, 1) => write!(f, "{n}"),
            Repr::Small(n, d) => write!(f, "{n}/{d}"),
            Repr::Big(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Repr::Big(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `p` or `p/q` with optional leading sign on `p`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse {
            position: 0,
            message: format!("invalid rational literal {s:?}"),
        };
        let (num, den) = match s.split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None => (s, "1"),
        };
        let num: BigInt = num.parse().map_err(|_| bad())?;
        let den: BigInt = den.parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::from_big(BigRational::new(num, den)))
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl $tr<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                #[allow(clippy::redundant_closure_call)]
                ($body)(self, rhs)
            }
        }
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                #[allow(clippy::redundant_closure_call)]
                ($body)(&self, &rhs)
            }
        }
        impl $tr<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                #[allow(clippy::redundant_closure_call)]
                ($body)(&self, rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a: &Rational, b: &Rational| a.add_ref(b));
forward_binop!(Sub, sub, |a: &Rational, b: &Rational| a.add_ref(&b.neg_ref()));
forward_binop!(Mul, mul, |a: &Rational, b: &Rational| a.mul_ref(b));
forward_binop!(Div, div, |a: &Rational, b: &Rational| a.mul_ref(
    &b.recip().expect("division by zero rational")
));

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        self.neg_ref()
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        self.neg_ref()
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        *self = self.add_ref(rhs);
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        *self = self.add_ref(&rhs.neg_ref());
    }
}

/// A complex number with exact rational real and imaginary parts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct GaussRational {
    pub re: Rational,
    pub im: Rational,
}

impl GaussRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        GaussRational { re, im }
    }

    pub fn real(re: Rational) -> Self {
        GaussRational {
            re,
            im: Rational::zero(),
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::real(Rational::one())
    }

    pub fn i() -> Self {
        GaussRational {
            re: Rational::zero(),
            im: Rational::one(),
        }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::real(Rational::from_integer(n))
    }

    /// `num / den` as a real value.
    pub fn ratio(num: i64, den: i64) -> Self {
        Self::real(Rational::new(num, den).expect("nonzero denominator"))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussRational {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    pub fn recip(&self) -> Result<Self> {
        if self.im.is_zero() {
            return Ok(Self::real(self.re.recip()?));
        }
        let norm = &(&self.re * &self.re) + &(&self.im * &self.im);
        let inv = norm.recip()?;
        Ok(GaussRational {
            re: &self.re * &inv,
            im: -(&self.im * &inv),
        })
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        Ok(self * &rhs.recip()?)
    }

    /// `self += a * b` without building the intermediate product twice.
    pub fn add_mul(&mut self, a: &GaussRational, b: &GaussRational) {
        if a.im.is_zero() && b.im.is_zero() {
            self.re += &(&a.re * &b.re);
            return;
        }
        let p = a * b;
        self.re += &p.re;
        self.im += &p.im;
    }
}

impl From<Rational> for GaussRational {
    fn from(r: Rational) -> Self {
        Self::real(r)
    }
}

impl From<i64> for GaussRational {
    fn from(n: i64) -> Self {
        Self::from_integer(n)
    }
}

impl fmt::Display for GaussRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}*i", self.im)
        } else {
            write!(f, "({} + {}*i)", self.re, self.im)
        }
    }
}

impl Add<&GaussRational> for &GaussRational {
    type Output = GaussRational;
    fn add(self, rhs: &GaussRational) -> GaussRational {
        GaussRational {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl Sub<&GaussRational> for &GaussRational {
    type Output = GaussRational;
    fn sub(self, rhs: &GaussRational) -> GaussRational {
        GaussRational {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
}

impl Mul<&GaussRational> for &GaussRational {
    type Output = GaussRational;
    fn mul(self, rhs: &GaussRational) -> GaussRational {
        if self.im.is_zero() && rhs.im.is_zero() {
            return GaussRational::real(&self.re * &rhs.re);
        }
        GaussRational {
            re: &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            im: &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        }
    }
}

impl Neg for &GaussRational {
    type Output = GaussRational;
    fn neg(self) -> GaussRational {
        GaussRational {
            re: -&self.re,
            im: -&self.im,
        }
    }
}

impl Neg for GaussRational {
    type Output = GaussRational;
    fn neg(self) -> GaussRational {
        -&self
    }
}

impl AddAssign<&GaussRational> for GaussRational {
    fn add_assign(&mut self, rhs: &GaussRational) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl SubAssign<&GaussRational> for GaussRational {
    fn sub_assign(&mut self, rhs: &GaussRational) {
        self.re -= &rhs.re;
        self.im -= &rhs.im;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    #[test]
    fn reduces_and_normalizes_sign() {
        assert_eq!(q(2, -4), q(-1, 2));
        assert_eq!(q(6, 3).to_string(), "2");
        assert_eq!(q(-3, 9).to_string(), "-1/3");
    }

    #[test]
    fn overflow_promotes_and_demotes() {
        let big = Rational::from_integer(i64::MAX);
        let sum = &big + &big;
        assert_eq!(sum.numer(), BigInt::from(i64::MAX) * 2);
        let back = &sum - &big;
        assert_eq!(back, big);
        assert!(matches!(back.0, Repr::Small(..)));
        let tiny = q(1, i64::MAX);
        let sq = &tiny * &tiny;
        assert_eq!(&sq * &(&big * &big), Rational::one());
    }

    #[test]
    fn zero_denominator_is_an_error() {
        assert!(Rational::new(1, 0).is_err());
        assert!(Rational::zero().recip().is_err());
        assert!("3/0".parse::<Rational>().is_err());
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("3/4".parse::<Rational>().unwrap(), q(3, 4));
        assert_eq!("-12/8".parse::<Rational>().unwrap().to_string(), "-3/2");
        assert!("x".parse::<Rational>().is_err());
    }

    #[test]
    fn gaussian_reciprocal() {
        let z = GaussRational::new(q(1, 1), q(2, 1));
        let r = z.recip().unwrap();
        assert_eq!(&z * &r, GaussRational::one());
        assert_eq!(r, GaussRational::new(q(1, 5), q(-2, 5)));
        assert!(GaussRational::zero().recip().is_err());
    }

    fn arb_q() -> impl Strategy<Value = Rational> {
        (any::<i32>(), 1i64..1_000_000).prop_map(|(n, d)| q(n as i64 * 1_000_003, d))
    }

    proptest! {
        #[test]
        fn field_axioms(a in arb_q(), b in arb_q(), c in arb_q()) {
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&(&a - &b) + &b, a.clone());
            if !b.is_zero() {
                prop_assert_eq!(&(&a / &b) * &b, a.clone());
            }
            prop_assert_eq!(a.to_big() * b.to_big(), (&a * &b).to_big());
        }
    }
}
