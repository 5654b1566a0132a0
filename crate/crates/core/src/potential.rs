//! Sources of Kähler potentials that can be expanded to any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::jet::{builtin_potential, check_shape, Builtin, Exponents, Jet, MultiIndex};
use crate::scalar::GaussRational;

/// Something that produces the potential jet at a requested order.
///
/// Re-expansion is what lets a computation be repeated with a longer
/// potential expansion and compared.
pub trait PotentialSource: Send + Sync {
    fn label(&self) -> String;
    fn dimension(&self) -> usize;
    fn expand(&self, order: u32) -> Result<Jet>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuiltinPotential {
    pub kind: Builtin,
    pub n: usize,
}

impl BuiltinPotential {
    pub fn new(kind: Builtin, n: usize) -> Self {
        BuiltinPotential { kind, n }
    }
}

impl PotentialSource for BuiltinPotential {
    fn label(&self) -> String {
        format!("{} (n={})", self.kind, self.n)
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn expand(&self, order: u32) -> Result<Jet> {
        builtin_potential(self.kind, self.n, order)
    }
}

/// An exact polynomial potential.
#[derive(Clone, Debug)]
pub struct PolynomialPotential {
    label: String,
    poly: Jet,
}

impl PolynomialPotential {
    /// `poly` must be exact, i.e. its order must be at least its degree.
    pub fn new(label: impl Into<String>, poly: Jet) -> Self {
        PolynomialPotential {
            label: label.into(),
            poly,
        }
    }

    pub fn polynomial(&self) -> &Jet {
        &self.poly
    }

    /// `Σ z^k z̄^k` plus a real mixed polynomial of degree 2..=4 with
    /// coefficients in `{-1, 0, 1}/4`, containing at least one mixed
    /// monomial of every degree.
    pub fn random_perturbed_flat(n: usize, seed: u64) -> Result<Self> {
        check_shape(n, 4)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6b73_7461_7270_6f74);
        let quarter = |c: i64| GaussRational::ratio(c, 4);
        let mut terms: Vec<(MultiIndex, GaussRational)> = (0..n)
            .map(|k| (MultiIndex::from_indices(&[k], &[k]), GaussRational::one()))
            .collect();
        for degree in 2..=4u32 {
            // Canonical representatives of conjugate pairs z^a z̄^b ~ z^b z̄^a.
            let mut reps = Vec::new();
            for hd in 1..degree {
                for a in Exponents::all_of_degree(n, hd) {
                    for b in Exponents::all_of_degree(n, degree - hd) {
                        if (a.degree(), a) <= (b.degree(), b) {
                            reps.push((a, b));
                        }
                    }
                }
            }
            let mut coeffs: Vec<i64> = reps.iter().map(|_| rng.gen_range(-1..=1)).collect();
            if coeffs.iter().all(|&c| c == 0) {
                let i = rng.gen_range(0..reps.len());
                coeffs[i] = if rng.gen_bool(0.5) { 1 } else { -1 };
            }
            for ((a, b), c) in reps.into_iter().zip(coeffs) {
                if c == 0 {
                    continue;
                }
                terms.push((MultiIndex::new(a, b), quarter(c)));
                if a != b {
                    terms.push((MultiIndex::new(b, a), quarter(c)));
                }
            }
        }
        Ok(PolynomialPotential::new(
            format!("random-perturbed-flat (n={n}, seed={seed})"),
            Jet::from_terms(n, 4, terms),
        ))
    }
}

impl PotentialSource for PolynomialPotential {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn dimension(&self) -> usize {
        self.poly.n()
    }

    fn expand(&self, order: u32) -> Result<Jet> {
        check_shape(self.poly.n(), order)?;
        Ok(self.poly.with_order(order))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_potential_is_real_and_mixed_in_every_degree() {
        for seed in 0..20 {
            for n in 1..=2 {
                let p = PolynomialPotential::random_perturbed_flat(n, seed).unwrap();
                let poly = p.polynomial();
                for (idx, c) in poly.terms() {
                    assert!(c.is_real());
                    assert!(!idx.holo.is_empty() && !idx.antiholo.is_empty());
                    let conj = MultiIndex::new(idx.antiholo, idx.holo);
                    assert_eq!(&poly.coeff(&conj), c);
                }
                let flat = builtin_potential(Builtin::Flat, n, 4).unwrap();
                let perturbation = poly - &flat;
                for d in 2..=4 {
                    assert!(
                        perturbation.terms().any(|(i, _)| i.degree() == d),
                        "seed {seed} n {n} lacks a degree-{d} term"
                    );
                }
                assert_eq!(
                    p.expand(9).unwrap().terms().count(),
                    poly.terms().count()
                );
            }
        }
    }

    #[test]
    fn random_potential_is_deterministic() {
        let a = PolynomialPotential::random_perturbed_flat(2, 7).unwrap();
        let b = PolynomialPotential::random_perturbed_flat(2, 7).unwrap();
        assert_eq!(a.polynomial(), b.polynomial());
    }
}
