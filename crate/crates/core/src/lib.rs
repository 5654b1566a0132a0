pub mod calculus;
pub mod error;
pub mod geometry;
pub mod jet;
pub mod potential;
pub mod scalar;
pub mod star;
pub mod symbol;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{CanonicalSymbol, Corruption, GeometryCache, Orientation, RhoPath};
pub use jet::{builtin_potential, Builtin, Exponents, Jet, MultiIndex, Var};
pub use potential::{BuiltinPotential, PolynomialPotential, PotentialSource};
pub use scalar::{GaussRational, Rational};
pub use symbol::{FiberIndex, FiberVar, NuSeries, Symbol};
