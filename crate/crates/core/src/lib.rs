//! Exact spectral invariants of finitely presented self-adjoint operators.

pub mod approx;
pub mod galois;
pub mod independence;
pub mod measure;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod spectra;
pub mod subspace;

pub use scalar::{Cx, Scalar};

/// Exact rationals, the default scalar field.
pub type Rational = num_rational::BigRational;
