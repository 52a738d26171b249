//! Exact machinery for linear operators on polynomial rings that preserve
//! nonnegativity on a set `S ⊆ ℝⁿ`.
//!
//! The polynomial layer is generic over the coefficient scalar (any
//! [`Scalar`], e.g. `f64` or [`Rational`]); everything that has to *decide*
//! something (nonnegativity certificates, PSD verdicts, error bounds) runs on
//! exact rationals through the [`QPoly`] alias.

pub mod adjoint;
pub mod approx;
pub mod error;
pub mod measure;
pub mod momentcheck;
pub mod operator;
pub mod poly;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{rat, Rational, Scalar};

pub use adjoint::{AdjointMap, StepFunction};
pub use approx::{ConvergenceTable, Partition, SimpleApproximant};
pub use measure::{MeasureExpr, MomentSequence};
pub use momentcheck::{MomentVerdict, SymMatrix};
pub use operator::{DiffOpRep, OperatorExpr, PreserverVerdict};
pub use poly::{Budget, DomainSet, MultiIndex, NonnegVerdict, Polynomial, SetBox};

/// Exact multivariate polynomial over ℚ.
pub type QPoly = Polynomial<Rational>;
/// Double-precision polynomial, for fast approximate evaluation only.
pub type FPoly = Polynomial<f64>;
/// Single-precision polynomial.
pub type F32Poly = Polynomial<f32>;
/// Symmetric matrix with exact rational entries.
pub type QMatrix = SymMatrix<Rational>;
