//! Continuous first-order logic over metric structures.

pub mod herbrand;
pub mod logic;
pub mod models;
pub mod normalizer;
pub mod scalar;
pub mod ubiq;

pub use logic::*;
pub use scalar::{Complex64, QComplex, Rational, Scalar};

/// Interval with exact rational endpoints.
pub type ExactInterval = logic::Interval<Rational>;
pub type Interval64 = logic::Interval<f64>;

pub use normalizer::{AffineNormalForm, ExactNormalForm, NormalForm64};
