//! Exact, spectral and Monte-Carlo computations for the affine random process
//! `X_{n+1} = a·X_n + b_n` on ℤ and its reductions modulo q.
//!
//! Physical-side machinery ([`measures`], [`walk`]) is generic over the
//! [`Mass`] scalar: `f64` for speed, [`BigRational`](num_rational::BigRational)
//! for exact oracle values. The concrete aliases below are what most callers want.

pub mod arith;
pub mod entropy;
pub mod error;
pub mod hhms;
pub mod measures;
pub mod mixing;
pub mod scalar;
pub mod spectral;
pub mod walk;

pub use error::{Error, Result};
pub use measures::{CyclicDistribution, LatticeMeasure, StepLaw};
pub use scalar::Mass;
pub use walk::WalkParams;

/// Double-precision measure on ℤ.
pub type Measure = LatticeMeasure<f64>;
/// Exact rational measure on ℤ.
pub type ExactMeasure = LatticeMeasure<num_rational::BigRational>;
/// Double-precision distribution on ℤ/qℤ.
pub type Distribution = CyclicDistribution<f64>;
/// Exact rational distribution on ℤ/qℤ.
pub type ExactDistribution = CyclicDistribution<num_rational::BigRational>;
