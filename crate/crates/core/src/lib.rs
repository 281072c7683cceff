//! Arithmetic cosine transform (ACT) for the 8-point DCT-II computed from
//! non-uniformly sampled inputs, plus bit-accurate simulators of two
//! fixed-point hardware architectures and an error/complexity harness.
//!
//! The numerical core is generic over the scalar type: `f32`, `f64`, or exact
//! [`num_rational::BigRational`] where the arithmetic allows it. The aliases
//! below fix the common `f64` instantiations.

pub mod act;
pub mod arch;
pub mod cli;
pub mod linalg;
pub mod metrics;
pub mod numtheory;
pub mod sampling;
pub mod scalar;

pub use act::{ActError, ActPlan, FactorizationBundle};
pub use linalg::{DenseMatrix, LinalgError};
pub use sampling::SamplingGrid;
pub use scalar::{Real, Scalar};

/// Double-precision dense matrix.
pub type Matrix = DenseMatrix<f64>;
/// Exact rational dense matrix.
pub type RationalMatrix = DenseMatrix<num_rational::BigRational>;
/// Double-precision transform coefficients.
pub type Spectrum = act::SpectralCoefficients<f64>;
/// Double-precision non-uniform samples.
pub type Samples = sampling::NonUniformSamples<f64>;
/// Double-precision uniform signal.
pub type Signal = sampling::UniformSignal<f64>;
/// Factorization with a double-precision `T`.
pub type Factorization = act::FactorizationBundle<f64>;
