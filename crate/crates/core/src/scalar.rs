//! Scalar abstractions shared by the matrix and transform code.
//!
//! Everything that only needs field arithmetic is written against [`Scalar`],
//! which covers `f32`, `f64` and arbitrary-precision rationals. Code that
//! needs trigonometry or square roots uses [`Real`].

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FloatConst, FromPrimitive, Num, ToPrimitive, Zero};

/// A field element usable in dense linear algebra.
pub trait Scalar: Clone + Debug + PartialEq + Num + Neg<Output = Self> + Send + Sync {
    /// Pivots whose magnitude does not exceed this are treated as zero.
    fn pivot_tolerance() -> f64;

    /// Magnitude used for pivot selection.
    fn magnitude(&self) -> f64;

    fn to_f64(&self) -> f64;

    /// Converts an exact rational into this scalar type (rounding when inexact).
    fn from_rational(r: &BigRational) -> Self;

    fn from_i64(v: i64) -> Self;

    /// `true` when the type represents every value exactly.
    fn is_exact() -> bool {
        false
    }
}

/// A floating-point scalar.
pub trait Real: Scalar + num_traits::Float + FloatConst + FromPrimitive {}

impl Real for f32 {}
impl Real for f64 {}

impl Scalar for f64 {
    fn pivot_tolerance() -> f64 {
        1e-12
    }

    fn magnitude(&self) -> f64 {
        self.abs()
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_rational(r: &BigRational) -> Self {
        rational_to_f64(r)
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }
}

impl Scalar for f32 {
    fn pivot_tolerance() -> f64 {
        1e-6
    }

    fn magnitude(&self) -> f64 {
        self.abs() as f64
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }

    fn from_rational(r: &BigRational) -> Self {
        rational_to_f64(r) as f32
    }

    fn from_i64(v: i64) -> Self {
        v as f32
    }
}

impl Scalar for BigRational {
    fn pivot_tolerance() -> f64 {
        0.0
    }

    fn magnitude(&self) -> f64 {
        rational_to_f64(self).abs()
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn is_exact() -> bool {
        true
    }
}

/// `num/den` as a lowest-terms rational.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    ToPrimitive::to_f64(r).unwrap_or_else(|| {
        let num = ToPrimitive::to_f64(r.numer()).unwrap_or(f64::NAN);
        let den = ToPrimitive::to_f64(r.denom()).unwrap_or(f64::NAN);
        num / den
    })
}

/// Converts an `f64` constant into `T`.
pub(crate) fn real<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("finite f64 converts to any Real")
}
