//! The arithmetic cosine transform in floating-point and exact form.
//!
//! Coefficients use the orthonormal DCT-II scale, so `V_0 = √n · mean(v)`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::linalg::{pseudo_inverse, DenseMatrix, LinalgError};
use crate::numtheory::{big_m, mu};
use crate::sampling::{
    build_w, dot_mean, mean_weights, Interpolator, NonUniformSamples, SamplingError, SamplingGrid,
    UniformSignal,
};
use crate::scalar::{ratio, real, Real, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActError {
    #[error("the factorized operator is only defined for n = 8, got n = {0}")]
    UnsupportedLength(usize),
    #[error("constructed {name} disagrees with the reference matrix")]
    SelfCheck { name: &'static str },
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Transform outputs `V_0..V_{n−1}`.
///
/// Routines that cannot produce `V_0` (the null-mean transform and `T · v_r`)
/// leave it at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoefficients<T> {
    values: Vec<T>,
}

impl<T: Scalar> SpectralCoefficients<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    /// `V_1..V_{n−1}`.
    pub fn ac(&self) -> &[T] {
        &self.values[1..]
    }
}

/// ACT averages `S_1..S_{n−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActAverages<T> {
    values: Vec<T>,
}

impl<T: Scalar> ActAverages<T> {
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `S_k` for `k ≥ 1`.
    pub fn get(&self, k: usize) -> &T {
        &self.values[k - 1]
    }
}

/// `S_k = (1/k) Σ_m v(2mn/k − 1/2)`, each instant read at its folded grid point.
///
/// # Panics
///
/// If the grid carries no averaging taps (see [`SamplingGrid::from_points`]).
pub fn act_averages<T: Scalar>(samples: &NonUniformSamples<T>) -> ActAverages<T> {
    let grid = samples.grid();
    assert!(
        grid.has_taps(),
        "ACT averages need a grid from SamplingGrid::build"
    );
    let v = samples.values();
    let values = (1..grid.n())
        .map(|k| {
            let sum = grid
                .taps(k)
                .iter()
                .fold(T::zero(), |acc, &j| acc + v[j].clone());
            sum / T::from_i64(k as i64)
        })
        .collect();
    ActAverages { values }
}

/// `Σ_{l=1}^{⌊(n−1)/k⌋} μ(l) S_{kl}` for `k = 1..n−1`, before the `√(n/2)` factor.
pub fn mobius_sums<T: Scalar>(averages: &ActAverages<T>) -> Vec<T> {
    let last = averages.values.len();
    (1..=last)
        .map(|k| {
            (1..=last / k).fold(T::zero(), |acc, l| match mu(l) {
                1 => acc + averages.get(k * l).clone(),
                -1 => acc - averages.get(k * l).clone(),
                _ => acc,
            })
        })
        .collect()
}

/// Null-mean transform: `V_k = √(n/2) Σ μ(l) S_{kl}`, with `V_0 = 0`.
///
/// Exact only when the generating signal has zero mean; the caller vouches
/// for that.
pub fn act_null_mean<T: Real>(samples: &NonUniformSamples<T>) -> SpectralCoefficients<T> {
    let n = samples.grid().n();
    let gain = real::<T>((n as f64 / 2.0).sqrt());
    let mut values = vec![T::zero()];
    values.extend(
        mobius_sums(&act_averages(samples))
            .into_iter()
            .map(|s| gain * s),
    );
    SpectralCoefficients::new(values)
}

/// Null-mean transform over exact rationals.
///
/// Returns `None` when `√(n/2)` is irrational (`n/2` not a perfect square).
pub fn act_null_mean_exact(
    samples: &NonUniformSamples<BigRational>,
) -> Option<SpectralCoefficients<BigRational>> {
    let half = samples.grid().n() / 2;
    let root = (0..=half).find(|r| r * r == half)?;
    let gain = ratio(root as i64, 1);
    let mut values = vec![BigRational::zero()];
    values.extend(
        mobius_sums(&act_averages(samples))
            .into_iter()
            .map(|s| &gain * s),
    );
    Some(SpectralCoefficients::new(values))
}

/// Mertens-corrected transform for arbitrary-mean signals, with the mean
/// recovered from the samples themselves.
pub fn act_mertens<T: Real>(
    samples: &NonUniformSamples<T>,
) -> Result<SpectralCoefficients<T>, ActError> {
    let weights = mean_weights::<T>(samples.grid())?;
    let mean = dot_mean(&weights, samples.values())?;
    Ok(act_mertens_with_mean(samples, mean))
}

/// Mertens-corrected transform for a known mean:
/// `V_k = √(n/2)[Σ μ(l) S_{kl} − mean · M(⌊(n−1)/k⌋)]`, `V_0 = √n · mean`.
pub fn act_mertens_with_mean<T: Real>(
    samples: &NonUniformSamples<T>,
    mean: T,
) -> SpectralCoefficients<T> {
    let n = samples.grid().n();
    let gain = real::<T>((n as f64 / 2.0).sqrt());
    let sums = mobius_sums(&act_averages(samples));
    let mut values = Vec::with_capacity(n);
    values.push(real::<T>((n as f64).sqrt()) * mean);
    for (i, s) in sums.into_iter().enumerate() {
        let k = i + 1;
        let m = real::<T>(big_m((n - 1) / k) as f64);
        values.push(gain * (s - mean * m));
    }
    SpectralCoefficients::new(values)
}

/// The `n × n` orthonormal DCT-II matrix.
pub fn dct2_matrix<T: Real>(n: usize) -> DenseMatrix<T> {
    let nf = n as f64;
    DenseMatrix::from_fn(n, n, |k, i| {
        let alpha = if k == 0 {
            (1.0 / nf).sqrt()
        } else {
            (2.0 / nf).sqrt()
        };
        let angle = T::PI() * real::<T>(((2 * i + 1) * k) as f64) / real::<T>(2.0 * nf);
        real::<T>(alpha) * angle.cos()
    })
}

/// Orthonormal DCT-II by direct summation. Shares no code with the ACT paths.
pub fn dct2_oracle<T: Real>(v: &UniformSignal<T>) -> SpectralCoefficients<T> {
    let n = v.len();
    let nf = n as f64;
    let values = (0..n)
        .map(|k| {
            let alpha = if k == 0 {
                (1.0 / nf).sqrt()
            } else {
                (2.0 / nf).sqrt()
            };
            let sum = v
                .values()
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (i, &x)| {
                    let angle = T::PI() * real::<T>(((2 * i + 1) * k) as f64) / real::<T>(2.0 * nf);
                    acc + x * angle.cos()
                });
            real::<T>(alpha) * sum
        })
        .collect();
    SpectralCoefficients::new(values)
}

/// Reference Möbius matrix for n = 8, row k holding μ(j/k) for k | j.
pub const EXPECTED_MOBIUS_8: [[i64; 7]; 7] = [
    [1, -1, -1, 0, -1, 1, -1],
    [0, 1, 0, -1, 0, -1, 0],
    [0, 0, 1, 0, 0, -1, 0],
    [0, 0, 0, 1, 0, 0, 0],
    [0, 0, 0, 0, 1, 0, 0],
    [0, 0, 0, 0, 0, 1, 0],
    [0, 0, 0, 0, 0, 0, 1],
];

/// Reference sample-selection matrix for n = 8.
pub const EXPECTED_SELECTION_8: [[i64; 10]; 7] = [
    [1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 0, 0, 0, 0, 0, 0, 0, 0, 1],
    [1, 0, 0, 0, 0, 0, 2, 0, 0, 0],
    [1, 0, 0, 0, 2, 0, 0, 0, 0, 1],
    [1, 0, 0, 2, 0, 0, 0, 2, 0, 0],
    [1, 0, 2, 0, 0, 0, 2, 0, 0, 1],
    [1, 2, 0, 0, 0, 2, 0, 0, 2, 0],
];

/// Reference diagonal of the Mertens matrix for n = 8.
pub const EXPECTED_MERTENS_DIAG_8: [(i64, i64); 7] =
    [(1, 2), (1, 4), (0, 1), (-1, 4), (-1, 4), (-1, 4), (-1, 4)];

pub use crate::RationalMatrix;

/// Factors of `T = 2 · Mo · D1 · S + Me · W⁺` for n = 8.
#[derive(Debug, Clone)]
pub struct FactorizationBundle<T> {
    pub mo: RationalMatrix,
    pub d1: RationalMatrix,
    pub s: RationalMatrix,
    /// `diag(−M(⌊7/k⌋)/4)` times the 7×8 all-ones matrix.
    pub me: RationalMatrix,
    pub t: DenseMatrix<T>,
}

/// Möbius matrix: entry `(k, j)` is `μ(j/k)` when `k | j`, else 0.
pub fn mobius_matrix(n: usize) -> RationalMatrix {
    DenseMatrix::from_fn(n - 1, n - 1, |r, c| {
        let (k, j) = (r + 1, c + 1);
        if j % k == 0 {
            ratio(mu(j / k), 1)
        } else {
            BigRational::zero()
        }
    })
}

/// `diag(1, 1/2, …, 1/(n−1))`.
pub fn reciprocal_diagonal(n: usize) -> RationalMatrix {
    let diag: Vec<BigRational> = (1..n).map(|k| ratio(1, k as i64)).collect();
    DenseMatrix::diagonal(&diag)
}

/// Multiplicity table of the grid as a rational matrix.
pub fn selection_matrix(grid: &SamplingGrid) -> RationalMatrix {
    let table = grid.multiplicity_table();
    DenseMatrix::from_fn(grid.n() - 1, grid.len(), |k, j| {
        ratio(table[k][j] as i64, 1)
    })
}

/// Mertens matrix `diag(−√(n/2) · M(⌊(n−1)/k⌋) / n) · 1_{(n−1)×n}`.
///
/// `None` when `√(n/2)` is irrational.
pub fn mertens_matrix(n: usize) -> Option<RationalMatrix> {
    let half = n / 2;
    let root = (0..=half).find(|r| r * r == half)? as i64;
    let diag: Vec<BigRational> = (1..n)
        .map(|k| ratio(-root * big_m((n - 1) / k), n as i64))
        .collect();
    let ones = DenseMatrix::from_fn(n - 1, n, |_, _| ratio(1, 1));
    DenseMatrix::diagonal(&diag).matmul(&ones).ok()
}

fn matches_reference<const C: usize>(m: &RationalMatrix, reference: &[[i64; C]]) -> bool {
    m.rows() == reference.len()
        && m.cols() == C
        && reference.iter().enumerate().all(|(i, row)| {
            row.iter()
                .enumerate()
                .all(|(j, &x)| m.get(i, j) == &BigRational::from_integer(BigInt::from(x)))
        })
}

/// Builds every factor from closed forms, checks them against the reference
/// matrices, and assembles `T`.
pub fn build_factorization<T: Real>(
    grid: &SamplingGrid,
) -> Result<FactorizationBundle<T>, ActError> {
    if grid.n() != 8 || !grid.has_taps() {
        return Err(ActError::UnsupportedLength(grid.n()));
    }
    let mo = mobius_matrix(8);
    let d1 = reciprocal_diagonal(8);
    let s = selection_matrix(grid);
    let me = mertens_matrix(8).ok_or(ActError::UnsupportedLength(8))?;

    if !matches_reference(&mo, &EXPECTED_MOBIUS_8) {
        return Err(ActError::SelfCheck { name: "Mo" });
    }
    if !matches_reference(&s, &EXPECTED_SELECTION_8) {
        return Err(ActError::SelfCheck { name: "S" });
    }
    let d1_ok = (0..7).all(|i| {
        (0..7).all(|j| {
            let want = if i == j {
                ratio(1, (i + 1) as i64)
            } else {
                BigRational::zero()
            };
            d1.get(i, j) == &want
        })
    });
    if !d1_ok {
        return Err(ActError::SelfCheck { name: "D1" });
    }
    let me_ok = (0..7).all(|i| {
        let (a, b) = EXPECTED_MERTENS_DIAG_8[i];
        (0..8).all(|j| me.get(i, j) == &ratio(a, b))
    });
    if !me_ok {
        return Err(ActError::SelfCheck { name: "Me" });
    }

    let exact_part = null_mean_operator(&mo, &d1, &s)?;
    let w_plus = pseudo_inverse(&build_w::<T>(grid))?;
    let me_t = me.map(T::from_rational);
    let t = exact_part
        .map(T::from_rational)
        .add(&me_t.matmul(&w_plus)?)?;
    Ok(FactorizationBundle { mo, d1, s, me, t })
}

/// `2 · Mo · D1 · S`, the exact null-mean operator.
pub fn null_mean_operator(
    mo: &RationalMatrix,
    d1: &RationalMatrix,
    s: &RationalMatrix,
) -> Result<RationalMatrix, LinalgError> {
    Ok(mo.matmul(d1)?.matmul(s)?.scale(&ratio(2, 1)))
}

/// `[V_1 … V_7]ᵀ = T · v_r`, returned with `V_0 = 0`.
pub fn transform_via_t<T: Real>(
    samples: &NonUniformSamples<T>,
    bundle: &FactorizationBundle<T>,
) -> Result<SpectralCoefficients<T>, ActError> {
    let ac = bundle.t.apply(samples.values())?;
    let mut values = vec![T::zero()];
    values.extend(ac);
    Ok(SpectralCoefficients::new(values))
}

/// Precomputed state for repeatedly transforming signals on one grid.
#[derive(Debug, Clone)]
pub struct ActPlan<T> {
    interpolator: Interpolator<T>,
    mean_weights: Vec<T>,
}

impl<T: Real> ActPlan<T> {
    pub fn new(n: usize) -> Result<Self, ActError> {
        let grid = Arc::new(SamplingGrid::build(n)?);
        let mean_weights = mean_weights::<T>(&grid)?;
        Ok(Self {
            interpolator: Interpolator::new(grid),
            mean_weights,
        })
    }

    pub fn grid(&self) -> &Arc<SamplingGrid> {
        self.interpolator.grid()
    }

    pub fn w(&self) -> &DenseMatrix<T> {
        self.interpolator.matrix()
    }

    pub fn mean_weights(&self) -> &[T] {
        &self.mean_weights
    }

    pub fn interpolate(&self, v: &UniformSignal<T>) -> Result<NonUniformSamples<T>, ActError> {
        Ok(self.interpolator.interpolate(v)?)
    }

    pub fn samples(&self, values: Vec<T>) -> Result<NonUniformSamples<T>, ActError> {
        Ok(NonUniformSamples::new(Arc::clone(self.grid()), values)?)
    }

    pub fn mean(&self, samples: &NonUniformSamples<T>) -> Result<T, ActError> {
        Ok(dot_mean(&self.mean_weights, samples.values())?)
    }

    pub fn mertens(
        &self,
        samples: &NonUniformSamples<T>,
    ) -> Result<SpectralCoefficients<T>, ActError> {
        Ok(act_mertens_with_mean(samples, self.mean(samples)?))
    }
}

/// Largest absolute difference over the coefficient indices in `range`.
pub fn max_abs_error<T: Scalar>(
    a: &SpectralCoefficients<T>,
    b: &SpectralCoefficients<T>,
    range: std::ops::Range<usize>,
) -> f64 {
    range
        .map(|k| (a.values[k].to_f64() - b.values[k].to_f64()).abs())
        .fold(0.0, f64::max)
}
