//! Non-uniform sampling grid, Dirichlet-kernel interpolation and mean
//! recovery from non-uniform samples.
//!
//! Grid points are exact rationals; they are the identity of each input
//! channel. Ascending point order is the channel order used by every matrix,
//! file format and simulator port downstream.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{pseudo_inverse, DenseMatrix, LinalgError};
use crate::scalar::{ratio, real, Real, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SamplingError {
    #[error("transform length must be at least 2, got {0}")]
    TooShort(usize),
    #[error("transform length must be even, got {0}")]
    OddLength(usize),
    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("grid points must be distinct and ascending")]
    Unordered,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The sampling instants required by the transform, after folding.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingGrid {
    n: usize,
    points: Vec<BigRational>,
    /// `taps[k - 1][m]` is the point index holding the m-th sample of average k.
    taps: Vec<Vec<usize>>,
}

impl SamplingGrid {
    /// Enumerates `r = 2mn/k − 1/2` for `k = 1..n−1`, `m = 0..k−1`.
    ///
    /// Instants beyond `n − 1/2` are reflected to `(2n − 1) − r`, which is the
    /// even symmetry of the periodic extension behind the cosine transform. Raw
    /// instants stay below `2n − 1/2`, so one reflection always suffices.
    pub fn build(n: usize) -> Result<Self, SamplingError> {
        if n < 2 {
            return Err(SamplingError::TooShort(n));
        }
        if !n.is_multiple_of(2) {
            return Err(SamplingError::OddLength(n));
        }
        let half = ratio(1, 2);
        let upper = BigRational::from_integer(BigInt::from(n)) - &half;
        let mirror = BigRational::from_integer(BigInt::from(2 * n - 1));

        let mut raw_taps: Vec<Vec<BigRational>> = Vec::with_capacity(n - 1);
        for k in 1..n {
            let row = (0..k)
                .map(|m| {
                    let r = ratio((2 * m * n) as i64, k as i64) - &half;
                    if r > upper {
                        &mirror - r
                    } else {
                        r
                    }
                })
                .collect();
            raw_taps.push(row);
        }

        let mut points: Vec<BigRational> = raw_taps.iter().flatten().cloned().collect();
        points.sort();
        points.dedup();

        let taps = raw_taps
            .iter()
            .map(|row| {
                row.iter()
                    .map(|r| points.binary_search(r).expect("point was inserted above"))
                    .collect()
            })
            .collect();
        Ok(Self { n, points, taps })
    }

    /// A grid with arbitrary ascending points and no averaging taps.
    ///
    /// Only interpolation and mean recovery are meaningful on such a grid; the
    /// transform routines in [`crate::act`] require a grid from [`Self::build`].
    pub fn from_points(n: usize, points: Vec<BigRational>) -> Result<Self, SamplingError> {
        if n < 2 {
            return Err(SamplingError::TooShort(n));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SamplingError::Unordered);
        }
        Ok(Self {
            n,
            points,
            taps: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> &[BigRational] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn has_taps(&self) -> bool {
        !self.taps.is_empty()
    }

    /// Point indices feeding average `k` (1-based), one per `m`.
    pub fn taps(&self, k: usize) -> &[usize] {
        &self.taps[k - 1]
    }

    /// How many of the `k` samples in average `k` land on point `index`.
    pub fn multiplicity(&self, k: usize, index: usize) -> u32 {
        self.taps(k).iter().filter(|&&j| j == index).count() as u32
    }

    /// The `(n−1) × |R|` integer table of multiplicities.
    pub fn multiplicity_table(&self) -> Vec<Vec<u32>> {
        (1..self.n)
            .map(|k| (0..self.len()).map(|j| self.multiplicity(k, j)).collect())
            .collect()
    }

    /// Serializable description of the grid.
    pub fn export(&self) -> GridExport {
        GridExport {
            n: self.n,
            points: self
                .points
                .iter()
                .map(|r| RationalPoint {
                    numerator: r.numer().to_i64().expect("grid numerators are small"),
                    denominator: r.denom().to_i64().expect("grid denominators are small"),
                })
                .collect(),
            multiplicity: if self.has_taps() {
                self.multiplicity_table()
            } else {
                Vec::new()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalPoint {
    pub numerator: i64,
    pub denominator: i64,
}

impl RationalPoint {
    pub fn to_rational(self) -> Option<BigRational> {
        (self.denominator != 0).then(|| ratio(self.numerator, self.denominator))
    }
}

/// JSON shape of a grid: points as `{numerator, denominator}` plus the
/// multiplicity table, row `k − 1` for average `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridExport {
    pub n: usize,
    pub points: Vec<RationalPoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub multiplicity: Vec<Vec<u32>>,
}

/// Uniformly sampled input `v_0..v_{n−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSignal<T> {
    values: Vec<T>,
}

impl<T: Real> UniformSignal<T> {
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

    pub fn mean(&self) -> T {
        let sum = self.values.iter().fold(T::zero(), |acc, &v| acc + v);
        sum / real::<T>(self.values.len() as f64)
    }

    /// The same signal with its mean subtracted.
    pub fn without_mean(&self) -> Self {
        let mean = self.mean();
        Self::new(self.values.iter().map(|&v| v - mean).collect())
    }
}

/// One value per grid point, in ascending grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct NonUniformSamples<T> {
    grid: Arc<SamplingGrid>,
    values: Vec<T>,
}

impl<T: Clone> NonUniformSamples<T> {
    pub fn new(grid: Arc<SamplingGrid>, values: Vec<T>) -> Result<Self, SamplingError> {
        if values.len() != grid.len() {
            return Err(SamplingError::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Arc<SamplingGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> NonUniformSamples<U> {
        NonUniformSamples {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(f).collect(),
        }
    }
}

/// Near-pole threshold on `|sin(x/2)|`.
pub const DIRICHLET_POLE_EPS: f64 = 1e-12;

/// `D_order(x) = sin((order + 1/2)x) / sin(x/2)`.
///
/// At the removable singularities `x = 2πj` the kernel equals `1 + 2·order`
/// (it is `1 + 2Σcos(kx)`, so it is 2π-periodic).
pub fn dirichlet<T: Real>(order: usize, x: T) -> T {
    let half = x / real::<T>(2.0);
    let denom = half.sin();
    let peak = real::<T>((2 * order + 1) as f64);
    if Scalar::to_f64(&denom.abs()) < DIRICHLET_POLE_EPS {
        return peak;
    }
    let order_half = real::<T>(order as f64 + 0.5);
    (order_half * x).sin() / denom
}

/// `a mod 2` for rational `a`, in `[0, 2)`.
fn reduce_mod_two(a: &BigRational) -> BigRational {
    let two = BigInt::from(2);
    let den = a.denom().clone();
    let period = &two * &den;
    let num = a.numer().mod_floor(&period);
    BigRational::new(num, den)
}

/// `D_order(π · a)` for rational `a`, reduced exactly modulo the period first.
fn dirichlet_at_rational_multiple<T: Real>(order: usize, a: &BigRational) -> T {
    let reduced = reduce_mod_two(a);
    if reduced.is_zero() {
        return real::<T>((2 * order + 1) as f64);
    }
    dirichlet(order, T::PI() * T::from_rational(&reduced))
}

/// Interpolation weight of uniform sample `index` at instant `r`:
/// `(1/2n)[D_{n−1}(π(index + r + 1)/n) + D_{n−1}(π(index − r)/n)]`.
pub fn interp_weight<T: Real>(n: usize, index: usize, r: &BigRational) -> T {
    let n_r = BigRational::from_integer(BigInt::from(n));
    let idx = BigRational::from_integer(BigInt::from(index));
    let a_plus = (&idx + r + BigRational::one()) / &n_r;
    let a_minus = (&idx - r) / &n_r;
    let sum = dirichlet_at_rational_multiple::<T>(n - 1, &a_plus)
        + dirichlet_at_rational_multiple::<T>(n - 1, &a_minus);
    sum / real::<T>((2 * n) as f64)
}

/// Interpolant value at an arbitrary instant, without any folding.
pub fn interpolate_at<T: Real>(v: &UniformSignal<T>, r: &BigRational) -> T {
    let n = v.len();
    v.values()
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (idx, &x)| {
            acc + interp_weight::<T>(n, idx, r) * x
        })
}

/// The `|R| × n` interpolation matrix, one row per grid point.
pub fn build_w<T: Real>(grid: &SamplingGrid) -> DenseMatrix<T> {
    DenseMatrix::from_fn(grid.len(), grid.n(), |i, j| {
        interp_weight::<T>(grid.n(), j, &grid.points()[i])
    })
}

/// `v_r = W · v`.
pub fn interpolate<T: Real>(
    v: &UniformSignal<T>,
    grid: &Arc<SamplingGrid>,
) -> Result<NonUniformSamples<T>, SamplingError> {
    Interpolator::new(Arc::clone(grid)).interpolate(v)
}

/// Weights `w/n`: column sums of `W⁺` divided by `n`.
pub fn mean_weights<T: Real>(grid: &SamplingGrid) -> Result<Vec<T>, SamplingError> {
    let w_plus = pseudo_inverse(&build_w::<T>(grid))?;
    let scale = real::<T>(grid.n() as f64);
    Ok(w_plus
        .column_sums()
        .entries()
        .iter()
        .map(|&x| x / scale)
        .collect())
}

/// Signal mean recovered from non-uniform samples alone.
pub fn mean_from_nonuniform<T: Real>(samples: &NonUniformSamples<T>) -> Result<T, SamplingError> {
    let weights = mean_weights::<T>(samples.grid())?;
    dot_mean(&weights, samples.values())
}

pub(crate) fn dot_mean<T: Real>(weights: &[T], values: &[T]) -> Result<T, SamplingError> {
    if weights.len() != values.len() {
        return Err(SamplingError::LengthMismatch {
            expected: weights.len(),
            actual: values.len(),
        });
    }
    Ok(weights
        .iter()
        .zip(values)
        .fold(T::zero(), |acc, (&w, &x)| acc + w * x))
}

/// Caches `W` for repeated interpolation onto one grid.
#[derive(Debug, Clone)]
pub struct Interpolator<T> {
    grid: Arc<SamplingGrid>,
    w: DenseMatrix<T>,
}

impl<T: Real> Interpolator<T> {
    pub fn new(grid: Arc<SamplingGrid>) -> Self {
        let w = build_w(&grid);
        Self { grid, w }
    }

    pub fn grid(&self) -> &Arc<SamplingGrid> {
        &self.grid
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.w
    }

    pub fn interpolate(&self, v: &UniformSignal<T>) -> Result<NonUniformSamples<T>, SamplingError> {
        if v.len() != self.grid.n() {
            return Err(SamplingError::LengthMismatch {
                expected: self.grid.n(),
                actual: v.len(),
            });
        }
        let values = self.w.apply(v.values())?;
        NonUniformSamples::new(Arc::clone(&self.grid), values)
    }
}

/// Grid point lookup keyed by exact value.
pub fn point_index(grid: &SamplingGrid) -> BTreeMap<BigRational, usize> {
    grid.points()
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), i))
        .collect()
}

/// `true` if `r` lies in `[−1/2, n − 1/2]`.
pub fn in_principal_range(n: usize, r: &BigRational) -> bool {
    let half = ratio(1, 2);
    let lo = -half.clone();
    let hi = BigRational::from_integer(BigInt::from(n)) - half;
    r >= &lo && r <= &hi
}
