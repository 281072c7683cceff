//! Small dense matrices over any [`Scalar`].
//!
//! Sizes here are tiny (at most a few dozen rows), so everything is a plain
//! row-major `Vec`. Every reduction runs left to right over the inner index;
//! results are bit-reproducible across runs and platforms.

use std::fmt;

use log::warn;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("entry count {len} does not match a {rows}x{cols} matrix")]
    BadLength {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular: no usable pivot in column {pivot}")]
    Singular { pivot: usize },
}

/// Pivot magnitude ratio above which elimination logs a conditioning warning.
pub const PIVOT_RATIO_WARNING: f64 = 1e8;

#[derive(Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::BadLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows; all rows must share a length.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, LinalgError> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let data: Vec<T> = rows.into_iter().flatten().collect();
        Self::new(n, m, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| T::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    /// Square matrix with `diag` on the diagonal.
    pub fn diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        Self::from_fn(
            n,
            n,
            |i, j| if i == j { diag[i].clone() } else { T::zero() },
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, factor: &T) -> Self {
        self.map(|x| x.clone() * factor.clone())
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        self.zip_with(other, "add", |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        self.zip_with(other, "sub", |a, b| a.clone() - b.clone())
    }

    fn zip_with(
        &self,
        other: &Self,
        op: &'static str,
        f: impl Fn(&T, &T) -> T,
    ) -> Result<Self, LinalgError> {
        if self.shape() != other.shape() {
            return Err(LinalgError::DimensionMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| f(a, b))
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(Self::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = T::zero();
            for p in 0..self.cols {
                acc = acc + self.get(i, p).clone() * other.get(p, j).clone();
            }
            acc
        }))
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[T]) -> Result<Vec<T>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "apply",
                left: self.shape(),
                right: (v.len(), 1),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (a, x)| acc + a.clone() * x.clone())
            })
            .collect())
    }

    /// Per-column totals as a `1 × cols` matrix.
    pub fn column_sums(&self) -> Self {
        Self::from_fn(1, self.cols, |_, j| {
            (0..self.rows).fold(T::zero(), |acc, i| acc + self.get(i, j).clone())
        })
    }

    /// Largest absolute entrywise difference, in `f64`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64, LinalgError> {
        let diff = self.sub(other)?;
        Ok(diff.data.iter().map(Scalar::magnitude).fold(0.0, f64::max))
    }

    /// Renders the matrix as CSV, one line per row.
    pub fn to_csv_with(&self, fmt_entry: impl Fn(&T) -> String) -> String {
        let mut out = String::new();
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(&fmt_entry).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

impl<T: fmt::Debug> fmt::Debug for DenseMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

fn is_negligible<T: Scalar>(v: &T) -> bool {
    if T::is_exact() {
        v.is_zero()
    } else {
        v.magnitude() <= T::pivot_tolerance()
    }
}

/// Solves `a · X = b` by Gaussian elimination with partial pivoting.
pub fn solve<T: Scalar>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>, LinalgError> {
    let n = a.rows;
    if a.cols != n {
        return Err(LinalgError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    if b.rows != n {
        return Err(LinalgError::DimensionMismatch {
            op: "solve",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let m = b.cols;
    let mut lhs: Vec<Vec<T>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut rhs: Vec<Vec<T>> = (0..n).map(|i| b.row(i).to_vec()).collect();
    let mut pivot_min = f64::INFINITY;
    let mut pivot_max = 0.0f64;

    for col in 0..n {
        let mut best = col;
        for r in col + 1..n {
            if lhs[r][col].magnitude() > lhs[best][col].magnitude() {
                best = r;
            }
        }
        // Exact scalars may round to 0.0 in magnitude(); prefer any true nonzero.
        if T::is_exact() && lhs[best][col].is_zero() {
            if let Some(r) = (col..n).find(|&r| !lhs[r][col].is_zero()) {
                best = r;
            }
        }
        if is_negligible(&lhs[best][col]) {
            return Err(LinalgError::Singular { pivot: col });
        }
        lhs.swap(col, best);
        rhs.swap(col, best);

        let pivot = lhs[col][col].clone();
        pivot_min = pivot_min.min(pivot.magnitude());
        pivot_max = pivot_max.max(pivot.magnitude());

        for r in col + 1..n {
            if lhs[r][col].is_zero() {
                continue;
            }
            let factor = lhs[r][col].clone() / pivot.clone();
            let (top, bottom) = lhs.split_at_mut(r);
            for (dst, src) in bottom[0][col..n].iter_mut().zip(&top[col][col..n]) {
                *dst = dst.clone() - factor.clone() * src.clone();
            }
            let (top, bottom) = rhs.split_at_mut(r);
            for (dst, src) in bottom[0].iter_mut().zip(&top[col]) {
                *dst = dst.clone() - factor.clone() * src.clone();
            }
        }
    }

    if !T::is_exact() && pivot_min > 0.0 && pivot_max / pivot_min > PIVOT_RATIO_WARNING {
        warn!(
            "ill-conditioned solve: pivot ratio {:.3e} exceeds {:.0e}",
            pivot_max / pivot_min,
            PIVOT_RATIO_WARNING
        );
    }

    let mut x = vec![vec![T::zero(); m]; n];
    for row in (0..n).rev() {
        for c in 0..m {
            let mut acc = rhs[row][c].clone();
            for k in row + 1..n {
                acc = acc - lhs[row][k].clone() * x[k][c].clone();
            }
            x[row][c] = acc / lhs[row][row].clone();
        }
    }
    DenseMatrix::from_rows(x)
}

/// Moore-Penrose pseudo-inverse of a full-column-rank matrix, `(aᵀa)⁻¹aᵀ`.
///
/// For such matrices the pseudo-inverse is the left inverse. Rank deficiency
/// surfaces as [`LinalgError::Singular`].
pub fn pseudo_inverse<T: Scalar>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>, LinalgError> {
    let at = a.transpose();
    let gram = at.matmul(a)?;
    solve(&gram, &at)
}

pub fn matmul<T: Scalar>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>, LinalgError> {
    a.matmul(b)
}

pub fn column_sums<T: Scalar>(a: &DenseMatrix<T>) -> DenseMatrix<T> {
    a.column_sums()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use num_rational::BigRational;

    fn m(rows: Vec<Vec<f64>>) -> DenseMatrix<f64> {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn identity_product() {
        let a = m(vec![
            vec![1.0, 2.0, 3.0],
            vec![4.0, 5.0, 6.0],
            vec![7.0, 8.0, 10.0],
        ]);
        assert_eq!(DenseMatrix::identity(3).matmul(&a).unwrap(), a);
    }

    #[test]
    fn ones_inner_product() {
        let row = DenseMatrix::from_fn(1, 3, |_, _| 1.0);
        let col = DenseMatrix::from_fn(3, 1, |_, _| 1.0);
        assert_eq!(row.matmul(&col).unwrap(), m(vec![vec![3.0]]));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let a = DenseMatrix::<f64>::zeros(2, 3);
        let err = a.matmul(&a).unwrap_err();
        assert!(matches!(
            err,
            LinalgError::DimensionMismatch { op: "matmul", .. }
        ));
        assert!(matches!(
            DenseMatrix::new(2, 2, vec![1.0; 3]),
            Err(LinalgError::BadLength { len: 3, .. })
        ));
    }

    #[test]
    fn solve_scaled_identity() {
        let a = DenseMatrix::identity(2).scale(&2.0);
        let x = solve(&a, &DenseMatrix::identity(2)).unwrap();
        assert_eq!(x, DenseMatrix::identity(2).scale(&0.5));
    }

    #[test]
    fn solve_needs_pivoting() {
        let a = m(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let b = m(vec![vec![1.0], vec![2.0]]);
        assert_eq!(solve(&a, &b).unwrap(), m(vec![vec![2.0], vec![1.0]]));
    }

    #[test]
    fn singular_reports_pivot() {
        let a = m(vec![vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert_eq!(
            solve(&a, &DenseMatrix::identity(2)),
            Err(LinalgError::Singular { pivot: 1 })
        );
        let exact = a.map(|&x| ratio(x as i64, 1));
        assert_eq!(
            solve(&exact, &DenseMatrix::identity(2)),
            Err(LinalgError::Singular { pivot: 1 })
        );
    }

    #[test]
    fn pseudo_inverse_of_identity_and_selector() {
        let eye = DenseMatrix::<f64>::identity(8);
        assert_eq!(pseudo_inverse(&eye).unwrap(), eye);

        let stacked = DenseMatrix::from_fn(10, 8, |i, j| if i == j { 1.0 } else { 0.0 });
        let expected = DenseMatrix::from_fn(8, 10, |i, j| if i == j { 1.0 } else { 0.0 });
        assert_eq!(pseudo_inverse(&stacked).unwrap(), expected);
    }

    #[test]
    fn rank_deficient_pseudo_inverse_fails() {
        let a = DenseMatrix::from_fn(4, 2, |i, _| i as f64);
        assert!(matches!(
            pseudo_inverse(&a),
            Err(LinalgError::Singular { .. })
        ));
    }

    #[test]
    fn exact_pseudo_inverse_is_exact_left_inverse() {
        let a: DenseMatrix<BigRational> = DenseMatrix::from_fn(5, 3, |i, j| {
            ratio(((i + 1) * (j + 2)) as i64 % 7, (j + 1) as i64)
        });
        let p = pseudo_inverse(&a).unwrap();
        assert_eq!(p.matmul(&a).unwrap(), DenseMatrix::identity(3));
    }

    #[test]
    fn column_sums_small() {
        assert_eq!(
            DenseMatrix::<f64>::identity(3).column_sums(),
            m(vec![vec![1.0, 1.0, 1.0]])
        );
        assert_eq!(
            DenseMatrix::from_fn(2, 2, |_, _| 1.0).column_sums(),
            m(vec![vec![2.0, 2.0]])
        );
    }

    #[test]
    fn rationals_stay_in_lowest_terms() {
        let a = DenseMatrix::from_fn(2, 2, |i, j| ratio((i + j + 2) as i64, 4));
        let b = a.matmul(&a).unwrap();
        for e in b.entries() {
            assert!(e.denom() > &num_bigint::BigInt::from(0));
            assert_eq!(e, &BigRational::new(e.numer().clone(), e.denom().clone()));
        }
    }

    #[test]
    fn f32_instantiation() {
        let a = DenseMatrix::<f32>::from_rows(vec![vec![4.0, 1.0], vec![2.0, 3.0]]).unwrap();
        let inv = solve(&a, &DenseMatrix::identity(2)).unwrap();
        let back = a.matmul(&inv).unwrap();
        assert!(back.max_abs_diff(&DenseMatrix::identity(2)).unwrap() < 1e-6);
    }
}
