//! Dense column-major matrices and the handful of kernels the solvers need:
//! norms, a thin SVD and element-wise soft-thresholding.

mod svd;

pub use svd::{svd, SvdFactors};

use crate::error::{Error, Result};

/// Column-major dense matrix of `f64`.
///
/// Frames are stored one per column, so column access is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Square diagonal matrix.
    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values for {rows}x{cols}", rows * cols),
                actual: format!("{} values", values.len()),
            });
        }
        Ok(DenseMatrix { rows, cols, values })
    }

    /// Builds a matrix from equally long columns.
    pub fn from_columns<C: AsRef<[f64]>>(rows: usize, columns: &[C]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows * columns.len());
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(Error::ShapeMismatch {
                    expected: format!("column of length {rows}"),
                    actual: format!("column {j} of length {}", c.len()),
                });
            }
            values.extend_from_slice(c);
        }
        Ok(DenseMatrix {
            rows,
            cols: columns.len(),
            values,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                values.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, values }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.values[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        let step = self.rows.max(1);
        self.values.chunks_exact(step).take(self.cols)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    pub(crate) fn ensure_same_shape(&self, other: &DenseMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", self.rows, self.cols),
                actual: format!("{}x{}", other.rows, other.cols),
            });
        }
        Ok(())
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self * rhs`.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch {
                expected: format!("{} rows on the right operand", self.cols),
                actual: format!("{}x{}", rhs.rows, rhs.cols),
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            let dst = &mut out.values[j * self.rows..(j + 1) * self.rows];
            for (k, &r) in rhs.col(j).iter().enumerate() {
                if r == 0.0 {
                    continue;
                }
                axpy(r, self.col(k), dst);
            }
        }
        Ok(out)
    }

    /// `self * x` for a vector `x` of length `cols`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec length mismatch");
        let mut out = vec![0.0; self.rows];
        for (k, &xk) in x.iter().enumerate() {
            if xk != 0.0 {
                axpy(xk, self.col(k), &mut out);
            }
        }
        out
    }

    /// `selfᵀ * y` for a vector `y` of length `rows`.
    pub fn tr_matvec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "tr_matvec length mismatch");
        self.columns().map(|c| dot(c, y)).collect()
    }

    /// Element-wise `self - other`.
    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_map(other, |a, b| a - b)
    }

    /// Element-wise `self + other`.
    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn zip_map(&self, other: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> Result<DenseMatrix> {
        self.ensure_same_shape(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            values,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> DenseMatrix {
        self.map(|v| v * s)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.values[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.values[j * self.rows + i]
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += a * x`
#[inline]
pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Scalar soft-thresholding `sign(x) max(|x| - tau, 0)`.
///
/// Values inside `[-tau, tau]` map to an exact `0.0`.
#[inline]
pub fn shrink(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::invalid(format!(
            "threshold must be nonnegative, got {tau}"
        )));
    }
    Ok(())
}

/// Element-wise soft-thresholding of a vector.
pub fn soft_threshold(x: &[f64], tau: f64) -> Result<Vec<f64>> {
    check_tau(tau)?;
    Ok(x.iter().map(|&v| shrink(v, tau)).collect())
}

/// In-place variant of [`soft_threshold`].
pub fn soft_threshold_in_place(x: &mut [f64], tau: f64) -> Result<()> {
    check_tau(tau)?;
    for v in x.iter_mut() {
        *v = shrink(*v, tau);
    }
    Ok(())
}

/// Element-wise soft-thresholding of a matrix.
pub fn soft_threshold_matrix(m: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    check_tau(tau)?;
    Ok(m.map(|v| shrink(v, tau)))
}

pub fn frobenius_norm(m: &DenseMatrix) -> f64 {
    norm2(m.as_slice())
}

/// Sum of absolute entries.
pub fn l1_norm(m: &DenseMatrix) -> f64 {
    m.as_slice().iter().map(|v| v.abs()).sum()
}

/// Sum of singular values.
pub fn nuclear_norm(m: &DenseMatrix) -> Result<f64> {
    Ok(svd(m)?.singular_values.iter().sum())
}

/// Largest singular value (0 for an empty matrix).
pub fn spectral_norm(m: &DenseMatrix) -> Result<f64> {
    Ok(svd(m)?.singular_values.first().copied().unwrap_or(0.0))
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &DenseMatrix, rel_tol: f64) -> Result<usize> {
    let s = svd(m)?.singular_values;
    let Some(&top) = s.first() else {
        return Ok(0);
    };
    if top == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&v| v > rel_tol * top).count())
}
