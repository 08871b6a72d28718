//! Thin SVD by one-sided (Hestenes) Jacobi rotations.
//!
//! Rotations orthogonalize the columns of a working copy of the matrix; the
//! column norms are the singular values and the accumulated rotations are V.
//! Everything is sequential with a fixed pair ordering, so the output is a
//! deterministic function of the input bits.

use super::{axpy, dot, norm2, DenseMatrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `M = U diag(s) Vᵀ` with `r = min(rows, cols)`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// rows × r, orthonormal columns.
    pub u: DenseMatrix,
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec<f64>,
    /// cols × r, orthonormal columns.
    pub v: DenseMatrix,
}

impl SvdFactors {
    /// `U diag(s) Vᵀ` with caller-supplied singular values (same length as r).
    pub fn recompose_with(&self, s: &[f64]) -> DenseMatrix {
        let (p, n) = (self.u.rows(), self.v.rows());
        let mut out = DenseMatrix::zeros(p, n);
        for (k, &sk) in s.iter().enumerate() {
            if sk == 0.0 {
                continue;
            }
            let uk = self.u.col(k);
            let vk = self.v.col(k);
            for (j, &vkj) in vk.iter().enumerate().take(n) {
                let coef = sk * vkj;
                if coef != 0.0 {
                    axpy(coef, uk, out.col_mut(j));
                }
            }
        }
        out
    }

    pub fn recompose(&self) -> DenseMatrix {
        self.recompose_with(&self.singular_values)
    }

    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }
}

/// Computes the thin SVD of `m`.
pub fn svd(m: &DenseMatrix) -> Result<SvdFactors> {
    m.ensure_finite("svd input")?;
    if m.rows() >= m.cols() {
        jacobi_tall(m)
    } else {
        let t = jacobi_tall(&m.transpose())?;
        Ok(SvdFactors {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        })
    }
}

fn jacobi_tall(m: &DenseMatrix) -> Result<SvdFactors> {
    let (p, n) = m.shape();
    let mut w = m.clone();
    let mut v = DenseMatrix::identity(n);

    let scale = norm2(m.as_slice());
    // Columns below this squared norm are numerically zero and left alone.
    let negligible = (f64::EPSILON * scale).powi(2);
    let ortho_tol = f64::EPSILON * (p as f64).sqrt().max(1.0);

    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let (alpha, beta, gamma) = {
                    let (wi, wj) = (w.col(i), w.col(j));
                    (dot(wi, wi), dot(wj, wj), dot(wi, wj))
                };
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                if gamma.abs() <= ortho_tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(w.as_mut_slice(), p, i, j, c, s);
                rotate_columns(v.as_mut_slice(), n, i, j, c, s);
            }
        }
        sweeps += 1;
        if !rotated {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(Error::SvdNoConvergence {
                rows: p,
                cols: n,
                sweeps,
            });
        }
    }

    let mut order: Vec<(usize, f64)> = (0..n).map(|j| (j, norm2(w.col(j)))).collect();
    // Stable sort keeps equal singular values in column order.
    order.sort_by(|a, b| b.1.total_cmp(&a.1));

    let sigma_max = order.first().map_or(0.0, |o| o.1);
    let zero_cut = sigma_max * (p.max(n) as f64) * f64::EPSILON;

    let mut u = DenseMatrix::zeros(p, n);
    let mut vs = DenseMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (k, &(j, sigma)) in order.iter().enumerate() {
        vs.col_mut(k).copy_from_slice(v.col(j));
        if sigma > zero_cut {
            let inv = 1.0 / sigma;
            for (dst, &src) in u.col_mut(k).iter_mut().zip(w.col(j)) {
                *dst = src * inv;
            }
            s.push(sigma);
        } else {
            missing.push(k);
            s.push(0.0);
        }
    }

    reorthonormalize(&mut u, &mut missing);
    complete_basis(&mut u, &missing);

    Ok(SvdFactors {
        u,
        singular_values: s,
        v: vs,
    })
}

#[inline]
fn rotate_columns(data: &mut [f64], rows: usize, i: usize, j: usize, c: f64, s: f64) {
    debug_assert!(i < j);
    let (head, tail) = data.split_at_mut(j * rows);
    let ci = &mut head[i * rows..(i + 1) * rows];
    let cj = &mut tail[..rows];
    for (a, b) in ci.iter_mut().zip(cj.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// One modified Gram-Schmidt pass over the computed left vectors. Columns that
/// collapse are handed to [`complete_basis`].
fn reorthonormalize(u: &mut DenseMatrix, missing: &mut Vec<usize>) {
    let p = u.rows();
    let r = u.cols();
    for k in 0..r {
        if missing.contains(&k) {
            continue;
        }
        for prev in 0..k {
            if missing.contains(&prev) {
                continue;
            }
            let (head, tail) = u.as_mut_slice().split_at_mut(k * p);
            let q = &head[prev * p..(prev + 1) * p];
            let x = &mut tail[..p];
            let proj = dot(q, x);
            axpy(-proj, q, x);
        }
        let nrm = norm2(u.col(k));
        if nrm < 0.5 {
            u.col_mut(k).iter_mut().for_each(|x| *x = 0.0);
            missing.push(k);
        } else {
            u.col_mut(k).iter_mut().for_each(|x| *x /= nrm);
        }
    }
    missing.sort_unstable();
}

/// Fills the listed columns with unit vectors orthogonal to every other column,
/// drawing candidates from the standard basis.
fn complete_basis(u: &mut DenseMatrix, missing: &[usize]) {
    let p = u.rows();
    let mut candidate = 0usize;
    for &k in missing {
        while candidate < p {
            let mut x = vec![0.0; p];
            x[candidate] = 1.0;
            candidate += 1;
            // Two passes of Gram-Schmidt against everything filled so far.
            for _ in 0..2 {
                for other in 0..u.cols() {
                    if other == k {
                        continue;
                    }
                    let q = u.col(other);
                    let proj = dot(q, &x);
                    if proj != 0.0 {
                        axpy(-proj, q, &mut x);
                    }
                }
            }
            let nrm = norm2(&x);
            if nrm > 1e-3 {
                for (dst, src) in u.col_mut(k).iter_mut().zip(&x) {
                    *dst = src / nrm;
                }
                break;
            }
        }
    }
}
