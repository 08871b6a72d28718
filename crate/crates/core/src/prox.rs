//! Proximal operators used by the outer ALM loops.

use crate::error::{Error, Result};
use crate::graphflow::tv_prox;
use crate::matrixkit::{check_tau, shrink, soft_threshold, svd, DenseMatrix};
use crate::weights::{EdgeWeights, NeighborGraph};

/// Per-iteration penalties of the column-wise fused-lasso prox: `lam1` on
/// values, `lam2` on weighted neighbor differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GflParams {
    pub lam1: f64,
    pub lam2: f64,
}

impl GflParams {
    pub fn new(lam1: f64, lam2: f64) -> Result<Self> {
        let p = GflParams { lam1, lam2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lam1", self.lam1), ("lam2", self.lam2)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Singular value thresholding: minimizer of `tau ||B||_* + 1/2 ||B - m||_F²`.
pub fn prox_nuclear(m: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    Ok(prox_nuclear_with_norm(m, tau)?.0)
}

/// [`prox_nuclear`] that also returns the nuclear norm of the result.
pub fn prox_nuclear_with_norm(m: &DenseMatrix, tau: f64) -> Result<(DenseMatrix, f64)> {
    check_tau(tau)?;
    if tau == 0.0 {
        m.ensure_finite("prox_nuclear input")?;
        let norm = svd(m)?.singular_values.iter().sum();
        return Ok((m.clone(), norm));
    }
    let f = svd(m)?;
    let shrunk: Vec<f64> = f.singular_values.iter().map(|&s| shrink(s, tau)).collect();
    let norm = shrunk.iter().sum();
    Ok((f.recompose_with(&shrunk), norm))
}

/// Generalized fused lasso prox of one frame column:
///
/// `argmin_f lam1 ||f||_1 + lam2 sum_ij w_ij |f_i - f_j| + 1/2 ||f - m||²`
///
/// computed as the weighted TV prox followed by element-wise soft-thresholding.
pub fn prox_gfl(
    m: &[f64],
    graph: &NeighborGraph,
    weights: &EdgeWeights,
    params: GflParams,
) -> Result<Vec<f64>> {
    params.validate()?;
    if m.len() != graph.node_count() {
        return Err(Error::ShapeMismatch {
            expected: format!("column of {} pixels", graph.node_count()),
            actual: format!("{} entries", m.len()),
        });
    }
    let mut f = tv_prox(m, graph.edges(), weights.as_slice(), params.lam2)?;
    for v in f.iter_mut() {
        *v = shrink(*v, params.lam1);
    }
    Ok(f)
}

/// `argmin_f tau ||f||_1 + 1/2 ||f - m||²`
pub fn prox_l1(m: &[f64], tau: f64) -> Result<Vec<f64>> {
    soft_threshold(m, tau)
}

/// Value of the fused-lasso penalty `||f||_1 + rho sum w |f_i - f_j|` for one column.
pub fn gfl_penalty(f: &[f64], graph: &NeighborGraph, weights: &EdgeWeights, rho: f64) -> f64 {
    let l1: f64 = f.iter().map(|v| v.abs()).sum();
    if rho == 0.0 {
        return l1;
    }
    l1 + rho * crate::graphflow::tv_value(f, graph.edges(), weights.as_slice())
}
