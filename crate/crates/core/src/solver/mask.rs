use crate::error::{Error, Result};
use crate::matrixkit::DenseMatrix;

/// Foreground mask of one column: `|f_i| > eps`. With `eps == 0` this is
/// exactly `f_i != 0`, relying on the exact zeros of the fused-lasso prox.
pub fn extract_mask(column: &[f64], eps: f64) -> Result<Vec<bool>> {
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::invalid(format!(
            "mask threshold must be nonnegative, got {eps}"
        )));
    }
    Ok(column.iter().map(|v| v.abs() > eps).collect())
}

/// Masks for every column of a foreground matrix.
pub fn extract_masks(foreground: &DenseMatrix, eps: f64) -> Result<Vec<Vec<bool>>> {
    foreground.columns().map(|c| extract_mask(c, eps)).collect()
}
