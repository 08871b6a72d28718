//! Monotone FISTA for `min_s tau ||s||_1 + 1/2 ||A s - m||²`.

use crate::error::{Error, Result};
use crate::matrixkit::{check_tau, norm2, shrink, svd, DenseMatrix};

/// Lipschitz constant of the smooth part's gradient, `||A||_2²`, nudged up so
/// it stays an upper bound after rounding.
pub fn lipschitz_bound(a: &DenseMatrix) -> Result<f64> {
    let s = svd(a)?.singular_values.first().copied().unwrap_or(0.0);
    Ok(s * s * (1.0 + 1e-10))
}

pub fn lasso_objective(a: &DenseMatrix, m: &[f64], tau: f64, s: &[f64]) -> f64 {
    let r = residual(a, s, m);
    0.5 * r.iter().map(|v| v * v).sum::<f64>() + tau * s.iter().map(|v| v.abs()).sum::<f64>()
}

fn residual(a: &DenseMatrix, s: &[f64], m: &[f64]) -> Vec<f64> {
    let mut r = a.matvec(s);
    for (ri, mi) in r.iter_mut().zip(m) {
        *ri -= mi;
    }
    r
}

/// Runs `iters` monotone FISTA iterations from `s = 0`.
pub fn fista_lasso(a: &DenseMatrix, m: &[f64], tau: f64, iters: usize) -> Result<Vec<f64>> {
    let lip = lipschitz_bound(a)?;
    fista_lasso_warm(a, m, tau, iters, lip, &vec![0.0; a.cols()])
}

/// FISTA with a precomputed Lipschitz bound and a starting point.
///
/// The returned iterate never has a larger objective than `start`.
pub fn fista_lasso_warm(
    a: &DenseMatrix,
    m: &[f64],
    tau: f64,
    iters: usize,
    lipschitz: f64,
    start: &[f64],
) -> Result<Vec<f64>> {
    check_tau(tau)?;
    if m.len() != a.rows() || start.len() != a.cols() {
        return Err(Error::ShapeMismatch {
            expected: format!("target of {} and start of {}", a.rows(), a.cols()),
            actual: format!("{} and {}", m.len(), start.len()),
        });
    }
    if !lipschitz.is_finite() || lipschitz < 0.0 {
        return Err(Error::invalid(format!(
            "invalid Lipschitz bound {lipschitz}"
        )));
    }
    if lipschitz == 0.0 {
        // A = 0: the data term is constant.
        return Ok(vec![0.0; a.cols()]);
    }
    let step = 1.0 / lipschitz;
    let thresh = tau * step;

    let mut x = start.to_vec();
    let mut fx = lasso_objective(a, m, tau, &x);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut z = vec![0.0; x.len()];

    for _ in 0..iters {
        let grad = a.tr_matvec(&residual(a, &y, m));
        for ((zi, &yi), &gi) in z.iter_mut().zip(&y).zip(&grad) {
            *zi = shrink(yi - step * gi, thresh);
        }
        let fz = lasso_objective(a, m, tau, &z);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());

        let moved: f64 = norm2(&z.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
        let accept = fz <= fx;
        let prev = x.clone();
        if accept {
            x.copy_from_slice(&z);
            fx = fz;
        }
        // y = x + (t/t')(z - x) + ((t-1)/t')(x - prev)
        let c1 = t / t_next;
        let c2 = (t - 1.0) / t_next;
        for i in 0..y.len() {
            y[i] = x[i] + c1 * (z[i] - x[i]) + c2 * (x[i] - prev[i]);
        }
        t = t_next;

        // y is a fixed point of the prox-gradient map: optimal.
        if accept && moved <= 1e-15 * (1.0 + norm2(&x)) {
            break;
        }
    }
    Ok(x)
}
