use rayon::prelude::*;

use super::{
    fista_lasso_warm, foreground_step, frame_weights, gfl_norm, lipschitz_bound, penalty_terms,
    spectral, DecompositionResult, IterationView, SolverConfig, TraceRecord,
};
use crate::error::{Error, Result};
use crate::matrixkit::{frobenius_norm, l1_norm, numerical_rank, DenseMatrix};
use crate::observation::ObservationMatrix;
use crate::weights::build_neighborhood_with;

/// Relative threshold for the training-rank diagnostic.
const RANK_TOL: f64 = 1e-6;

/// Pure background frames `d1` (the dictionary) and mixed frames `d2`.
#[derive(Debug, Clone)]
pub struct SmlProblem {
    pub d1: ObservationMatrix,
    pub d2: ObservationMatrix,
}

impl SmlProblem {
    pub fn new(d1: ObservationMatrix, d2: ObservationMatrix) -> Result<Self> {
        if d1.frames() == 0 {
            return Err(Error::invalid(
                "at least one pure background frame is required",
            ));
        }
        if d2.frames() == 0 {
            return Err(Error::invalid("no mixed frames to decompose"));
        }
        if (d1.width(), d1.height()) != (d2.width(), d2.height()) {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{} frames", d1.width(), d1.height()),
                actual: format!("{}x{} frames", d2.width(), d2.height()),
            });
        }
        Ok(SmlProblem { d1, d2 })
    }
}

/// Sparse-coding decomposition over known background frames:
///
/// `min ||S||_1 + λ ||F2||_gfl  s.t.  D2 = D1 S + F2`
///
/// The coefficient step runs `fista_iters` FISTA iterations per column, warm
/// started from the previous coefficients. The reported background is `D1 S`.
pub fn solve_sml(prob: &SmlProblem, cfg: &SolverConfig) -> Result<DecompositionResult> {
    solve_sml_observed(prob, cfg, |_| {})
}

pub fn solve_sml_observed(
    prob: &SmlProblem,
    cfg: &SolverConfig,
    mut observer: impl FnMut(&IterationView<'_>),
) -> Result<DecompositionResult> {
    cfg.validate()?;
    let d1 = prob.d1.matrix();
    let d2 = prob.d2.matrix();
    d1.ensure_finite("background frames")?;
    d2.ensure_finite("mixed frames")?;
    let (p, n2) = d2.shape();
    let n1 = d1.cols();

    let d_norm = frobenius_norm(d2);
    let spec = if d_norm == 0.0 { 0.0 } else { spectral(d2)? };
    let params = cfg.resolve(p, n2, spec)?;

    let graph = build_neighborhood_with(prob.d2.width(), prob.d2.height(), cfg.connectivity)?;
    let weights = frame_weights(d2, &graph, cfg.sigma)?;
    let lip = lipschitz_bound(d1)?;
    let training_rank = numerical_rank(d1, RANK_TOL)?;
    let rel = if d_norm > 0.0 { d_norm } else { 1.0 };

    let mut s = DenseMatrix::zeros(n1, n2);
    let mut b = DenseMatrix::zeros(p, n2);
    let mut f = DenseMatrix::zeros(p, n2);
    let mut y = DenseMatrix::zeros(p, n2);
    let mut mu = params.mu0;
    let mut trace = Vec::new();
    let mut converged = false;

    for iteration in 1..=cfg.max_outer_iters {
        let inv_mu = 1.0 / mu;

        // S-step: per-column lasso toward M = D2 - F2 + Y/mu
        let target =
            DenseMatrix::from_fn(p, n2, |i, j| d2[(i, j)] - f[(i, j)] + inv_mu * y[(i, j)]);
        let columns: Vec<Vec<f64>> = (0..n2)
            .into_par_iter()
            .map(|j| fista_lasso_warm(d1, target.col(j), inv_mu, cfg.fista_iters, lip, s.col(j)))
            .collect::<Result<_>>()?;
        for (j, c) in columns.iter().enumerate() {
            s.col_mut(j).copy_from_slice(c);
        }
        b = d1.matmul(&s)?;

        // F2-step
        let m2 = DenseMatrix::from_fn(p, n2, |i, j| d2[(i, j)] - b[(i, j)] + inv_mu * y[(i, j)]);
        let gfl = params.gfl_params(mu);
        foreground_step(&m2, &graph, &weights, gfl, &mut f)?;

        let r = DenseMatrix::from_fn(p, n2, |i, j| d2[(i, j)] - b[(i, j)] - f[(i, j)]);
        let objective = l1_norm(&s) + params.lambda * gfl_norm(&f, &graph, &weights, params.rho);
        let lagrangian = objective + penalty_terms(&y, &r, mu);
        for (yv, &rv) in y.as_mut_slice().iter_mut().zip(r.as_slice()) {
            *yv += mu * rv;
        }
        let residual = frobenius_norm(&r) / rel;

        let record = TraceRecord {
            iteration,
            objective,
            lagrangian,
            residual,
            mu,
        };
        trace.push(record);
        observer(&IterationView {
            iteration,
            mu,
            params: gfl,
            background_target: &target,
            background: &b,
            coefficients: Some(&s),
            foreground_target: &m2,
            foreground: &f,
            dual: &y,
            record,
        });
        log::debug!(
            "iter {iteration}: objective {objective:.6e} residual {residual:.3e} mu {mu:.3e}"
        );

        mu = params.next_mu(mu);
        if residual <= cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(DecompositionResult {
        background: b,
        foreground: f,
        dual: y,
        coefficients: Some(s),
        trace,
        converged,
        lambda: params.lambda,
        training_rank: Some(training_rank),
    })
}
