use super::{
    foreground_step, frame_weights, gfl_norm, penalty_terms, spectral, DecompositionResult,
    IterationView, SolverConfig, TraceRecord,
};
use crate::error::Result;
use crate::matrixkit::{frobenius_norm, DenseMatrix};
use crate::observation::ObservationMatrix;
use crate::prox::prox_nuclear_with_norm;
use crate::weights::build_neighborhood_with;

/// Low-rank plus fused-lasso decomposition `D = B + F`:
///
/// `min ||B||_* + λ ||F||_gfl  s.t.  D = B + F`
///
/// by the inexact augmented Lagrangian scheme, starting from `B = F = Y = 0`.
/// Running out of iterations is not an error; the last iterate is returned
/// with `converged == false`.
pub fn solve_uml(d: &ObservationMatrix, cfg: &SolverConfig) -> Result<DecompositionResult> {
    solve_uml_observed(d, cfg, |_| {})
}

/// [`solve_uml`] with a callback invoked after every outer iteration.
pub fn solve_uml_observed(
    obs: &ObservationMatrix,
    cfg: &SolverConfig,
    mut observer: impl FnMut(&IterationView<'_>),
) -> Result<DecompositionResult> {
    cfg.validate()?;
    let d = obs.matrix();
    d.ensure_finite("observation matrix")?;
    let (p, n) = d.shape();

    let d_norm = frobenius_norm(d);
    let spec = if d_norm == 0.0 { 0.0 } else { spectral(d)? };
    let params = cfg.resolve(p, n, spec)?;

    let graph = build_neighborhood_with(obs.width(), obs.height(), cfg.connectivity)?;
    let weights = frame_weights(d, &graph, cfg.sigma)?;
    let rel = if d_norm > 0.0 { d_norm } else { 1.0 };

    let mut b = DenseMatrix::zeros(p, n);
    let mut f = DenseMatrix::zeros(p, n);
    let mut y = DenseMatrix::zeros(p, n);
    let mut mu = params.mu0;
    let mut trace = Vec::new();
    let mut converged = false;

    for iteration in 1..=cfg.max_outer_iters {
        let inv_mu = 1.0 / mu;

        // B-step: singular value thresholding of M1 = D - F + Y/mu
        let m1 = DenseMatrix::from_fn(p, n, |i, j| d[(i, j)] - f[(i, j)] + inv_mu * y[(i, j)]);
        let (b_next, b_nuclear) = prox_nuclear_with_norm(&m1, inv_mu)?;
        b = b_next;

        // F-step: column-wise fused lasso prox of M2 = D - B + Y/mu
        let m2 = DenseMatrix::from_fn(p, n, |i, j| d[(i, j)] - b[(i, j)] + inv_mu * y[(i, j)]);
        let gfl = params.gfl_params(mu);
        foreground_step(&m2, &graph, &weights, gfl, &mut f)?;

        let r = DenseMatrix::from_fn(p, n, |i, j| d[(i, j)] - b[(i, j)] - f[(i, j)]);
        let objective = b_nuclear + params.lambda * gfl_norm(&f, &graph, &weights, params.rho);
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
            background_target: &m1,
            background: &b,
            coefficients: None,
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
        coefficients: None,
        trace,
        converged,
        lambda: params.lambda,
        training_rank: None,
    })
}
