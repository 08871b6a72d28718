//! Augmented-Lagrangian decomposition of frame stacks into a background and
//! a fused-lasso foreground.
//!
//! [`solve_uml`] splits `D = B + F` with a nuclear-norm background.
//! [`solve_sml`] splits the mixed frames `D2 = D1 S + F2` over a dictionary
//! of pure background frames `D1` with an ℓ1 penalty on the coefficients.

mod fista;
mod mask;
mod sml;
mod uml;

pub use fista::{fista_lasso, fista_lasso_warm, lasso_objective, lipschitz_bound};
pub use mask::{extract_mask, extract_masks};
pub use sml::{solve_sml, solve_sml_observed, SmlProblem};
pub use uml::{solve_uml, solve_uml_observed};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixkit::{spectral_norm, DenseMatrix};
use crate::prox::{gfl_penalty, prox_gfl, GflParams};
use crate::weights::{compute_weights, Connectivity, EdgeWeights, NeighborGraph};

/// Tuning and stopping parameters.
///
/// `lambda`, `mu0` and `mu_max` are resolved from the data when `None`:
/// `lambda = 1/sqrt(max(p, n))`, `mu0 = 1.25 / ||D||_2`, `mu_max = 1e7 * mu0`.
/// `sigma` is in normalized intensity units (pixels in `[0, 1]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lambda: Option<f64>,
    pub rho: f64,
    pub sigma: f64,
    pub mu0: Option<f64>,
    pub beta: f64,
    pub mu_max: Option<f64>,
    pub tol: f64,
    pub max_outer_iters: usize,
    pub fista_iters: usize,
    pub connectivity: Connectivity,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: None,
            rho: 1.0,
            sigma: 0.05,
            mu0: None,
            beta: 1.5,
            mu_max: None,
            tol: 1e-7,
            max_outer_iters: 100,
            fista_iters: 200,
            connectivity: Connectivity::Four,
        }
    }
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::invalid(format!(
            "{name} must be finite and nonnegative, got {v}"
        )));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::invalid(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.lambda {
            nonneg("lambda", l)?;
        }
        nonneg("rho", self.rho)?;
        nonneg("sigma", self.sigma)?;
        if let Some(mu0) = self.mu0 {
            positive("mu0", mu0)?;
        }
        if !self.beta.is_finite() || self.beta <= 1.0 {
            return Err(Error::invalid(format!(
                "beta must be greater than 1, got {}",
                self.beta
            )));
        }
        if let Some(mu_max) = self.mu_max {
            positive("mu_max", mu_max)?;
            if let Some(mu0) = self.mu0 {
                if mu_max <= mu0 {
                    return Err(Error::invalid(format!(
                        "mu_max ({mu_max}) must exceed mu0 ({mu0})"
                    )));
                }
            }
        }
        positive("tol", self.tol)?;
        if self.max_outer_iters == 0 {
            return Err(Error::invalid("max_outer_iters must be at least 1"));
        }
        Ok(())
    }

    /// Fills in the data-dependent defaults for an observation of size
    /// `pixels × frames` with spectral norm `spectral`.
    pub(crate) fn resolve(&self, pixels: usize, frames: usize, spectral: f64) -> Result<Resolved> {
        self.validate()?;
        let lambda = self
            .lambda
            .unwrap_or_else(|| 1.0 / (pixels.max(frames).max(1) as f64).sqrt());
        let mu0 = match self.mu0 {
            Some(v) => v,
            None if spectral > 0.0 => 1.25 / spectral,
            None => 1.25,
        };
        let mu_max = self.mu_max.unwrap_or(mu0 * 1e7);
        if mu_max <= mu0 {
            return Err(Error::invalid(format!(
                "mu_max ({mu_max}) must exceed mu0 ({mu0})"
            )));
        }
        Ok(Resolved {
            lambda,
            rho: self.rho,
            mu0,
            beta: self.beta,
            mu_max,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Resolved {
    pub lambda: f64,
    pub rho: f64,
    pub mu0: f64,
    pub beta: f64,
    pub mu_max: f64,
}

impl Resolved {
    pub fn gfl_params(&self, mu: f64) -> GflParams {
        GflParams {
            lam1: self.lambda / mu,
            lam2: self.lambda * self.rho / mu,
        }
    }

    pub fn next_mu(&self, mu: f64) -> f64 {
        (self.beta * mu).min(self.mu_max)
    }
}

/// One row of the convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Surrogate objective at the new iterate (`||B||_* + λ||F||_gfl`, or
    /// `||S||_1 + λ||F2||_gfl` for the supervised problem).
    pub objective: f64,
    /// Augmented Lagrangian at the new primal iterate and the old multiplier.
    pub lagrangian: f64,
    /// `||D - B - F||_F / ||D||_F`
    pub residual: f64,
    /// Penalty parameter used in this iteration.
    pub mu: f64,
}

#[derive(Debug, Clone)]
pub struct DecompositionResult {
    /// `B`, or `D1 S` for the supervised problem.
    pub background: DenseMatrix,
    /// `F`, or `F2`.
    pub foreground: DenseMatrix,
    pub dual: DenseMatrix,
    /// `S` (supervised problem only).
    pub coefficients: Option<DenseMatrix>,
    pub trace: Vec<TraceRecord>,
    pub converged: bool,
    /// Resolved foreground weight actually used.
    pub lambda: f64,
    /// Numerical rank of the training frames (supervised problem only).
    pub training_rank: Option<usize>,
}

impl DecompositionResult {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.trace.last().map(|r| r.residual)
    }
}

/// State exposed to an observer after each outer iteration.
pub struct IterationView<'a> {
    pub iteration: usize,
    pub mu: f64,
    pub params: GflParams,
    /// Target of the background step (`M1`, or `M` for the coefficient step).
    pub background_target: &'a DenseMatrix,
    pub background: &'a DenseMatrix,
    pub coefficients: Option<&'a DenseMatrix>,
    /// Target of the foreground step (`M2`).
    pub foreground_target: &'a DenseMatrix,
    pub foreground: &'a DenseMatrix,
    /// Multiplier after the update.
    pub dual: &'a DenseMatrix,
    pub record: TraceRecord,
}

/// Per-frame fusion weights computed from the observed frames.
pub(crate) fn frame_weights(
    d: &DenseMatrix,
    graph: &NeighborGraph,
    sigma: f64,
) -> Result<Vec<EdgeWeights>> {
    (0..d.cols())
        .into_par_iter()
        .map(|j| compute_weights(d.col(j), graph, sigma))
        .collect()
}

/// Column-wise fused-lasso prox of `target` into `out`.
pub(crate) fn foreground_step(
    target: &DenseMatrix,
    graph: &NeighborGraph,
    weights: &[EdgeWeights],
    params: GflParams,
    out: &mut DenseMatrix,
) -> Result<()> {
    let p = target.rows();
    out.as_mut_slice()
        .par_chunks_mut(p.max(1))
        .zip(weights.par_iter())
        .enumerate()
        .try_for_each(|(j, (dst, w))| {
            let f = prox_gfl(target.col(j), graph, w, params)?;
            dst.copy_from_slice(&f);
            Ok(())
        })
}

pub(crate) fn gfl_norm(
    f: &DenseMatrix,
    graph: &NeighborGraph,
    weights: &[EdgeWeights],
    rho: f64,
) -> f64 {
    (0..f.cols())
        .map(|j| gfl_penalty(f.col(j), graph, &weights[j], rho))
        .sum()
}

pub(crate) fn spectral(d: &DenseMatrix) -> Result<f64> {
    spectral_norm(d)
}

/// `<Y, R> + mu/2 ||R||²`
pub(crate) fn penalty_terms(y: &DenseMatrix, r: &DenseMatrix, mu: f64) -> f64 {
    let mut inner = 0.0;
    let mut sq = 0.0;
    for (&a, &b) in y.as_slice().iter().zip(r.as_slice()) {
        inner += a * b;
        sq += b * b;
    }
    inner + 0.5 * mu * sq
}
