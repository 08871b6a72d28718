//! C interface to `gflbs`.
//!
//! All objects are opaque handles created by `gflbs_*_new`/`gflbs_solve_*`
//! and released with the matching `gflbs_*_free`. Functions return a
//! [`GflbsStatus`]; on failure a description is available from
//! [`gflbs_last_error`] on the same thread. Matrices are column-major with
//! one vectorized frame per column, pixels in row-major order.
//!
//! No function unwinds into the caller: panics are caught and reported as
//! [`GflbsStatus::Internal`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gflbs::graphflow::tv_prox;
use gflbs::weights::build_neighborhood_with;
use gflbs::{
    prox_gfl, solve_sml, solve_uml, Connectivity, DecompositionResult, DenseMatrix, EdgeWeights,
    Error, GflParams, ObservationMatrix, SmlProblem, SolverConfig,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GflbsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    NonFinite = 4,
    Numerical = 5,
    BufferTooSmall = 6,
    Internal = 99,
}

/// Dense column-major matrix.
pub struct GflbsMatrix(DenseMatrix);

/// Solver settings; starts from the library defaults.
pub struct GflbsConfig(SolverConfig);

/// Output of a decomposition.
pub struct GflbsResult(DecompositionResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(GflbsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidArgument(_) => GflbsStatus::InvalidArgument,
            Error::ShapeMismatch { .. } => GflbsStatus::ShapeMismatch,
            Error::NonFinite(_) => GflbsStatus::NonFinite,
            Error::SvdNoConvergence { .. } => GflbsStatus::Numerical,
            _ => GflbsStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(GflbsStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(GflbsStatus::InvalidArgument, msg.into())
}

/// Runs `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> GflbsStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => GflbsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal error: {msg}"));
            GflbsStatus::Internal
        }
    }
}

unsafe fn input<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn output<'a>(data: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(data, len))
}

unsafe fn handle<'a, T>(h: *const T, what: &str) -> Result<&'a T, Failure> {
    h.as_ref().ok_or_else(|| null(what))
}

unsafe fn handle_mut<'a, T>(h: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    h.as_mut().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message of the last failed call on this thread, or null if it succeeded.
/// The pointer stays valid until the next `gflbs_*` call on the same thread.
#[no_mangle]
pub extern "C" fn gflbs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gflbs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---------------------------------------------------------------------------
// Matrices

/// Copies `rows * cols` column-major values into a new matrix.
///
/// # Safety
/// `data` must point to `rows * cols` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gflbs_matrix_new(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut GflbsMatrix,
) -> GflbsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| invalid("rows * cols overflows"))?;
        let values = input(data, len, "data")?.to_vec();
        let m = DenseMatrix::from_col_major(rows, cols, values)?;
        store(out, GflbsMatrix(m));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn gflbs_matrix_rows(m: *const GflbsMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.rows())
}

/// # Safety
/// `m` must be null or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn gflbs_matrix_cols(m: *const GflbsMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.cols())
}

fn copy_out(src: &DenseMatrix, dst: &mut [f64]) -> Result<(), Failure> {
    let n = src.as_slice().len();
    if dst.len() < n {
        return Err(Failure(
            GflbsStatus::BufferTooSmall,
            format!("buffer holds {} values, {n} needed", dst.len()),
        ));
    }
    dst[..n].copy_from_slice(src.as_slice());
    Ok(())
}

/// Copies the column-major contents into `buf` (capacity `len`).
///
/// # Safety
/// `m` must be a live matrix handle and `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gflbs_matrix_copy(
    m: *const GflbsMatrix,
    buf: *mut f64,
    len: usize,
) -> GflbsStatus {
    guard(|| {
        let m = handle(m, "matrix")?;
        copy_out(&m.0, output(buf, len, "buf")?)
    })
}

/// # Safety
/// `m` must be null or a handle from `gflbs_matrix_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gflbs_matrix_free(m: *mut GflbsMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

// ---------------------------------------------------------------------------
// Configuration

/// New configuration with default settings; never fails.
#[no_mangle]
pub extern "C" fn gflbs_config_new() -> *mut GflbsConfig {
    Box::into_raw(Box::new(GflbsConfig(SolverConfig::default())))
}

/// # Safety
/// `c` must be null or a handle from `gflbs_config_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gflbs_config_free(c: *mut GflbsConfig) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Applies `apply` to the configuration, rolling back if the result is invalid.
unsafe fn update_config(
    c: *mut GflbsConfig,
    apply: impl FnOnce(&mut SolverConfig) -> Result<(), Failure>,
) -> GflbsStatus {
    guard(|| {
        let cfg = &mut handle_mut(c, "config")?.0;
        let mut next = cfg.clone();
        apply(&mut next)?;
        next.validate()?;
        *cfg = next;
        Ok(())
    })
}

/// Sparsity weight; a non-positive value restores the data-dependent default.
///
/// # Safety
/// `c` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn gflbs_config_set_lambda(c: *mut GflbsConfig, v: f64) -> GflbsStatus {
    update_config(c, |cfg| {
        cfg.lambda = (v > 0.0).then_some(v);
        Ok(())
    })
}

/// Relative weight of the fusion term.
///
/// # Safety
/// `c` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn gflbs_config_set_rho(c: *mut GflbsConfig, v: f64) -> GflbsStatus {
    update_config(c, |cfg| {
        cfg.rho = v;
        Ok(())
    })
}

/// Intensity scale of the fusion weights (pixels in `[0, 1]`).
///
/// # Safety
/// `c` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn gflbs_config_set_sigma(c: *mut GflbsConfig, v: f64) -> GflbsStatus {
    update_config(c, |cfg| {
        cfg.sigma = v;
        Ok(())
    })
}

/// Penalty growth factor, greater than 1.
///
/// # Safety
/// `c` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn gflbs_config_set_beta(c: *mut GflbsConfig, v: f64) -> GflbsStatus {
    update_config(c, |cfg| {
        cfg.beta = v;
        Ok(())
    })
}

/// Stopping tolerance on the relative residual.
///
/// # Safety
/// `c` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn gflbs_config_set_tol(c: *mut GflbsConfig, v: f64) -> GflbsStatus {
    update_config(c, |cfg| {
        cfg.tol = v;
        Ok(())
    })
}

/// Outer iteration limit.
///
/// # Safety
/// `c` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn gflbs_config_set_max_iters(c: *mut GflbsConfig, v: usize) -> GflbsStatus {
    update_config(c, |cfg| {
        cfg.max_outer_iters = v;
        Ok(())
    })
}

/// Inner iterations of the coefficient step.
///
/// # Safety
/// `c` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn gflbs_config_set_fista_iters(
    c: *mut GflbsConfig,
    v: usize,
) -> GflbsStatus {
    update_config(c, |cfg| {
        cfg.fista_iters = v;
        Ok(())
    })
}

/// Pixel neighborhood, 4 or 8.
///
/// # Safety
/// `c` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn gflbs_config_set_connectivity(c: *mut GflbsConfig, v: u32) -> GflbsStatus {
    update_config(c, |cfg| {
        cfg.connectivity = Connectivity::from_count(v)?;
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Solvers

unsafe fn observation(
    m: *const GflbsMatrix,
    width: usize,
    height: usize,
    what: &str,
) -> Result<ObservationMatrix, Failure> {
    let m = handle(m, what)?;
    Ok(ObservationMatrix::new(m.0.clone(), width, height)?)
}

/// Low-rank plus fused-sparse split of `d` (`width * height` rows).
/// A run that hits the iteration limit still succeeds; check
/// [`gflbs_result_converged`].
///
/// # Safety
/// `d` and `config` must be live handles (`config` may be null for defaults);
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gflbs_solve_uml(
    d: *const GflbsMatrix,
    width: usize,
    height: usize,
    config: *const GflbsConfig,
    out: *mut *mut GflbsResult,
) -> GflbsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let obs = observation(d, width, height, "d")?;
        let default = SolverConfig::default();
        let cfg = config.as_ref().map_or(&default, |c| &c.0);
        store(out, GflbsResult(solve_uml(&obs, cfg)?));
        Ok(())
    })
}

/// Split of the mixed frames `d2` over the background frames `d1`.
///
/// # Safety
/// As for [`gflbs_solve_uml`].
#[no_mangle]
pub unsafe extern "C" fn gflbs_solve_sml(
    d1: *const GflbsMatrix,
    d2: *const GflbsMatrix,
    width: usize,
    height: usize,
    config: *const GflbsConfig,
    out: *mut *mut GflbsResult,
) -> GflbsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let prob = SmlProblem::new(
            observation(d1, width, height, "d1")?,
            observation(d2, width, height, "d2")?,
        )?;
        let default = SolverConfig::default();
        let cfg = config.as_ref().map_or(&default, |c| &c.0);
        store(out, GflbsResult(solve_sml(&prob, cfg)?));
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn gflbs_result_converged(r: *const GflbsResult) -> bool {
    r.as_ref().is_some_and(|r| r.0.converged)
}

/// Number of outer iterations performed.
///
/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn gflbs_result_iterations(r: *const GflbsResult) -> usize {
    r.as_ref().map_or(0, |r| r.0.iterations())
}

/// Sparsity weight actually used (after resolving the default).
///
/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn gflbs_result_lambda(r: *const GflbsResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.lambda)
}

/// Copies the background (`B`, or `D1 S`) into `buf`.
///
/// # Safety
/// `r` must be a live result handle and `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gflbs_result_background(
    r: *const GflbsResult,
    buf: *mut f64,
    len: usize,
) -> GflbsStatus {
    guard(|| copy_out(&handle(r, "result")?.0.background, output(buf, len, "buf")?))
}

/// Copies the foreground into `buf`.
///
/// # Safety
/// As for [`gflbs_result_background`].
#[no_mangle]
pub unsafe extern "C" fn gflbs_result_foreground(
    r: *const GflbsResult,
    buf: *mut f64,
    len: usize,
) -> GflbsStatus {
    guard(|| copy_out(&handle(r, "result")?.0.foreground, output(buf, len, "buf")?))
}

/// One trace record: objective, relative residual and penalty of
/// iteration `index` (0-based).
///
/// # Safety
/// `r` must be a live result handle; the output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn gflbs_result_trace(
    r: *const GflbsResult,
    index: usize,
    objective: *mut f64,
    residual: *mut f64,
    mu: *mut f64,
) -> GflbsStatus {
    guard(|| {
        let r = handle(r, "result")?;
        let rec = r.0.trace.get(index).ok_or_else(|| {
            invalid(format!(
                "trace index {index} out of range ({} records)",
                r.0.trace.len()
            ))
        })?;
        for (p, v) in [
            (objective, rec.objective),
            (residual, rec.residual),
            (mu, rec.mu),
        ] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a handle from a `gflbs_solve_*` call not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gflbs_result_free(r: *mut GflbsResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

// ---------------------------------------------------------------------------
// Proximal operators

/// Weighted total-variation prox on an arbitrary graph:
/// `argmin_f 1/2 ||f - m||² + lam2 sum_e w_e |f[a_e] - f[b_e]|`.
/// Edge `e` joins `edges[2e]` and `edges[2e + 1]`.
///
/// # Safety
/// `m` and `out` must hold `n` doubles, `edges` `2 * n_edges` indices and
/// `weights` `n_edges` doubles.
#[no_mangle]
pub unsafe extern "C" fn gflbs_tv_prox(
    m: *const f64,
    n: usize,
    edges: *const usize,
    weights: *const f64,
    n_edges: usize,
    lam2: f64,
    out: *mut f64,
) -> GflbsStatus {
    guard(|| {
        let m = input(m, n, "m")?;
        let w = input(weights, n_edges, "weights")?;
        let pairs: Vec<(usize, usize)> = if n_edges == 0 {
            Vec::new()
        } else if edges.is_null() {
            return Err(null("edges"));
        } else {
            std::slice::from_raw_parts(edges, 2 * n_edges)
                .chunks_exact(2)
                .map(|e| (e[0], e[1]))
                .collect()
        };
        let out = output(out, n, "out")?;
        out.copy_from_slice(&tv_prox(m, &pairs, w, lam2)?);
        Ok(())
    })
}

/// Number of lattice edges of a `width × height` frame (connectivity 4 or
/// 8), or 0 for invalid arguments. Edge order matches the weights expected
/// by [`gflbs_prox_gfl`].
#[no_mangle]
pub extern "C" fn gflbs_grid_edge_count(width: usize, height: usize, connectivity: u32) -> usize {
    Connectivity::from_count(connectivity)
        .and_then(|c| build_neighborhood_with(width, height, c))
        .map_or(0, |g| g.edge_count())
}

/// Writes the lattice edges as index pairs into `edges` (capacity
/// `2 * max_edges`).
///
/// # Safety
/// `edges` must hold `2 * max_edges` writable indices.
#[no_mangle]
pub unsafe extern "C" fn gflbs_grid_edges(
    width: usize,
    height: usize,
    connectivity: u32,
    edges: *mut usize,
    max_edges: usize,
) -> GflbsStatus {
    guard(|| {
        let g = build_neighborhood_with(width, height, Connectivity::from_count(connectivity)?)?;
        if max_edges < g.edge_count() {
            return Err(Failure(
                GflbsStatus::BufferTooSmall,
                format!("room for {max_edges} edges, {} needed", g.edge_count()),
            ));
        }
        if g.edge_count() == 0 {
            return Ok(());
        }
        if edges.is_null() {
            return Err(null("edges"));
        }
        let dst = std::slice::from_raw_parts_mut(edges, 2 * g.edge_count());
        for (slot, &(a, b)) in dst.chunks_exact_mut(2).zip(g.edges()) {
            slot[0] = a;
            slot[1] = b;
        }
        Ok(())
    })
}

/// Fused-lasso prox of one frame on its pixel lattice:
/// `argmin_f 1/2 ||f - m||² + lam1 ||f||_1 + lam2 sum_e w_e |f_a - f_b|`.
///
/// # Safety
/// `m` and `out` must hold `width * height` doubles and `weights`
/// `n_weights` doubles, where `n_weights` equals [`gflbs_grid_edge_count`].
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn gflbs_prox_gfl(
    m: *const f64,
    width: usize,
    height: usize,
    connectivity: u32,
    weights: *const f64,
    n_weights: usize,
    lam1: f64,
    lam2: f64,
    out: *mut f64,
) -> GflbsStatus {
    guard(|| {
        let g = build_neighborhood_with(width, height, Connectivity::from_count(connectivity)?)?;
        if n_weights != g.edge_count() {
            return Err(Failure(
                GflbsStatus::ShapeMismatch,
                format!("{n_weights} weights for {} edges", g.edge_count()),
            ));
        }
        let n = g.node_count();
        let m = input(m, n, "m")?;
        let w = EdgeWeights(input(weights, n_weights, "weights")?.to_vec());
        let f = prox_gfl(m, &g, &w, GflParams::new(lam1, lam2)?)?;
        output(out, n, "out")?.copy_from_slice(&f);
        Ok(())
    })
}
