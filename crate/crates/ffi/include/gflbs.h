#ifndef GFLBS_H
#define GFLBS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum GflbsStatus {
  GFLBS_STATUS_OK = 0,
  GFLBS_STATUS_NULL_POINTER = 1,
  GFLBS_STATUS_INVALID_ARGUMENT = 2,
  GFLBS_STATUS_SHAPE_MISMATCH = 3,
  GFLBS_STATUS_NON_FINITE = 4,
  GFLBS_STATUS_NUMERICAL = 5,
  GFLBS_STATUS_BUFFER_TOO_SMALL = 6,
  GFLBS_STATUS_INTERNAL = 99,
} GflbsStatus;

/**
 * Solver settings; starts from the library defaults.
 */
typedef struct GflbsConfig GflbsConfig;

/**
 * Dense column-major matrix.
 */
typedef struct GflbsMatrix GflbsMatrix;

/**
 * Output of a decomposition.
 */
typedef struct GflbsResult GflbsResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if it succeeded.
 * The pointer stays valid until the next `gflbs_*` call on the same thread.
 */
const char *gflbs_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gflbs_version(void);

/**
 * Copies `rows * cols` column-major values into a new matrix.
 *
 * # Safety
 * `data` must point to `rows * cols` readable doubles; `out` must be writable.
 */
enum GflbsStatus gflbs_matrix_new(size_t rows,
                                  size_t cols,
                                  const double *data,
                                  struct GflbsMatrix **out);

/**
 * # Safety
 * `m` must be null or a live matrix handle.
 */
size_t gflbs_matrix_rows(const struct GflbsMatrix *m);

/**
 * # Safety
 * `m` must be null or a live matrix handle.
 */
size_t gflbs_matrix_cols(const struct GflbsMatrix *m);

/**
 * Copies the column-major contents into `buf` (capacity `len`).
 *
 * # Safety
 * `m` must be a live matrix handle and `buf` must hold `len` writable doubles.
 */
enum GflbsStatus gflbs_matrix_copy(const struct GflbsMatrix *m, double *buf, size_t len);

/**
 * # Safety
 * `m` must be null or a handle from `gflbs_matrix_new` not yet freed.
 */
void gflbs_matrix_free(struct GflbsMatrix *m);

/**
 * New configuration with default settings; never fails.
 */
struct GflbsConfig *gflbs_config_new(void);

/**
 * # Safety
 * `c` must be null or a handle from `gflbs_config_new` not yet freed.
 */
void gflbs_config_free(struct GflbsConfig *c);

/**
 * Sparsity weight; a non-positive value restores the data-dependent default.
 *
 * # Safety
 * `c` must be a live configuration handle.
 */
enum GflbsStatus gflbs_config_set_lambda(struct GflbsConfig *c, double v);

/**
 * Relative weight of the fusion term.
 *
 * # Safety
 * `c` must be a live configuration handle.
 */
enum GflbsStatus gflbs_config_set_rho(struct GflbsConfig *c, double v);

/**
 * Intensity scale of the fusion weights (pixels in `[0, 1]`).
 *
 * # Safety
 * `c` must be a live configuration handle.
 */
enum GflbsStatus gflbs_config_set_sigma(struct GflbsConfig *c, double v);

/**
 * Penalty growth factor, greater than 1.
 *
 * # Safety
 * `c` must be a live configuration handle.
 */
enum GflbsStatus gflbs_config_set_beta(struct GflbsConfig *c, double v);

/**
 * Stopping tolerance on the relative residual.
 *
 * # Safety
 * `c` must be a live configuration handle.
 */
enum GflbsStatus gflbs_config_set_tol(struct GflbsConfig *c, double v);

/**
 * Outer iteration limit.
 *
 * # Safety
 * `c` must be a live configuration handle.
 */
enum GflbsStatus gflbs_config_set_max_iters(struct GflbsConfig *c, size_t v);

/**
 * Inner iterations of the coefficient step.
 *
 * # Safety
 * `c` must be a live configuration handle.
 */
enum GflbsStatus gflbs_config_set_fista_iters(struct GflbsConfig *c, size_t v);

/**
 * Pixel neighborhood, 4 or 8.
 *
 * # Safety
 * `c` must be a live configuration handle.
 */
enum GflbsStatus gflbs_config_set_connectivity(struct GflbsConfig *c, uint32_t v);

/**
 * Low-rank plus fused-sparse split of `d` (`width * height` rows).
 * A run that hits the iteration limit still succeeds; check
 * [`gflbs_result_converged`].
 *
 * # Safety
 * `d` and `config` must be live handles (`config` may be null for defaults);
 * `out` must be writable.
 */
enum GflbsStatus gflbs_solve_uml(const struct GflbsMatrix *d,
                                 size_t width,
                                 size_t height,
                                 const struct GflbsConfig *config,
                                 struct GflbsResult **out);

/**
 * Split of the mixed frames `d2` over the background frames `d1`.
 *
 * # Safety
 * As for [`gflbs_solve_uml`].
 */
enum GflbsStatus gflbs_solve_sml(const struct GflbsMatrix *d1,
                                 const struct GflbsMatrix *d2,
                                 size_t width,
                                 size_t height,
                                 const struct GflbsConfig *config,
                                 struct GflbsResult **out);

/**
 * # Safety
 * `r` must be null or a live result handle.
 */
bool gflbs_result_converged(const struct GflbsResult *r);

/**
 * Number of outer iterations performed.
 *
 * # Safety
 * `r` must be null or a live result handle.
 */
size_t gflbs_result_iterations(const struct GflbsResult *r);

/**
 * Sparsity weight actually used (after resolving the default).
 *
 * # Safety
 * `r` must be null or a live result handle.
 */
double gflbs_result_lambda(const struct GflbsResult *r);

/**
 * Copies the background (`B`, or `D1 S`) into `buf`.
 *
 * # Safety
 * `r` must be a live result handle and `buf` must hold `len` writable doubles.
 */
enum GflbsStatus gflbs_result_background(const struct GflbsResult *r, double *buf, size_t len);

/**
 * Copies the foreground into `buf`.
 *
 * # Safety
 * As for [`gflbs_result_background`].
 */
enum GflbsStatus gflbs_result_foreground(const struct GflbsResult *r, double *buf, size_t len);

/**
 * One trace record: objective, relative residual and penalty of
 * iteration `index` (0-based).
 *
 * # Safety
 * `r` must be a live result handle; the output pointers may be null.
 */
enum GflbsStatus gflbs_result_trace(const struct GflbsResult *r,
                                    size_t index,
                                    double *objective,
                                    double *residual,
                                    double *mu);

/**
 * # Safety
 * `r` must be null or a handle from a `gflbs_solve_*` call not yet freed.
 */
void gflbs_result_free(struct GflbsResult *r);

/**
 * Weighted total-variation prox on an arbitrary graph:
 * `argmin_f 1/2 ||f - m||² + lam2 sum_e w_e |f[a_e] - f[b_e]|`.
 * Edge `e` joins `edges[2e]` and `edges[2e + 1]`.
 *
 * # Safety
 * `m` and `out` must hold `n` doubles, `edges` `2 * n_edges` indices and
 * `weights` `n_edges` doubles.
 */
enum GflbsStatus gflbs_tv_prox(const double *m,
                               size_t n,
                               const size_t *edges,
                               const double *weights,
                               size_t n_edges,
                               double lam2,
                               double *out);

/**
 * Number of lattice edges of a `width × height` frame (connectivity 4 or
 * 8), or 0 for invalid arguments. Edge order matches the weights expected
 * by [`gflbs_prox_gfl`].
 */
size_t gflbs_grid_edge_count(size_t width, size_t height, uint32_t connectivity);

/**
 * Writes the lattice edges as index pairs into `edges` (capacity
 * `2 * max_edges`).
 *
 * # Safety
 * `edges` must hold `2 * max_edges` writable indices.
 */
enum GflbsStatus gflbs_grid_edges(size_t width,
                                  size_t height,
                                  uint32_t connectivity,
                                  size_t *edges,
                                  size_t max_edges);

/**
 * Fused-lasso prox of one frame on its pixel lattice:
 * `argmin_f 1/2 ||f - m||² + lam1 ||f||_1 + lam2 sum_e w_e |f_a - f_b|`.
 *
 * # Safety
 * `m` and `out` must hold `width * height` doubles and `weights`
 * `n_weights` doubles, where `n_weights` equals [`gflbs_grid_edge_count`].
 */
enum GflbsStatus gflbs_prox_gfl(const double *m,
                                size_t width,
                                size_t height,
                                uint32_t connectivity,
                                const double *weights,
                                size_t n_weights,
                                double lam1,
                                double lam2,
                                double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GFLBS_H */
