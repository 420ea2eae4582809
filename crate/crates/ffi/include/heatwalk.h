#ifndef HEATWALK_H
#define HEATWALK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HwStatus {
  HW_STATUS_OK = 0,
  HW_STATUS_NULL_POINTER = 1,
  HW_STATUS_INVALID_PARAMETER = 2,
  HW_STATUS_TIME_OUT_OF_RANGE = 3,
  HW_STATUS_CONFIG = 4,
  HW_STATUS_IO = 5,
  HW_STATUS_WINDOW_TOO_SMALL = 6,
  /**
   * Quadrature tolerance, series convergence or divergent tail norm.
   */
  HW_STATUS_NUMERICAL = 7,
  HW_STATUS_INVALID_UTF8 = 8,
  HW_STATUS_PANIC = 99,
} HwStatus;

/**
 * Opaque q-table.
 */
typedef struct HwQTable HwQTable;

/**
 * Opaque terminal condition.
 */
typedef struct HwTerminal HwTerminal;

/**
 * One error decomposition; `closes` is 1 when `|residual| <= tolerance`.
 */
typedef struct HwErrorReport {
  size_t n_theta;
  double total;
  double adj;
  double loc;
  double loc_uncertainty;
  double glob;
  double glob_uncertainty;
  double residual;
  double tolerance;
  int32_t closes;
} HwErrorReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. Valid until the next call
 * on the same thread.
 */
const char *hw_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hw_version(void);

/**
 * Looks up a built-in terminal condition by name.
 *
 * # Safety
 * `name` must be a NUL-terminated string; out-pointers must be writable.
 */
enum HwStatus hw_terminal_catalog(const char *name, struct HwTerminal **out_handle);

/**
 * Parses a terminal condition from TOML text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; out-pointers must be writable.
 */
enum HwStatus hw_terminal_from_toml(const char *text, struct HwTerminal **out_handle);

/**
 * Loads a terminal condition from a `.toml` or `.json` file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; out-pointers must be writable.
 */
enum HwStatus hw_terminal_load(const char *path, struct HwTerminal **out_handle);

/**
 * # Safety
 * `g` must come from one of the `hw_terminal_*` constructors and not be freed yet; null is a
 * no-op.
 */
void hw_terminal_free(struct HwTerminal *g);

/**
 * `g(x)`.
 *
 * # Safety
 * `g` must be a live handle; out-pointers must be writable.
 */
enum HwStatus hw_terminal_eval(const struct HwTerminal *g, double x, double *out_value);

/**
 * Exact solution `u(t, x)` of the backward heat equation with terminal condition `g` at `T`.
 *
 * # Safety
 * `g` must be a live handle; out-pointers must be writable.
 */
enum HwStatus hw_u_exact(const struct HwTerminal *g,
                         double t,
                         double x,
                         double horizon,
                         double sigma,
                         double *out_value);

/**
 * Scheme value `u^n(t, x)` from the closed binomial sum.
 *
 * # Safety
 * `g` must be a live handle; out-pointers must be writable.
 */
enum HwStatus hw_un_binomial(const struct HwTerminal *g,
                             double t,
                             double x,
                             size_t n,
                             double horizon,
                             double sigma,
                             double *out_value);

/**
 * Scheme value `u^n(t, x)` from the backward recursion.
 *
 * # Safety
 * `g` must be a live handle; out-pointers must be writable.
 */
enum HwStatus hw_un_recursion(const struct HwTerminal *g,
                              double t,
                              double x,
                              size_t n,
                              double horizon,
                              double sigma,
                              double *out_value);

/**
 * `u^n(t, x) - u(t, x)`.
 *
 * # Safety
 * `g` must be a live handle; out-pointers must be writable.
 */
enum HwStatus hw_total_error(const struct HwTerminal *g,
                             double t,
                             double x,
                             size_t n,
                             double horizon,
                             double sigma,
                             double *out_value);

/**
 * Simulates a q-table on `[0, max(h, 8 sigma sqrt theta)]` at pitch `h/8`.
 *
 * # Safety
 * Out-pointers must be writable.
 */
enum HwStatus hw_qtable_build(double h,
                              double theta,
                              double sigma,
                              size_t paths,
                              size_t steps,
                              uint64_t seed,
                              struct HwQTable **out_handle);

/**
 * Loads a q-table saved by the CLI (`bridge --qtable-out`).
 *
 * # Safety
 * `path` must be a NUL-terminated string; out-pointers must be writable.
 */
enum HwStatus hw_qtable_load(const char *path, struct HwQTable **out_handle);

/**
 * Interpolated `q(y)`.
 *
 * # Safety
 * `qt` must be a live handle; out-pointers must be writable.
 */
enum HwStatus hw_qtable_q(const struct HwQTable *qt, double y, double *out_value);

/**
 * # Safety
 * `qt` must come from `hw_qtable_build` or `hw_qtable_load` and not be freed yet; null is a
 * no-op.
 */
void hw_qtable_free(struct HwQTable *qt);

/**
 * Splits `u^n(t, x) - u(t, x)` into adjustment, local and global parts. `qt` may be null, in
 * which case a table is simulated with `q_paths` bridges per grid point.
 *
 * # Safety
 * `g` must be a live handle, `qt` null or a live handle, `out_report` writable.
 */
enum HwStatus hw_decompose(const struct HwTerminal *g,
                           double t,
                           double x,
                           size_t n,
                           double horizon,
                           double sigma,
                           size_t paths,
                           uint64_t seed,
                           size_t q_paths,
                           const struct HwQTable *qt,
                           struct HwErrorReport *out_report);

/**
 * Fills `buf[0..len]` with exit times of `(-1, 1)` by a standard Brownian motion.
 *
 * # Safety
 * `buf` must point to `len` writable doubles (may be null when `len == 0`).
 */
enum HwStatus hw_sample_exit_times(uint64_t seed, uint64_t stream, double *buf, size_t len);

/**
 * Upper and lower tail bounds for `J` at `n_theta (1 +- delta)`.
 *
 * # Safety
 * `upper` and `lower` must be writable.
 */
enum HwStatus hw_tail_bound(double delta, size_t n_theta, double *upper, double *lower);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEATWALK_H */
