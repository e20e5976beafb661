#ifndef WOLFFKIT_H
#define WOLFFKIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum WkStatus {
  WK_STATUS_OK = 0,
  WK_STATUS_NULL_POINTER = 1,
  WK_STATUS_INVALID_UTF8 = 2,
  WK_STATUS_PARSE = 3,
  WK_STATUS_VALIDATION = 4,
  WK_STATUS_REGIME = 5,
  WK_STATUS_CONFIG = 6,
  WK_STATUS_NON_CONVERGENCE = 7,
  WK_STATUS_DIVERGENCE = 8,
  WK_STATUS_UNSUPPORTED = 9,
  WK_STATUS_PANIC = 10,
} WkStatus;

/**
 * Opaque nonnegative measure.
 */
typedef struct WkMeasure WkMeasure;

/**
 * Opaque exponent bundle.
 */
typedef struct WkParams WkParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null.
 */
const char *wk_last_error(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` is null or a pointer obtained from this library, not yet freed.
 */
void wk_string_free(char *s);

/**
 * Quasilinear exponents `(n, alpha, p, q)`.
 *
 * # Safety
 * `out` is a valid pointer to writable storage.
 */
enum WkStatus wk_params_new(size_t n, double alpha, double p, double q, struct WkParams **out);

/**
 * Exponents from `n=3,p=2,q=5` or `n=5,k=1,q=5`.
 *
 * # Safety
 * `descr` is a NUL-terminated string; `out` is writable.
 */
enum WkStatus wk_params_parse(const char *descr, struct WkParams **out);

/**
 * # Safety
 * `p` is null or a handle from `wk_params_new`/`wk_params_parse`.
 */
void wk_params_free(struct WkParams *p);

/**
 * Measure from its JSON form; `n = 0` infers the dimension.
 *
 * # Safety
 * `json` is a NUL-terminated string; `out` is writable.
 */
enum WkStatus wk_measure_from_json(const char *json, size_t n, struct WkMeasure **out);

/**
 * # Safety
 * `m` is null or a handle from `wk_measure_from_json`.
 */
void wk_measure_free(struct WkMeasure *m);

/**
 * # Safety
 * `m` is a live measure handle; `out` is writable.
 */
enum WkStatus wk_measure_total_mass(const struct WkMeasure *m, double *out);

/**
 * `W^r_{alpha,p} mu(x)`; `r` may be `INFINITY` and the result may be `INFINITY`.
 *
 * # Safety
 * Handles are live; `x` points to `len` reals; `out` is writable.
 */
enum WkStatus wk_wolff_truncated(const struct WkMeasure *m,
                                 const struct WkParams *params,
                                 const double *x,
                                 size_t len,
                                 double r,
                                 double *out);

/**
 * `I^r_{alpha p} mu(x)`.
 *
 * # Safety
 * Handles are live; `x` points to `len` reals; `out` is writable.
 */
enum WkStatus wk_riesz_truncated(const struct WkMeasure *m,
                                 const struct WkParams *params,
                                 const double *x,
                                 size_t len,
                                 double r,
                                 double *out);

/**
 * Dyadic Wolff potential over generations `g_min..=g_max`.
 *
 * # Safety
 * Handles are live; `x` points to `len` reals; `out` is writable.
 */
enum WkStatus wk_dyadic_wolff(const struct WkMeasure *m,
                              const struct WkParams *params,
                              const double *x,
                              size_t len,
                              int32_t g_min,
                              int32_t g_max,
                              double *out);

/**
 * `c(p) = max{1, 2^{p'-2}}`.
 */
double wk_cp(double p);

/**
 * Closed-form `eps` and `x0` of the Picard scheme for the constant `c`.
 *
 * # Safety
 * `params` is live; `eps` and `x0` are writable.
 */
enum WkStatus wk_iteration_constants(const struct WkParams *params,
                                     double c,
                                     double *eps,
                                     double *x0);

/**
 * Best constant of the iterated pointwise condition over `count` points
 * stored contiguously in `xs`.
 *
 * # Safety
 * Handles are live; `xs` holds `count * n` reals; `out` is writable.
 */
enum WkStatus wk_pointwise_condition(const struct WkMeasure *m,
                                     const struct WkParams *params,
                                     const double *xs,
                                     size_t count,
                                     double r,
                                     double *out);

/**
 * Closed-form radial solution `c |x|^exponent` of `-Δ_p u = u^q`.
 *
 * # Safety
 * `params` is live; `c` and `exponent` are writable.
 */
enum WkStatus wk_radial_plap_solution(const struct WkParams *params, double *c, double *exponent);

/**
 * Picard solve of `u = W(u^q) + eps f` for a grid function given as JSON;
 * writes the solution and certificate as a JSON string.
 *
 * # Safety
 * `f_json` is a NUL-terminated string; `params` is live; `out` is writable.
 */
enum WkStatus wk_solve(const char *f_json,
                       const struct WkParams *params,
                       int32_t g_min,
                       int32_t g_max,
                       char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WOLFFKIT_H */
