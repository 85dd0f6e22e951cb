#ifndef CONEWAVE_H
#define CONEWAVE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CwStatus {
  CW_STATUS_OK = 0,
  CW_STATUS_NULL_POINTER = 1,
  CW_STATUS_INVALID_ARGUMENT = 2,
  CW_STATUS_NUMERICAL = 3,
  CW_STATUS_PANIC = 4,
} CwStatus;

typedef enum CwVerdict {
  CW_VERDICT_ADMISSIBLE = 0,
  CW_VERDICT_NOT_ADMISSIBLE = 1,
  CW_VERDICT_INCONCLUSIVE = 2,
} CwVerdict;

/**
 * Opaque operator handle.
 */
typedef struct CwOperator CwOperator;

typedef struct CwComplex {
  double re;
  double im;
} CwComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a scalar operator with constant coefficients `b`, `V₀`, `a₀` and
 * cross-section scale `c`.
 *
 * # Safety
 * `out` must be valid for writes. The handle is released with
 * [`cw_operator_free`].
 */
enum CwStatus cw_operator_new_scalar(uint32_t n,
                                     struct CwComplex b,
                                     struct CwComplex v0,
                                     struct CwComplex a0,
                                     double c,
                                     struct CwOperator **out);

/**
 * Creates the squared Dirac–Coulomb operator with charge `z`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum CwStatus cw_operator_new_dirac_coulomb(double z, struct CwOperator **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `op` must be null or a handle from one of the constructors, not yet freed.
 */
void cw_operator_free(struct CwOperator *op);

/**
 * Open interval of admissible weights `ℓ` at time `t0`.
 *
 * # Safety
 * `op` must be a live handle; `lower` and `upper` must be valid for writes.
 */
enum CwStatus cw_weight_window(const struct CwOperator *op,
                               double t0,
                               double *lower,
                               double *upper);

/**
 * Indicial roots of mode `j`; `plus` has the larger real part.
 *
 * # Safety
 * `op` must be a live scalar handle; `plus` and `minus` must be valid for writes.
 */
enum CwStatus cw_indicial_roots(const struct CwOperator *op,
                                double t0,
                                uint32_t j,
                                struct CwComplex *plus,
                                struct CwComplex *minus);

/**
 * Writes whether no indicial root lies on the line of weight `ell`.
 *
 * # Safety
 * `op` must be a live handle; `out` must be valid for writes.
 */
enum CwStatus cw_is_non_indicial(const struct CwOperator *op, double t0, double ell, bool *out);

/**
 * Incoming and outgoing radial-set thresholds.
 *
 * # Safety
 * `op` must be a live handle; `theta_in` and `theta_out` must be valid for writes.
 */
enum CwStatus cw_thresholds(const struct CwOperator *op,
                            double t0,
                            double *theta_in,
                            double *theta_out);

/**
 * `min over κ ≠ 0` of `|½ − √(κ² − Z²)|`.
 */
double cw_dirac_coulomb_gap(double z);

/**
 * Spectral admissibility scan over modes `0..=j_max` and `samples`
 * frequencies on the closed upper half circle. `min_measure` receives the
 * smallest scattering measure, or infinity when no mode was examined.
 *
 * # Safety
 * `op` must be a live scalar handle; `verdict` and `min_measure` must be
 * valid for writes.
 */
enum CwStatus cw_admissibility_scan(const struct CwOperator *op,
                                    double t0,
                                    double ell,
                                    uint32_t j_max,
                                    size_t samples,
                                    enum CwVerdict *verdict,
                                    double *min_measure);

/**
 * `J_ν(z)` and its derivative.
 *
 * # Safety
 * `value` and `deriv` must be valid for writes.
 */
enum CwStatus cw_bessel_j(struct CwComplex nu,
                          struct CwComplex z,
                          struct CwComplex *value,
                          struct CwComplex *deriv);

/**
 * `H⁽¹⁾_ν(z)` and its derivative.
 *
 * # Safety
 * `value` and `deriv` must be valid for writes.
 */
enum CwStatus cw_hankel1(struct CwComplex nu,
                         struct CwComplex z,
                         struct CwComplex *value,
                         struct CwComplex *deriv);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`) and returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes of writes.
 */
size_t cw_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cw_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONEWAVE_H */
