#ifndef CIRCMODE_H
#define CIRCMODE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  CM_METHOD_EXCESS_MASS = 0,
  CM_METHOD_WATSON_U2 = 1,
} CmMethod;

typedef enum {
  CM_STATUS_OK = 0,
  CM_STATUS_NULL_POINTER = 1,
  CM_STATUS_INVALID_ARGUMENT = 2,
  CM_STATUS_INVALID_K = 3,
  CM_STATUS_DEGENERATE_DENSITY = 4,
  CM_STATUS_NUMERICAL = 5,
  CM_STATUS_IO = 6,
  CM_STATUS_PANIC = 7,
} CmStatus;

/**
 * Opaque calibration density handle.
 */
typedef struct CmCalibration CmCalibration;

/**
 * Opaque sample handle.
 */
typedef struct CmSample CmSample;

typedef struct {
  double statistic;
  double pvalue;
  size_t resamples;
  size_t k;
  int32_t method;
  uint64_t seed;
} CmTestResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version string of the library; static, do not free.
 */
const char *cm_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t cm_last_error(char *buf, size_t len);

/**
 * Creates a sample from `n` angles in radians.
 *
 * # Safety
 * `angles` must point to `n` readable doubles; `out` must be writable.
 */
CmStatus cm_sample_new(const double *angles, size_t n, CmSample **out);

/**
 * # Safety
 * `sample` must be null or a handle from [`cm_sample_new`] not yet freed.
 */
void cm_sample_free(CmSample *sample);

/**
 * # Safety
 * `sample` must be a live handle.
 */
size_t cm_sample_len(const CmSample *sample);

/**
 * The excess-mass statistic for `k` against `k + 1` modes and its
 * maximising level.
 *
 * # Safety
 * `sample` must be a live handle; `delta` and `lambda` must be writable.
 */
CmStatus cm_excess_mass_statistic(const CmSample *sample, size_t k, double *delta, double *lambda);

/**
 * Largest concentration at which the kernel estimate has at most `k` modes.
 *
 * # Safety
 * `sample` must be a live handle; `nu` must be writable.
 */
CmStatus cm_critical_concentration(const CmSample *sample, size_t k, double *nu);

/**
 * Bootstrap test of `k` modes against more than `k`.
 *
 * # Safety
 * `sample` must be a live handle; `out` must be writable.
 */
CmStatus cm_test(const CmSample *sample,
                 CmMethod method,
                 size_t k,
                 size_t resamples,
                 uint64_t seed,
                 CmTestResult *out);

/**
 * Builds the `k`-modal calibration density of a sample.
 *
 * # Safety
 * `sample` must be a live handle; `out` must be writable.
 */
CmStatus cm_calibration_new(const CmSample *sample, size_t k, CmCalibration **out);

/**
 * # Safety
 * `g` must be null or a handle from [`cm_calibration_new`] not yet freed.
 */
void cm_calibration_free(CmCalibration *g);

/**
 * Normalised density at `theta`.
 *
 * # Safety
 * `g` must be a live handle; `value` must be writable.
 */
CmStatus cm_calibration_eval(const CmCalibration *g, double theta, double *value);

/**
 * Fills `out` with `n` draws; the same seed gives the same draws.
 *
 * # Safety
 * `g` must be a live handle; `out` must point to `n` writable doubles.
 */
CmStatus cm_calibration_sample(const CmCalibration *g, uint64_t seed, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CIRCMODE_H */
