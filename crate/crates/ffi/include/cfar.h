#ifndef CFAR_H
#define CFAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Clutter statistic selector. `k` accompanies `ORDER_STATISTIC`.
 */
typedef enum CfarStat {
  CFAR_STAT_SUM = 0,
  CFAR_STAT_ORDER_STATISTIC = 1,
  CFAR_STAT_GEOMETRIC_MEAN = 2,
  CFAR_STAT_MINIMUM = 3,
} CfarStat;

/**
 * Result code of every call.
 */
typedef enum CfarStatus {
  CFAR_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  CFAR_STATUS_NULL_POINTER = 1,
  /**
   * An argument lies outside the operation's domain.
   */
  CFAR_STATUS_DOMAIN = 2,
  /**
   * A root finder did not converge.
   */
  CFAR_STATUS_SOLVER_FAILURE = 3,
  /**
   * A configuration value was rejected.
   */
  CFAR_STATUS_CONFIG = 4,
  /**
   * An output buffer has the wrong length.
   */
  CFAR_STATUS_BUFFER_SIZE = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  CFAR_STATUS_PANIC = 6,
} CfarStatus;

/**
 * Opaque detector handle.
 */
typedef struct CfarDetector CfarDetector;

/**
 * Monte Carlo estimate of a detection or false-alarm probability.
 */
typedef struct CfarPdEstimate {
  double p_hat;
  double standard_error;
  uint64_t runs;
  uint64_t successes;
} CfarPdEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *cfar_version(void);

/**
 * Message of the last failed call on this thread, or null after a
 * successful one. Valid until the next call on this thread.
 */
const char *cfar_last_error_message(void);

/**
 * Creates a detector with an explicit threshold multiplier `tau`. `stat`
 * is a [`CfarStat`] value; `k` is read only for order statistics.
 *
 * # Safety
 * `out` must be null or point to writable storage for a handle pointer.
 */
enum CfarStatus cfar_detector_new(int32_t stat,
                                  size_t k,
                                  size_t window,
                                  size_t guard_cells,
                                  double tau,
                                  struct CfarDetector **out);

/**
 * Creates a detector whose threshold meets `design_pfa` in homogeneous
 * clutter. The geometric mean has no closed form and is rejected.
 *
 * # Safety
 * As [`cfar_detector_new`].
 */
enum CfarStatus cfar_detector_new_for_pfa(int32_t stat,
                                          size_t k,
                                          size_t window,
                                          size_t guard_cells,
                                          double design_pfa,
                                          struct CfarDetector **out);

/**
 * Releases a detector. Null is ignored.
 *
 * # Safety
 * `det` must be null or a handle not yet freed.
 */
void cfar_detector_free(struct CfarDetector *det);

/**
 * # Safety
 * `det` must be a live handle or null; `out` null or writable.
 */
enum CfarStatus cfar_detector_threshold(const struct CfarDetector *det, double *out);

/**
 * Slides the detector along `profile`. `decisions[i]` becomes -1 where the
 * window does not fit, 0 for no target and 1 for a detection.
 * `decisions_len` must equal `len`.
 *
 * # Safety
 * `profile` must point to `len` readable doubles and `decisions` to
 * `decisions_len` writable bytes.
 */
enum CfarStatus cfar_detector_slide(const struct CfarDetector *det,
                                    const double *profile,
                                    size_t len,
                                    int8_t *decisions,
                                    size_t decisions_len);

/**
 * Monte Carlo Pd of `det` against exponential clutter of rate
 * `clutter_rate`. `has_target = 0` estimates the false-alarm probability
 * and ignores `scr_db`. `interferers` random reference cells carry
 * interference `inr_db` above the clutter.
 *
 * # Safety
 * `det` must be a live handle or null; `out` null or writable.
 */
enum CfarStatus cfar_estimate_pd(const struct CfarDetector *det,
                                 double clutter_rate,
                                 int32_t has_target,
                                 double scr_db,
                                 size_t interferers,
                                 double inr_db,
                                 uint64_t runs,
                                 uint64_t seed,
                                 size_t workers,
                                 struct CfarPdEstimate *out);

/**
 * # Safety
 * `out` must be null or writable.
 */
enum CfarStatus cfar_ca_threshold(double pfa, size_t n, double *out);

/**
 * # Safety
 * `out` must be null or writable.
 */
enum CfarStatus cfar_ca_pd(double tau, double scr, size_t n, double *out);

/**
 * # Safety
 * `out` must be null or writable.
 */
enum CfarStatus cfar_ca_pfa(double tau, size_t n, double *out);

/**
 * # Safety
 * `out` must be null or writable.
 */
enum CfarStatus cfar_os_threshold(double pfa, size_t n, size_t k, double *out);

/**
 * # Safety
 * `out` must be null or writable.
 */
enum CfarStatus cfar_os_pd(double tau, double scr, size_t n, size_t k, double *out);

/**
 * # Safety
 * `out` must be null or writable.
 */
enum CfarStatus cfar_os_pfa(double tau, size_t n, size_t k, double *out);

/**
 * # Safety
 * `out` must be null or writable.
 */
enum CfarStatus cfar_ideal_threshold(double pfa, double rate, double *out);

/**
 * # Safety
 * `out` must be null or writable.
 */
enum CfarStatus cfar_ideal_pd(double pfa, double scr, double *out);

/**
 * Copies `cfar_last_error_message` into `buf` (truncated, always
 * NUL-terminated) and returns the full message length, or 0 when there is
 * no error.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t cfar_copy_last_error(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CFAR_H */
