#ifndef FQUANT_H
#define FQUANT_H

/* Generated by cbindgen from fquant-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every fallible call.
 */
typedef enum FqStatus {
  FQ_OK = 0,
  FQ_NULL_POINTER = 1,
  FQ_INVALID_ARGUMENT = 2,
  FQ_DOMAIN_ERROR = 3,
  FQ_INSUFFICIENT_RESOLUTION = 4,
  FQ_DEGENERATE_SAMPLES = 5,
  FQ_BUDGET_TOO_SMALL = 6,
  FQ_RUNTIME_ERROR = 7,
} FqStatus;

/**
 * Process family selector for simulation-backed calls.
 */
typedef enum FqProcessFamily {
  /**
   * `param` ignored.
   */
  FQ_PROCESS_BROWNIAN = 0,
  /**
   * `param` = Hurst index in (0, 1).
   */
  FQ_PROCESS_FBM = 1,
  /**
   * `param` = stability index in (0, 2).
   */
  FQ_PROCESS_STABLE = 2,
  /**
   * `param` = subordinator rate > 0.
   */
  FQ_PROCESS_GAMMA = 3,
} FqProcessFamily;

/**
 * Jump-size law of a compound Poisson quantizer.
 */
typedef enum FqJumpLaw {
  /**
   * Standard Poisson (unit jumps); parameters ignored.
   */
  FQ_JUMPS_NONE = 0,
  /**
   * Gaussian(mean = param_a, std = param_b).
   */
  FQ_JUMPS_GAUSSIAN = 1,
  /**
   * Uniform(lo = param_a, hi = param_b).
   */
  FQ_JUMPS_UNIFORM = 2,
  /**
   * Exponential(rate = param_a); param_b ignored.
   */
  FQ_JUMPS_EXPONENTIAL = 3,
} FqJumpLaw;

/**
 * Opaque scalar codebook.
 */
typedef struct FqCodebook FqCodebook;

/**
 * Opaque censored-jump-time quantizer for (compound) Poisson paths.
 */
typedef struct FqPoissonQuantizer FqPoissonQuantizer;

/**
 * Opaque Haar product quantizer.
 */
typedef struct FqProductQuantizer FqProductQuantizer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent error on this thread; valid until the next
 * failing call. Never null.
 */
const char *fq_last_error(void);

/**
 * Library version as a static string.
 */
const char *fq_version(void);

/**
 * Haar coefficients of a sampled path. `values` holds `2^levels + 1`
 * grid samples; `out_coeffs` must hold `2^(n_max + 1)` entries.
 *
 * # Safety
 * `values` and `out_coeffs` must point to buffers of the stated sizes.
 */
enum FqStatus fq_haar_forward(const double *values,
                              uintptr_t values_len,
                              double horizon,
                              uint32_t levels,
                              uint32_t n_max,
                              double *out_coeffs,
                              uintptr_t out_len);

/**
 * Evaluates the partial sum of `2^(n_max+1)` Haar coefficients on the
 * grid; `out_values` must hold `2^levels + 1` entries.
 *
 * # Safety
 * `coeffs` and `out_values` must point to buffers of the stated sizes.
 */
enum FqStatus fq_haar_reconstruct(const double *coeffs,
                                  uintptr_t coeffs_len,
                                  double horizon,
                                  uint32_t levels,
                                  double *out_values,
                                  uintptr_t out_len);

/**
 * Trains an `L^r`-optimal codebook of `size` points on the samples
 * (Lloyd fixed point, deterministic quantile initialization).
 *
 * # Safety
 * `samples` must point to `samples_len` doubles; `out` must be a valid
 * destination pointer.
 */
enum FqStatus fq_codebook_train(const double *samples,
                                uintptr_t samples_len,
                                uintptr_t size,
                                double r,
                                struct FqCodebook **out);

/**
 * Exact globally optimal codebook for the empirical measure (interval
 * dynamic programming; guarded to 10^4 samples and 64 points).
 *
 * # Safety
 * Same contracts as [`fq_codebook_train`].
 */
enum FqStatus fq_codebook_train_exact(const double *samples,
                                      uintptr_t samples_len,
                                      uintptr_t size,
                                      double r,
                                      struct FqCodebook **out);

/**
 * Number of codepoints.
 *
 * # Safety
 * `cb` must be a live codebook handle.
 */
uintptr_t fq_codebook_size(const struct FqCodebook *cb);

/**
 * Copies the sorted codepoints into `out` (capacity `out_len` >= size).
 *
 * # Safety
 * `cb` must be live; `out` must hold `out_len` doubles.
 */
enum FqStatus fq_codebook_points(const struct FqCodebook *cb, double *out, uintptr_t out_len);

/**
 * Nearest codepoint of `x` (ties toward the smaller index).
 *
 * # Safety
 * `cb` must be live; output pointers may be null to skip them.
 */
enum FqStatus fq_codebook_nearest(const struct FqCodebook *cb,
                                  double x,
                                  uintptr_t *out_index,
                                  double *out_point);

/**
 * Empirical distortion `(mean_k min_a |x_k - a|^r)^{1/r}`.
 *
 * # Safety
 * `cb` must be live; `samples` must hold `samples_len` doubles.
 */
enum FqStatus fq_codebook_distortion(const struct FqCodebook *cb,
                                     const double *samples,
                                     uintptr_t samples_len,
                                     double r,
                                     double *out);

/**
 * Releases a codebook handle.
 *
 * # Safety
 * `cb` must come from a train call and not be freed twice.
 */
void fq_codebook_free(struct FqCodebook *cb);

/**
 * Trains a Haar product quantizer for the process family under a total
 * budget: allocates per-coefficient codebook sizes from the modulus
 * exponent `phi_exponent`, simulates `train_paths` training paths and
 * fits one codebook per coefficient.
 *
 * # Safety
 * `out` must be a valid destination pointer.
 */
enum FqStatus fq_product_quantizer_train(enum FqProcessFamily family,
                                         double param,
                                         double horizon,
                                         uint32_t grid_levels,
                                         double phi_exponent,
                                         uint64_t budget,
                                         double r,
                                         uintptr_t train_paths,
                                         uint64_t seed,
                                         struct FqProductQuantizer **out);

/**
 * Quantizes one sampled path (`2^levels + 1` values on the quantizer's
 * grid) and writes the quantized path.
 *
 * # Safety
 * `q` must be live; the buffers must hold the stated sizes.
 */
enum FqStatus fq_product_quantizer_quantize(const struct FqProductQuantizer *q,
                                            const double *values,
                                            uintptr_t values_len,
                                            double *out_values,
                                            uintptr_t out_len);

/**
 * Monte Carlo distortion of the quantizer on fresh paths of its own
 * process family.
 *
 * # Safety
 * `q` must be live; output pointers may be null to skip them.
 */
enum FqStatus fq_product_quantizer_distortion(const struct FqProductQuantizer *q,
                                              double r,
                                              double p,
                                              uintptr_t n_paths,
                                              uint64_t seed,
                                              double *out_estimate,
                                              double *out_std_error);

/**
 * Releases a product quantizer handle.
 *
 * # Safety
 * `q` must come from the train call and not be freed twice.
 */
void fq_product_quantizer_free(struct FqProductQuantizer *q);

/**
 * Builds the explicit (compound) Poisson quantizer under a total
 * budget; `FQ_JUMPS_NONE` selects the standard Poisson process.
 *
 * # Safety
 * `out` must be a valid destination pointer.
 */
enum FqStatus fq_poisson_quantizer_build(double lambda,
                                         double horizon,
                                         double r,
                                         double p,
                                         double delta,
                                         uint64_t budget,
                                         enum FqJumpLaw jump_law,
                                         double jump_param_a,
                                         double jump_param_b,
                                         uintptr_t train_draws,
                                         uint64_t seed,
                                         struct FqPoissonQuantizer **out);

/**
 * Monte Carlo distortion of the Poisson quantizer on fresh jump paths.
 *
 * # Safety
 * `q` must be live; output pointers may be null to skip them.
 */
enum FqStatus fq_poisson_quantizer_distortion(const struct FqPoissonQuantizer *q,
                                              uint32_t grid_levels,
                                              uintptr_t n_paths,
                                              uint64_t seed,
                                              double *out_estimate,
                                              double *out_std_error);

/**
 * Number of jump-time codebooks (the trained depth).
 *
 * # Safety
 * `q` must be a live handle.
 */
uintptr_t fq_poisson_quantizer_depth(const struct FqPoissonQuantizer *q);

/**
 * Releases a Poisson quantizer handle.
 *
 * # Safety
 * `q` must come from the build call and not be freed twice.
 */
void fq_poisson_quantizer_free(struct FqPoissonQuantizer *q);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FQUANT_H */
