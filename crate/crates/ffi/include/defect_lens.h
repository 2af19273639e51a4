/* C interface for the defect-lens selection-bias diagnostics library. */

#ifndef DEFECT_LENS_H
#define DEFECT_LENS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of a fallible call.
typedef enum DlStatus {
  // The call succeeded.
  DL_STATUS_OK = 0,
  // A required pointer argument was null.
  DL_STATUS_NULL_POINTER = 1,
  // An argument failed validation; see `dl_last_error_message`.
  DL_STATUS_INVALID_INPUT = 2,
  // The inputs were well formed but numerically degenerate (zero
  // benchmark spread, non-convergence, out-of-range blend).
  DL_STATUS_NUMERICAL = 3,
} DlStatus;

// Opaque fitted bridge between a covariate and a (0, 1) response.
typedef struct DlBetaFit DlBetaFit;

// Opaque change-point posterior over a positional series.
typedef struct DlChangePoints DlChangePoints;

// One decomposed survey-vs-benchmark comparison.
//
// `n_eff_approx` is `+INFINITY` when the defect correlation is exactly
// zero; `n_eff_exact` is then the population size.
typedef struct DlDecomposition {
  // Survey mean minus benchmark mean.
  double estimation_error;
  // Defect correlation between outcome and recording.
  double ddc;
  // sqrt((N - n) / n).
  double data_deficiency;
  // Benchmark standard deviation.
  double problem_difficulty;
  // Equivalent simple-random-sample size, large-N form.
  double n_eff_approx;
  // Equivalent simple-random-sample size, finite-N form.
  double n_eff_exact;
} DlDecomposition;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Description of the most recent failure on this thread, or null when the
// last call succeeded. The pointer is owned by the library and stays
// valid until the next failing `dl_` call on the same thread.
const char *dl_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *dl_version(void);

// Decomposes the error of a survey mean against a full-population
// benchmark.
//
// Pass a negative `population_sd` to treat the outcome as binary and
// derive the benchmark spread from its mean; a non-negative value is used
// as the continuous-outcome standard deviation.
//
// # Safety
// `out` must be null or a valid pointer to a `DlDecomposition`.
enum DlStatus dl_decompose(uint64_t sample_size,
                           double sample_mean,
                           uint64_t population_size,
                           double population_mean,
                           double population_sd,
                           struct DlDecomposition *out);

// Fits the logit-mean beta regression of `response` on `covariate`
// (`len` paired observations, `len >= 3`, values in [0, 1]).
//
// Returns an owned handle, or null on failure (see
// `dl_last_error_message`). Release it with `dl_beta_fit_free`.
//
// # Safety
// `covariate` and `response` must be null or point to `len` readable
// `f64` values each.
struct DlBetaFit *dl_beta_fit_new(const double *covariate, const double *response, uintptr_t len);

// Writes the fitted intercept, slope, and precision.
//
// # Safety
// `fit` must be a live handle from `dl_beta_fit_new`; out-pointers must
// be null or valid.
enum DlStatus dl_beta_fit_coefficients(const struct DlBetaFit *fit,
                                       double *beta0,
                                       double *beta1,
                                       double *phi);

// Writes 1 when the optimizer met its convergence test, else 0.
//
// # Safety
// `fit` must be a live handle; `out` must be null or valid.
enum DlStatus dl_beta_fit_converged(const struct DlBetaFit *fit, int32_t *out);

// Writes the squared correlation between the logit response and the
// fitted linear predictor.
//
// # Safety
// `fit` must be a live handle; `out` must be null or valid.
enum DlStatus dl_beta_fit_pseudo_r2(const struct DlBetaFit *fit, double *out);

// Writes the fitted mean response at `covariate`.
//
// # Safety
// `fit` must be a live handle; `out` must be null or valid.
enum DlStatus dl_beta_fit_predict(const struct DlBetaFit *fit, double covariate, double *out);

// Releases a fit handle. Null is a no-op; a handle must not be used
// after it is freed.
//
// # Safety
// `fit` must be null or a handle from `dl_beta_fit_new` that has not
// been freed.
void dl_beta_fit_free(struct DlBetaFit *fit);

// Scans `values` (`len >= 3`) for change points with the Gibbs sampler.
//
// Positions are 0-based indexes into `values`. Pass `p0 = 0.2`,
// `w0 = 0.2`, `iterations = 5000`, `burn_in = 500`, `threshold = 0.6`
// for the default configuration. Identical arguments produce identical
// results. Returns an owned handle, or null on failure; release it with
// `dl_changepoints_free`.
//
// # Safety
// `values` must be null or point to `len` readable `f64` values.
struct DlChangePoints *dl_changepoint_scan(const double *values,
                                           uintptr_t len,
                                           double p0,
                                           double w0,
                                           uint64_t iterations,
                                           uint64_t burn_in,
                                           uint64_t seed,
                                           double threshold);

// Number of scanned positions, or 0 for a null handle.
//
// # Safety
// `scan` must be null or a live handle from `dl_changepoint_scan`.
uintptr_t dl_changepoints_len(const struct DlChangePoints *scan);

// Writes the posterior change probability at `index`.
//
// # Safety
// `scan` must be a live handle; `out` must be null or valid.
enum DlStatus dl_changepoints_probability(const struct DlChangePoints *scan,
                                          uintptr_t index,
                                          double *out);

// Writes the posterior mean of the series level at `index`.
//
// # Safety
// `scan` must be a live handle; `out` must be null or valid.
enum DlStatus dl_changepoints_posterior_mean(const struct DlChangePoints *scan,
                                             uintptr_t index,
                                             double *out);

// Number of detected intervals, or 0 for a null handle.
//
// # Safety
// `scan` must be null or a live handle from `dl_changepoint_scan`.
uintptr_t dl_changepoints_interval_count(const struct DlChangePoints *scan);

// Writes the inclusive positional bounds of detected interval `index`.
//
// # Safety
// `scan` must be a live handle; `start` and `end` must be null or valid.
enum DlStatus dl_changepoints_interval(const struct DlChangePoints *scan,
                                       uintptr_t index,
                                       uintptr_t *start,
                                       uintptr_t *end);

// Releases a scan handle. Null is a no-op; a handle must not be used
// after it is freed.
//
// # Safety
// `scan` must be null or a handle from `dl_changepoint_scan` that has
// not been freed.
void dl_changepoints_free(struct DlChangePoints *scan);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEFECT_LENS_H */
