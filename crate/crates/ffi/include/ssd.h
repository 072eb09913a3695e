#ifndef SSD_H
#define SSD_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SsdStatus {
  SSD_STATUS_OK = 0,
  // Argument outside its domain, or an incomplete scenario.
  SSD_STATUS_INVALID_ARGUMENT = 1,
  // A numeric routine broke down.
  SSD_STATUS_NUMERIC = 2,
  // Singular posterior precision.
  SSD_STATUS_RANK = 3,
  SSD_STATUS_NULL_POINTER = 4,
  // A string argument was not valid UTF-8.
  SSD_STATUS_INVALID_UTF8 = 5,
  // The search finished without reaching the target; the result handle
  // is still valid.
  SSD_STATUS_NOT_ACHIEVED = 6,
  // Index past the end of a curve.
  SSD_STATUS_OUT_OF_RANGE = 7,
  SSD_STATUS_PANIC = 8,
} SsdStatus;

// A validated scenario, built from the same JSON the command line reads.
typedef struct SsdScenario SsdScenario;

// Outcome of a curve evaluation or sample-size search.
typedef struct SsdSizing SsdSizing;

typedef struct SsdCurvePoint {
  size_t n;
  double assurance;
  double std_error;
  size_t replicates;
  uint64_t seed;
} SsdCurvePoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread. The pointer stays valid
// until the next failing call on the same thread.
const char *ssd_last_error(void);

// Library version as a static NUL-terminated string.
const char *ssd_version(void);

// # Safety
// `out` must be null or point to writable memory for one `double`.
enum SsdStatus ssd_std_normal_cdf(double x, double *out);

// # Safety
// `out` must be null or point to writable memory for one `double`.
enum SsdStatus ssd_std_normal_quantile(double p, double *out);

// Frequentist power `Φ(√n·Δ/σ + z_α)` at sample size `n`.
//
// # Safety
// `out` must be null or point to writable memory for one `double`.
enum SsdStatus ssd_freq_power(double delta, double sigma, double n, double alpha, double *out);

// Closed-form assurance with separate analysis (`n_a`) and design (`n_d`)
// prior sizes. An infinite `n_d` gives a point design prior.
//
// # Safety
// `out` must be null or point to writable memory for one `double`.
enum SsdStatus ssd_two_prior_assurance(double delta,
                                       double sigma,
                                       double n,
                                       double n_a,
                                       double n_d,
                                       double alpha,
                                       double *out);

// Parse and validate a scenario from JSON. On success `*out` owns a new
// handle; otherwise it is set to null.
//
// # Safety
// `json` must be null or a NUL-terminated string; `out` must be null or
// writable.
enum SsdStatus ssd_scenario_from_json(const char *json, struct SsdScenario **out);

// Release a scenario. Null is ignored.
//
// # Safety
// `scenario` must be null or a handle from [`ssd_scenario_from_json`] not
// yet freed.
void ssd_scenario_free(struct SsdScenario *scenario);

// Assurance at sample size `n`. `out_stderr` may be null.
//
// # Safety
// `scenario` must be a live handle; `out_value` must be writable;
// `out_stderr` must be null or writable.
enum SsdStatus ssd_scenario_assurance(const struct SsdScenario *scenario,
                                      size_t n,
                                      uint64_t seed,
                                      double *out_value,
                                      double *out_stderr);

// Smallest sample size reaching the scenario's `gamma`. Returns
// `SSD_STATUS_NOT_ACHIEVED` with a valid handle when no grid point gets
// there.
//
// # Safety
// `scenario` must be a live handle; `out` must be writable.
enum SsdStatus ssd_scenario_size(const struct SsdScenario *scenario,
                                 uint64_t seed,
                                 struct SsdSizing **out);

// Assurance over the scenario grid without a search.
//
// # Safety
// `scenario` must be a live handle; `out` must be writable.
enum SsdStatus ssd_scenario_curve(const struct SsdScenario *scenario,
                                  uint64_t seed,
                                  struct SsdSizing **out);

// # Safety
// `sizing` must be null or a live handle.
void ssd_sizing_free(struct SsdSizing *sizing);

// Writes `n*`, or returns `SSD_STATUS_NOT_ACHIEVED` and leaves `out` alone.
//
// # Safety
// `sizing` must be a live handle; `out` must be writable.
enum SsdStatus ssd_sizing_n_star(const struct SsdSizing *sizing, size_t *out);

// Largest assurance observed anywhere in the run.
//
// # Safety
// `sizing` must be a live handle; `out` must be writable.
enum SsdStatus ssd_sizing_max_assurance(const struct SsdSizing *sizing, double *out);

// Number of coarse grid points. Null gives 0.
//
// # Safety
// `sizing` must be null or a live handle.
size_t ssd_sizing_curve_len(const struct SsdSizing *sizing);

// Number of bisection probes. Null gives 0.
//
// # Safety
// `sizing` must be null or a live handle.
size_t ssd_sizing_refinement_len(const struct SsdSizing *sizing);

// # Safety
// `sizing` must be a live handle; `out` must be writable.
enum SsdStatus ssd_sizing_curve_point(const struct SsdSizing *sizing,
                                      size_t index,
                                      struct SsdCurvePoint *out);

// # Safety
// `sizing` must be a live handle; `out` must be writable.
enum SsdStatus ssd_sizing_refinement_point(const struct SsdSizing *sizing,
                                           size_t index,
                                           struct SsdCurvePoint *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SSD_H */
