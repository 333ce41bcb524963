#ifndef FLIPFLOP_H
#define FLIPFLOP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes; 1 to 4 match the command-line exit codes.
typedef enum FfStatus {
  FF_STATUS_OK = 0,
  // The computation finished with a negative answer, e.g. the theorem
  // does not apply.
  FF_STATUS_NEGATIVE = 1,
  FF_STATUS_CONFIG = 2,
  FF_STATUS_PRECONDITION = 3,
  FF_STATUS_NUMERICAL = 4,
  FF_STATUS_NULL_POINTER = 5,
  // A Rust panic was caught at the boundary.
  FF_STATUS_PANIC = 6,
  // The output buffer was too small; the required count is still written.
  FF_STATUS_BUFFER_TOO_SMALL = 7,
} FfStatus;

typedef enum FfStableBranch {
  FF_STABLE_BRANCH_LOWER = 0,
  FF_STABLE_BRANCH_UPPER = 1,
  FF_STABLE_BRANCH_INDETERMINATE = 2,
} FfStableBranch;

// Opaque analysis handle: the point, its system, coefficients and verdict.
typedef struct FfAnalysis FfAnalysis;

// Opaque model handle.
typedef struct FfModel FfModel;

// A fold-fold point with its free parameter value.
typedef struct FfPoint {
  double x0;
  double y0;
  double z0;
  double param;
  double max_residual;
} FfPoint;

// A limit cycle of the return map.
typedef struct FfCycle {
  double x;
  double z;
  double period;
  double t_plus;
  double t_minus;
  // Eigenvalue moduli of the return-map Jacobian, descending.
  double modulus_max;
  double modulus_min;
  double z_half_distance;
  bool stable;
} FfCycle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *ff_last_error(void);

// Builds a model from a named preset. `kind` is "glacial" or "synthetic".
// Glacial models free T+.
//
// # Safety
// `kind` and `preset` must be NUL-terminated strings; `out` must be writable.
enum FfStatus ff_model_from_preset(const char *kind, const char *preset, struct FfModel **out);

// Builds a model from the text of a TOML run configuration.
//
// # Safety
// `toml` must be a NUL-terminated string; `out` must be writable.
enum FfStatus ff_model_from_config(const char *toml, struct FfModel **out);

// # Safety
// `model` must come from a constructor above and not be used afterwards.
void ff_model_free(struct FfModel *model);

// Newton search from `n_seeds` seeds laid out as (x, y, z, param)
// quadruples. Distinct points go to `out`; `count` receives how many were
// found even when `capacity` is too small.
//
// # Safety
// `seeds` must hold 4·`n_seeds` doubles and `out` room for `capacity` points.
enum FfStatus ff_find_foldfold(const struct FfModel *model,
                               const double *seeds,
                               size_t n_seeds,
                               struct FfPoint *out,
                               size_t capacity,
                               size_t *count);

// Checks the residuals at `point`, then evaluates the coefficients and the
// theorem's hypotheses. A point that is not a fold-fold point gives
// `Precondition`.
//
// # Safety
// `model` and `point` must be valid; `out` must be writable.
enum FfStatus ff_analyze(const struct FfModel *model,
                         const struct FfPoint *point,
                         struct FfAnalysis **out);

// # Safety
// `analysis` must come from [`ff_analyze`] and not be used afterwards.
void ff_analysis_free(struct FfAnalysis *analysis);

// # Safety
// Pointers must be valid.
enum FfStatus ff_analysis_applicable(const struct FfAnalysis *analysis, bool *out);

// # Safety
// Pointers must be valid.
enum FfStatus ff_analysis_stable_branch(const struct FfAnalysis *analysis,
                                        enum FfStableBranch *out);

// Looks up a coefficient by its report key, e.g. "alpha_minus", "K" or
// "h0_plus". Undefined coefficients give `Negative`, unknown keys `Config`.
//
// # Safety
// `name` must be a NUL-terminated string; pointers must be valid.
enum FfStatus ff_analysis_coefficient(const struct FfAnalysis *analysis,
                                      const char *name,
                                      double *out);

// The full report (point, coefficients, verdict) as JSON. Release the
// string with [`ff_string_free`].
//
// # Safety
// Pointers must be valid.
enum FfStatus ff_analysis_json(const struct FfAnalysis *analysis, char **out);

// # Safety
// `s` must come from this library and not be used afterwards.
void ff_string_free(char *s);

// Leading-order period and z-offset at `eps`; `Negative` when the theorem
// does not apply.
//
// # Safety
// Pointers must be valid; either output may be null.
enum FfStatus ff_predict(const struct FfAnalysis *analysis,
                         double eps,
                         double *period,
                         double *z_offset);

// Newton search for the cycle on the stable branch at `eps`; `Negative`
// when the theorem does not apply.
//
// # Safety
// Pointers must be valid.
enum FfStatus ff_find_cycle(const struct FfAnalysis *analysis, double eps, struct FfCycle *out);

// Insolation Q(e); |e| ≥ 1 gives `Config`.
//
// # Safety
// `out` must be writable.
enum FfStatus ff_insolation_q(double e, double *out);

// Obliquity term s2(β), β in radians.
double ff_obliquity_s2(double beta);

// Name of the model's free parameter, e.g. "t_plus". Release with
// [`ff_string_free`].
//
// # Safety
// Pointers must be valid.
enum FfStatus ff_model_param_name(const struct FfModel *model, char **out);

// The resolved model constants as JSON. Release with [`ff_string_free`].
//
// # Safety
// Pointers must be valid.
enum FfStatus ff_model_json(const struct FfModel *model, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLIPFLOP_H */
