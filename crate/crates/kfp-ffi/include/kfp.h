#ifndef KFP_H
#define KFP_H

/* Generated by cbindgen from crates/kfp-ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum KfpStatus {
  KFP_STATUS_OK = 0,
  KFP_STATUS_NULL_POINTER = 1,
  KFP_STATUS_INVALID_ARGUMENT = 2,
  KFP_STATUS_SOLVER_FAILED = 3,
  KFP_STATUS_SIMULATION_FAILED = 4,
  KFP_STATUS_CACHE_INVALID = 5,
  KFP_STATUS_IO = 6,
  KFP_STATUS_BUFFER_TOO_SMALL = 7,
  KFP_STATUS_PANIC = 8,
} KfpStatus;

/**
 * Solved corrector hierarchy with its macroscopic tensors.
 */
typedef struct KfpCorrectors KfpCorrectors;

/**
 * Statistics of a Langevin ensemble.
 */
typedef struct KfpEnsemble KfpEnsemble;

/**
 * Potential and friction on the unit torus.
 */
typedef struct KfpModel KfpModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error of this thread into `buf` (NUL-terminated,
 * truncated to `len`) and returns the full message length plus one. Returns
 * zero when there is no error.
 *
 * # Safety
 * `buf` must be null or writable for `len` bytes.
 */
size_t kfp_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *kfp_version(void);

/**
 * Builds a model from `n_terms` potential terms `amplitude cos(2 pi k.x + phase)`
 * (`wavevectors` holds `n_terms * dim` integers, `phases` may be null) and
 * a `dim * dim` row-major friction matrix (null for the identity).
 *
 * # Safety
 * Array arguments must be null or valid for the stated lengths; `out` must
 * be writable.
 */
enum KfpStatus kfp_model_new(size_t dim,
                             const int32_t *wavevectors,
                             const double *amplitudes,
                             const double *phases,
                             size_t n_terms,
                             const double *friction,
                             struct KfpModel **out);

/**
 * Builds the model of the `[model]` section of a TOML run configuration.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be writable.
 */
enum KfpStatus kfp_model_from_toml(const char *toml, struct KfpModel **out);

/**
 * # Safety
 * `model` must be null or a handle from this library, not yet freed.
 */
void kfp_model_free(struct KfpModel *model);

/**
 * Spatial dimension, or zero for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t kfp_model_dim(const struct KfpModel *model);

/**
 * Solves the corrector hierarchy up to `order` on `nx` Fourier and `nv`
 * Hermite modes.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum KfpStatus kfp_correctors_build(const struct KfpModel *model,
                                    uint32_t order,
                                    size_t nx,
                                    size_t nv,
                                    double tol,
                                    struct KfpCorrectors **out);

/**
 * # Safety
 * `c` must be null or a live handle.
 */
void kfp_correctors_free(struct KfpCorrectors *c);

/**
 * Writes the effective diffusivity, `dim * dim` row-major, into `out`.
 *
 * # Safety
 * `c` must be a live handle; `out` must be writable for `len` doubles.
 */
enum KfpStatus kfp_correctors_diffusivity(const struct KfpCorrectors *c, double *out, size_t len);

/**
 * Macroscopic coefficient of the multi-index `alpha` (`dim` entries) with
 * `2 <= |alpha| <= order + 1`.
 *
 * # Safety
 * `c` must be a live handle, `alpha` valid for `len` entries, `out` writable.
 */
enum KfpStatus kfp_correctors_macro_coefficient(const struct KfpCorrectors *c,
                                                const uint32_t *alpha,
                                                size_t len,
                                                double *out);

/**
 * Stores the correctors in the binary cache format at `path`.
 *
 * # Safety
 * `c` must be a live handle; `path` a NUL-terminated string.
 */
enum KfpStatus kfp_correctors_save(const struct KfpCorrectors *c, const char *path);

/**
 * Loads correctors saved by [`kfp_correctors_save`] for the same model and
 * options; any mismatch or corruption gives `CacheInvalid`.
 *
 * # Safety
 * `model` must be a live handle, `path` a NUL-terminated string, `out` writable.
 */
enum KfpStatus kfp_correctors_load(const struct KfpModel *model,
                                   uint32_t order,
                                   size_t nx,
                                   size_t nv,
                                   double tol,
                                   const char *path,
                                   struct KfpCorrectors **out);

/**
 * Integrates `n_traj` Langevin trajectories from rest at the origin up to
 * `t_final`, recording once per unit time, with the default stable step.
 *
 * # Safety
 * `model` must be a live handle; `out` writable.
 */
enum KfpStatus kfp_langevin_run(const struct KfpModel *model,
                                double t_final,
                                size_t n_traj,
                                uint64_t seed,
                                struct KfpEnsemble **out);

/**
 * # Safety
 * `e` must be null or a live handle.
 */
void kfp_ensemble_free(struct KfpEnsemble *e);

/**
 * Number of recorded times; copies up to `len` of them into `out` when it
 * is non-null.
 *
 * # Safety
 * `e` must be a live handle; `out` null or writable for `len` doubles.
 */
size_t kfp_ensemble_times(const struct KfpEnsemble *e, double *out, size_t len);

/**
 * Einstein estimate of the effective diffusivity and its jackknife
 * standard error, each `dim * dim` row-major.
 *
 * # Safety
 * `e` must be a live handle; `estimate` and `se` writable for `len` doubles.
 */
enum KfpStatus kfp_ensemble_diffusivity(const struct KfpEnsemble *e,
                                        double *estimate,
                                        double *se,
                                        size_t len);

/**
 * Runs the exact polynomial identity suite with default settings and
 * stores 1 in `passed` when every check holds.
 *
 * # Safety
 * `passed` must be writable.
 */
enum KfpStatus kfp_poly_selftest(int *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KFP_H */
