#ifndef TFAVAR_H
#define TFAVAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. The nonzero values follow the error categories of the
 * library and match the exit codes of the command-line tool.
 */
typedef enum TfavarStatus {
  TFAVAR_STATUS_OK = 0,
  TFAVAR_STATUS_PANIC = 1,
  TFAVAR_STATUS_INVALID_ARGUMENT = 2,
  TFAVAR_STATUS_IO = 3,
  TFAVAR_STATUS_INPUT = 4,
  TFAVAR_STATUS_DATA = 5,
  TFAVAR_STATUS_NUMERICAL = 6,
  TFAVAR_STATUS_NULL_POINTER = 7,
} TfavarStatus;

/**
 * Opaque fit handle.
 */
typedef struct TfavarFit TfavarFit;

/**
 * Opaque panel handle.
 */
typedef struct TfavarPanel TfavarPanel;

/**
 * Plain-data fit options. Start from [`tfavar_fit_options_default`].
 */
typedef struct TfavarFitOptions {
  /**
   * Number of factors; ignored when `r_auto` is set.
   */
  size_t r;
  /**
   * Select r by a Bai–Ng criterion up to `r_max`.
   */
  bool r_auto;
  size_t r_max;
  /**
   * 1, 2 or 3 for ICp1, ICp2, ICp3.
   */
  uint32_t criterion;
  /**
   * VAR order.
   */
  size_t d;
  /**
   * Choose τ by cross validation over `tau_grid_size` points.
   */
  bool tau_cv;
  /**
   * Fixed τ when `tau_cv` is false; `INFINITY` disables truncation.
   */
  double tau;
  size_t tau_grid_size;
  /**
   * Choose λ by blocked cross validation.
   */
  bool lambda_cv;
  double lambda;
  size_t n_lambda;
  size_t n_folds;
  double tol;
  size_t max_iter;
} TfavarFitOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *tfavar_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into the library from the same thread.
 */
const char *tfavar_last_error(void);

/**
 * Options matching the command-line defaults: r = 0, d = 1, τ and λ by
 * cross validation.
 */
struct TfavarFitOptions tfavar_fit_options_default(void);

/**
 * Copies an `n × p` row-major buffer into a new panel.
 *
 * # Safety
 * `data` must point to `n * p` readable doubles and `out` must be writable.
 */
enum TfavarStatus tfavar_panel_new(const double *data,
                                   size_t n,
                                   size_t p,
                                   struct TfavarPanel **out);

/**
 * Reads a panel from a CSV file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum TfavarStatus tfavar_panel_load_csv(const char *path,
                                        bool has_header,
                                        struct TfavarPanel **out);

/**
 * Simulates one panel from a TOML design specification with the given seed.
 *
 * # Safety
 * `spec_toml` must be a NUL-terminated string and `out` writable.
 */
enum TfavarStatus tfavar_simulate(const char *spec_toml, uint64_t seed, struct TfavarPanel **out);

/**
 * # Safety
 * `panel` must come from this library and not be used afterwards.
 */
void tfavar_panel_free(struct TfavarPanel *panel);

/**
 * # Safety
 * `panel` must be a live handle; `n` and `p` writable.
 */
enum TfavarStatus tfavar_panel_dims(const struct TfavarPanel *panel, size_t *n, size_t *p);

/**
 * Copies the panel values into an `n × p` row-major buffer.
 *
 * # Safety
 * `panel` must be live and `out` must hold `len` doubles.
 */
enum TfavarStatus tfavar_panel_values(const struct TfavarPanel *panel, double *out, size_t len);

/**
 * Fits the model. `options` may be NULL for the defaults.
 *
 * # Safety
 * `panel` must be live, `options` NULL or valid, `out` writable.
 */
enum TfavarStatus tfavar_fit(const struct TfavarPanel *panel,
                             const struct TfavarFitOptions *options,
                             struct TfavarFit **out);

/**
 * # Safety
 * `fit` must come from [`tfavar_fit`] and not be used afterwards.
 */
void tfavar_fit_free(struct TfavarFit *fit);

/**
 * Chosen factor number, truncation level, penalty and nonzero count.
 * Any output pointer may be NULL.
 *
 * # Safety
 * `fit` must be live; non-NULL outputs must be writable.
 */
enum TfavarStatus tfavar_fit_summary(const struct TfavarFit *fit,
                                     size_t *r,
                                     double *tau,
                                     double *lambda,
                                     size_t *nonzeros);

/**
 * Copies `[Â₁ … Â_d]` as a `p × pd` row-major matrix; `len` must be `p·p·d`.
 *
 * # Safety
 * `fit` must be live and `out` must hold `len` doubles.
 */
enum TfavarStatus tfavar_fit_coef(const struct TfavarFit *fit, double *out, size_t len);

/**
 * `h`-step forecast from the end of the fitted sample; `len` must be `p`.
 * `common` and `idio` may be NULL.
 *
 * # Safety
 * `fit` must be live and each non-NULL buffer must hold `len` doubles.
 */
enum TfavarStatus tfavar_fit_forecast(const struct TfavarFit *fit,
                                      size_t h,
                                      double *combined,
                                      double *common,
                                      double *idio,
                                      size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TFAVAR_H */
