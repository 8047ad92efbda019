#ifndef LTSF_H
#define LTSF_H

/* Generated by cbindgen; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum LtsfStatus {
  LTSF_STATUS_OK = 0,
  LTSF_STATUS_NULL_POINTER = 1,
  LTSF_STATUS_INVALID_ARGUMENT = 2,
  LTSF_STATUS_IO = 3,
  LTSF_STATUS_FORMAT = 4,
  LTSF_STATUS_NUMERICAL = 5,
  LTSF_STATUS_PANIC = 6,
} LtsfStatus;

/**
 * Dataset split selector.
 */
typedef enum LtsfSplit {
  LTSF_SPLIT_TRAIN = 0,
  LTSF_SPLIT_TEST = 1,
} LtsfSplit;

/**
 * Opaque train/test dataset.
 */
typedef struct LtsfDataset LtsfDataset;

/**
 * Opaque latent linear ODE model.
 */
typedef struct LtsfLinOde LtsfLinOde;

/**
 * Opaque fitted linear baseline.
 */
typedef struct LtsfNLinear LtsfNLinear;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *ltsf_last_error(void);

/**
 * Generates a synthetic dataset. `traj_len == 0` selects the system default.
 *
 * # Safety
 * `system` must be a valid C string and `out` a writable pointer.
 */
enum LtsfStatus ltsf_dataset_generate(const char *system,
                                      uintptr_t n_train,
                                      uintptr_t n_test,
                                      uintptr_t traj_len,
                                      uint64_t seed,
                                      struct LtsfDataset **out);

/**
 * Loads a dataset file.
 *
 * # Safety
 * `path` must be a valid C string and `out` a writable pointer.
 */
enum LtsfStatus ltsf_dataset_load(const char *path, struct LtsfDataset **out);

/**
 * Saves a dataset file.
 *
 * # Safety
 * `ds` must come from this library and `path` must be a valid C string.
 */
enum LtsfStatus ltsf_dataset_save(const struct LtsfDataset *ds, const char *path);

/**
 * Writes `(count, len, dim)` of one split into `dims[0..3]`.
 *
 * # Safety
 * `ds` must come from this library and `dims` must hold three values.
 */
enum LtsfStatus ltsf_dataset_shape(const struct LtsfDataset *ds,
                                   enum LtsfSplit split,
                                   uintptr_t *dims);

/**
 * Copies one split into `buf`, which must hold exactly `count*len*dim` values.
 *
 * # Safety
 * `ds` must come from this library and `buf` must be writable for `len` values.
 */
enum LtsfStatus ltsf_dataset_copy(const struct LtsfDataset *ds,
                                  enum LtsfSplit split,
                                  double *buf,
                                  uintptr_t len);

/**
 * Releases a dataset; null is ignored.
 *
 * # Safety
 * `ds` must come from this library and not be used afterwards.
 */
void ltsf_dataset_free(struct LtsfDataset *ds);

/**
 * Fits the linear baseline on the training split of `ds`. `variant` 0
 * subtracts the last window state, 1 does not.
 *
 * # Safety
 * `ds` must come from this library and `out` a writable pointer.
 */
enum LtsfStatus ltsf_nlinear_fit(const struct LtsfDataset *ds,
                                 uintptr_t lookback,
                                 uintptr_t horizon,
                                 uint32_t variant,
                                 double lambda,
                                 struct LtsfNLinear **out);

/**
 * Number of trainable parameters, or 0 for a null handle.
 *
 * # Safety
 * `m` must be null or come from this library.
 */
uintptr_t ltsf_nlinear_param_count(const struct LtsfNLinear *m);

/**
 * Forecast horizon the model was fitted for, or 0 for a null handle.
 *
 * # Safety
 * `m` must be null or come from this library.
 */
uintptr_t ltsf_nlinear_horizon(const struct LtsfNLinear *m);

/**
 * Forecasts `batch` windows of shape `(lookback, dim)` into `out` of shape
 * `(batch, horizon, dim)`.
 *
 * # Safety
 * Buffers must hold `batch*lookback*dim` and `out_len` values.
 */
enum LtsfStatus ltsf_nlinear_predict(const struct LtsfNLinear *m,
                                     const double *windows,
                                     uintptr_t batch,
                                     double *out,
                                     uintptr_t out_len);

/**
 * Releases a baseline model; null is ignored.
 *
 * # Safety
 * `m` must come from this library and not be used afterwards.
 */
void ltsf_nlinear_free(struct LtsfNLinear *m);

/**
 * Loads a latent ODE checkpoint.
 *
 * # Safety
 * `path` must be a valid C string and `out` a writable pointer.
 */
enum LtsfStatus ltsf_linode_load(const char *path, struct LtsfLinOde **out);

/**
 * Writes `(lookback, dim)` of the model into `dims[0..2]`.
 *
 * # Safety
 * `m` must come from this library and `dims` must hold two values.
 */
enum LtsfStatus ltsf_linode_shape(const struct LtsfLinOde *m, uintptr_t *dims);

/**
 * Forecasts `horizon` steps for `batch` windows of shape `(lookback, dim)`.
 *
 * # Safety
 * Buffers must hold `batch*lookback*dim` and `out_len` values.
 */
enum LtsfStatus ltsf_linode_forecast(const struct LtsfLinOde *m,
                                     const double *windows,
                                     uintptr_t batch,
                                     uintptr_t horizon,
                                     double *out,
                                     uintptr_t out_len);

/**
 * Releases a latent ODE model; null is ignored.
 *
 * # Safety
 * `m` must come from this library and not be used afterwards.
 */
void ltsf_linode_free(struct LtsfLinOde *m);

/**
 * Matrix exponential of the row-major `n`x`n` matrix `a`.
 *
 * # Safety
 * `a` and `out` must hold `n*n` values.
 */
enum LtsfStatus ltsf_expm(uintptr_t n, const double *a, double *out);

/**
 * Matrix exponential of `a` and its directional derivative along `e`.
 *
 * # Safety
 * All four buffers must hold `n*n` values.
 */
enum LtsfStatus ltsf_expm_frechet(uintptr_t n,
                                  const double *a,
                                  const double *e,
                                  double *out_expm,
                                  double *out_frechet);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LTSF_H */
