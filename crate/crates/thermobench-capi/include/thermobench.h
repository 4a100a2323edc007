#ifndef THERMOBENCH_H
#define THERMOBENCH_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of a fallible call. Values match the CLI exit codes.
 */
typedef enum TbStatus {
  /**
   * Success.
   */
  TB_STATUS_OK = 0,
  /**
   * Invalid argument, spec, or serialized payload.
   */
  TB_STATUS_CONFIG = 2,
  /**
   * Dataset, schema, or I/O problem.
   */
  TB_STATUS_DATA = 3,
  /**
   * Numerical failure (non-convergence, singular system).
   */
  TB_STATUS_NUMERICAL = 4,
} TbStatus;

/**
 * Opaque handle to a cleaned, round-averaged dataset.
 */
typedef struct TbDataset TbDataset;

/**
 * Opaque handle to a fitted model together with test-split metrics.
 */
typedef struct TbModel TbModel;

/**
 * MAE/MSE/RMSE triple over the rows the model was evaluated on.
 */
typedef struct TbMetrics {
  double mae;
  double mse;
  double rmse;
  /**
   * Number of evaluated rows.
   */
  uint64_t n;
} TbMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *tb_version(void);

/**
 * Message describing the most recent error on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *tb_last_error(void);

/**
 * Load a dataset from a CSV file, clean it, and average the measurement
 * rounds. `schema_path` may be null to use the built-in column roles.
 * On success writes a new handle to `out`.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string; `out` must be a valid
 * pointer to a writable pointer slot.
 */
enum TbStatus tb_dataset_load(const char *path, const char *schema_path, struct TbDataset **out);

/**
 * Generate the built-in synthetic dataset (cleaned and round-averaged)
 * with the given generator seed. On success writes a new handle to `out`.
 *
 * # Safety
 * `out` must be a valid pointer to a writable pointer slot.
 */
enum TbStatus tb_dataset_generate(uint64_t seed, struct TbDataset **out);

/**
 * Number of rows in a dataset handle; 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live handle from this library.
 */
uint64_t tb_dataset_rows(const struct TbDataset *ds);

/**
 * Release a dataset handle. Null is ignored.
 *
 * # Safety
 * `ds` must be null or a live handle that is not used afterwards.
 */
void tb_dataset_free(struct TbDataset *ds);

/**
 * Fit a model on the training side of a seeded split and evaluate it on
 * the held-out side. `recipe` is a preset name (a-f or full38);
 * `spec_json` is a serialized estimator spec, for example
 * `{"family":"linear","lambda":0.0}`. On success writes a model handle
 * carrying the test metrics to `out`.
 *
 * # Safety
 * `ds` must be a live dataset handle; `recipe` and `spec_json` must be
 * valid NUL-terminated strings; `out` must be writable.
 */
enum TbStatus tb_fit(const struct TbDataset *ds,
                     const char *recipe,
                     const char *spec_json,
                     uint64_t seed,
                     struct TbModel **out);

/**
 * Copy the model's held-out metrics into `out`. Fails with `Config` if
 * the model was loaded from JSON and carries no metrics.
 *
 * # Safety
 * `model` must be a live model handle; `out` must be writable.
 */
enum TbStatus tb_model_metrics(const struct TbModel *model, struct TbMetrics *out);

/**
 * Predict one row of already-engineered features. `len` must equal the
 * model's feature count.
 *
 * # Safety
 * `model` must be a live handle; `features` must point to `len` doubles;
 * `out` must be writable.
 */
enum TbStatus tb_model_predict(const struct TbModel *model,
                               const double *features,
                               uintptr_t len,
                               double *out);

/**
 * Serialize a model to a JSON artifact. The returned string must be
 * released with `tb_string_free`.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum TbStatus tb_model_to_json(const struct TbModel *model, char **out);

/**
 * Load a model from a JSON artifact produced by `tb_model_to_json`.
 * The handle carries no evaluation metrics.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string; `out` must be writable.
 */
enum TbStatus tb_model_from_json(const char *json, struct TbModel **out);

/**
 * Release a model handle. Null is ignored.
 *
 * # Safety
 * `model` must be null or a live handle that is not used afterwards.
 */
void tb_model_free(struct TbModel *model);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a pointer returned by `tb_model_to_json`.
 */
void tb_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THERMOBENCH_H */
