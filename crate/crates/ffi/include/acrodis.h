#ifndef ACRODIS_H
#define ACRODIS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AcrodisStatus {
  ACRODIS_STATUS_OK = 0,
  ACRODIS_STATUS_NULL_POINTER = 1,
  ACRODIS_STATUS_INVALID_UTF8 = 2,
  ACRODIS_STATUS_IO = 3,
  ACRODIS_STATUS_FORMAT = 4,
  ACRODIS_STATUS_INVARIANT = 5,
  ACRODIS_STATUS_INVALID_ARGUMENT = 6,
  ACRODIS_STATUS_TRAINING = 7,
  ACRODIS_STATUS_NOT_FOUND = 8,
  ACRODIS_STATUS_PANIC = 99,
} AcrodisStatus;

typedef enum AcrodisMode {
  ACRODIS_MODE_DM = 0,
  ACRODIS_MODE_DBOW = 1,
} AcrodisMode;

/**
 * Records loaded from a dataset file.
 */
typedef struct AcrodisDataset AcrodisDataset;

typedef struct AcrodisModel AcrodisModel;

typedef struct AcrodisResult AcrodisResult;

/**
 * Training settings. Fill with [`acrodis_train_config_default`] and adjust.
 */
typedef struct AcrodisTrainConfig {
  enum AcrodisMode mode;
  uint32_t dim;
  uint32_t window;
  uint32_t epochs;
  float learning_rate;
  uint64_t seed;
} AcrodisTrainConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *acrodis_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void acrodis_string_free(char *s);

/**
 * Defaults for `mode`: 500 dimensions for DM, 200 for DBOW, window 5,
 * 12 epochs, learning rate 0.025, seed 0.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum AcrodisStatus acrodis_train_config_default(enum AcrodisMode mode,
                                                struct AcrodisTrainConfig *out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for writes.
 */
enum AcrodisStatus acrodis_dataset_load(const char *path, struct AcrodisDataset **out);

/**
 * Number of records; 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
size_t acrodis_dataset_len(const struct AcrodisDataset *ds);

/**
 * Copies the acronym of record `index` into a new string.
 *
 * # Safety
 * `ds` must be a live dataset handle and `out` valid for writes.
 */
enum AcrodisStatus acrodis_dataset_acronym(const struct AcrodisDataset *ds,
                                           size_t index,
                                           char **out);

/**
 * # Safety
 * `ds` must be null or a handle from [`acrodis_dataset_load`], freed once.
 */
void acrodis_dataset_free(struct AcrodisDataset *ds);

/**
 * Trains a model over every context of one acronym in the dataset.
 *
 * # Safety
 * Pointers must be valid; `cfg` may be null for DM defaults.
 */
enum AcrodisStatus acrodis_model_train(const struct AcrodisDataset *ds,
                                       const char *acronym,
                                       const struct AcrodisTrainConfig *cfg,
                                       struct AcrodisModel **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for writes.
 */
enum AcrodisStatus acrodis_model_load(const char *path, struct AcrodisModel **out);

/**
 * # Safety
 * `model` must be a live model handle and `path` a NUL-terminated string.
 */
enum AcrodisStatus acrodis_model_save(const struct AcrodisModel *model, const char *path);

/**
 * Embedding size; 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live model handle.
 */
size_t acrodis_model_dim(const struct AcrodisModel *model);

/**
 * Number of document vectors; 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live model handle.
 */
size_t acrodis_model_n_docs(const struct AcrodisModel *model);

/**
 * # Safety
 * `model` must be null or a model handle from this library, freed once.
 */
void acrodis_model_free(struct AcrodisModel *model);

/**
 * Disambiguates `acronym` in `context` by training over the record's
 * contexts plus the query.
 *
 * # Safety
 * Pointers must be valid; `cfg` may be null for DM defaults.
 */
enum AcrodisStatus acrodis_disambiguate(const struct AcrodisDataset *ds,
                                        const char *acronym,
                                        const char *context,
                                        const struct AcrodisTrainConfig *cfg,
                                        struct AcrodisResult **out);

/**
 * Disambiguates with a model trained without the query, inferring the
 * query vector.
 *
 * # Safety
 * All pointers must be valid.
 */
enum AcrodisStatus acrodis_disambiguate_with_model(const struct AcrodisDataset *ds,
                                                   const struct AcrodisModel *model,
                                                   const char *acronym,
                                                   const char *context,
                                                   struct AcrodisResult **out);

/**
 * Selected expansion, borrowed from the result.
 *
 * # Safety
 * `res` must be null or a live result handle.
 */
const char *acrodis_result_selected(const struct AcrodisResult *res);

/**
 * Number of ranked expansions; 0 for a null handle.
 *
 * # Safety
 * `res` must be null or a live result handle.
 */
size_t acrodis_result_len(const struct AcrodisResult *res);

/**
 * Expansion at `rank` (0 = best), borrowed from the result; null when out
 * of range.
 *
 * # Safety
 * `res` must be null or a live result handle.
 */
const char *acrodis_result_expansion(const struct AcrodisResult *res, size_t rank);

/**
 * # Safety
 * `res` must be a live result handle and `out` valid for writes.
 */
enum AcrodisStatus acrodis_result_similarity(const struct AcrodisResult *res,
                                             size_t rank,
                                             double *out);

/**
 * The result as one JSON line, in a new string.
 *
 * # Safety
 * `res` must be a live result handle and `out` valid for writes.
 */
enum AcrodisStatus acrodis_result_to_json(const struct AcrodisResult *res, char **out);

/**
 * # Safety
 * `res` must be null or a result handle from this library, freed once.
 */
void acrodis_result_free(struct AcrodisResult *res);

/**
 * Whether `phrase` can expand `acronym` under the default rules and stop
 * words.
 *
 * # Safety
 * Strings must be NUL-terminated and `out` valid for writes.
 */
enum AcrodisStatus acrodis_matches_expansion(const char *acronym, const char *phrase, bool *out);

/**
 * Ratcliff/Obershelp similarity of two strings after normalization.
 *
 * # Safety
 * Strings must be NUL-terminated and `out` valid for writes.
 */
enum AcrodisStatus acrodis_sequence_ratio(const char *a, const char *b, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACRODIS_H */
