#ifndef MISINFO_REFINE_H
#define MISINFO_REFINE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MrStatus {
  MR_STATUS_OK = 0,
  MR_STATUS_NULL_POINTER = 1,
  MR_STATUS_INVALID_UTF8 = 2,
  MR_STATUS_INVALID_ARGUMENT = 3,
  MR_STATUS_IO = 4,
  MR_STATUS_CONFIG = 5,
  MR_STATUS_SCHEMA = 6,
  MR_STATUS_NO_WEAK_LABELS = 7,
  MR_STATUS_PANIC = 8,
  MR_STATUS_INTERNAL = 9,
} MrStatus;

/**
 * Pipeline stages runnable through [`mr_run`].
 */
typedef enum MrCommand {
  MR_COMMAND_INGEST = 0,
  MR_COMMAND_WEAKLABEL = 1,
  MR_COMMAND_COMMUNITIES = 2,
  MR_COMMAND_TRAIN = 3,
  MR_COMMAND_REFINE = 4,
  MR_COMMAND_EVALUATE = 5,
  MR_COMMAND_FINEGRAINED = 6,
  MR_COMMAND_SYNTH = 7,
} MrCommand;

typedef enum MrModelState {
  MR_MODEL_STATE_LOW_CONFIDENCE = 0,
  MR_MODEL_STATE_CONSISTENT = 1,
  MR_MODEL_STATE_INCONSISTENT = 2,
} MrModelState;

typedef enum MrSocialState {
  MR_SOCIAL_STATE_UNKNOWN = 0,
  MR_SOCIAL_STATE_CONSISTENT = 1,
  MR_SOCIAL_STATE_INCONSISTENT = 2,
} MrSocialState;

typedef enum MrAction {
  MR_ACTION_RETAIN = 0,
  MR_ACTION_FLIP = 1,
  MR_ACTION_QUERY = 2,
  MR_ACTION_REMOVE = 3,
} MrAction;

/**
 * Run configuration handle.
 */
typedef struct MrConfig MrConfig;

/**
 * Trained detector handle.
 */
typedef struct MrModel MrModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *mr_last_error(void);

/**
 * Library version, a static NUL-terminated string.
 */
const char *mr_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void mr_string_free(char *s);

/**
 * Default configuration.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MrStatus mr_config_new(struct MrConfig **out);

/**
 * Configuration from a JSON document; missing keys take their defaults.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MrStatus mr_config_from_json(const char *json, struct MrConfig **out);

/**
 * Sets one value by dotted key. `value` is read as JSON when it parses,
 * otherwise as a string. The handle is unchanged on failure.
 *
 * # Safety
 * `config` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum MrStatus mr_config_set(struct MrConfig *config, const char *key, const char *value);

/**
 * Sets every seed.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum MrStatus mr_config_set_seed(struct MrConfig *config, uint64_t seed);

/**
 * Pretty JSON of the configuration; release with [`mr_string_free`].
 *
 * # Safety
 * `config` must be a live handle and `out` a valid pointer.
 */
enum MrStatus mr_config_to_json(const struct MrConfig *config, char **out);

/**
 * # Safety
 * `config` must be null or a handle not yet freed.
 */
void mr_config_free(struct MrConfig *config);

/**
 * Runs one pipeline stage, reading the default input files from
 * `data_dir` and writing artifacts into `out_dir`. Interactive refinement
 * is not available here; the configured mode must be autonomous.
 *
 * # Safety
 * `config` must be a live handle; the directories NUL-terminated strings.
 */
enum MrStatus mr_run(const struct MrConfig *config,
                     enum MrCommand command,
                     const char *data_dir,
                     const char *out_dir);

/**
 * Loads a detector written by `train` or `refine`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MrStatus mr_model_load(const char *path, struct MrModel **out);

/**
 * Misinformation-probability threshold selected on validation data.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum MrStatus mr_model_threshold(const struct MrModel *model, double *out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void mr_model_free(struct MrModel *model);

/**
 * Natural-log entropy of a probability vector.
 *
 * # Safety
 * `probs` must point to `len` doubles and `out` be a valid pointer.
 */
enum MrStatus mr_entropy(const double *probs, size_t len, double *out);

/**
 * The action the refinement policy takes for a pair of states.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MrStatus mr_assign_action(enum MrModelState m, enum MrSocialState s, enum MrAction *out);

/**
 * Binary label of a fine-grained label name: 1 misinformation, 0 not.
 *
 * # Safety
 * `label` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MrStatus mr_binarize_fine_label(const char *label, uint8_t *out);

/**
 * Average precision of `scores` against binary `labels`.
 *
 * # Safety
 * `scores` and `labels` must point to `len` elements; `out` must be valid.
 */
enum MrStatus mr_average_precision(const double *scores,
                                   const uint8_t *labels,
                                   size_t len,
                                   double *out);

/**
 * Area under the ROC curve, ties counted half.
 *
 * # Safety
 * `scores` and `labels` must point to `len` elements; `out` must be valid.
 */
enum MrStatus mr_roc_auc(const double *scores, const uint8_t *labels, size_t len, double *out);

/**
 * Cohen's kappa between two labelings of the same items.
 *
 * # Safety
 * `a` and `b` must point to `len` elements; `out` must be valid.
 */
enum MrStatus mr_cohens_kappa(const uint32_t *a, const uint32_t *b, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MISINFO_REFINE_H */
