#ifndef TEACHPLAY_H
#define TEACHPLAY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes.
 */
typedef enum TpStatus {
  TP_STATUS_OK = 0,
  TP_STATUS_NULL_POINTER = 1,
  TP_STATUS_INVALID_UTF8 = 2,
  TP_STATUS_INVALID_ARGUMENT = 3,
  TP_STATUS_DATA_ERROR = 4,
  TP_STATUS_RUNTIME_ERROR = 5,
  TP_STATUS_PANIC = 6,
} TpStatus;

typedef enum TpRougeVariant {
  TP_ROUGE_VARIANT_R1 = 0,
  TP_ROUGE_VARIANT_R2 = 1,
  TP_ROUGE_VARIANT_RL = 2,
} TpRougeVariant;

/**
 * Opaque passage.
 */
typedef struct TpPassage TpPassage;

/**
 * Opaque teacher policy.
 */
typedef struct TpPolicy TpPolicy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Free with
 * `tp_string_free`.
 */
char *tp_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, freed once.
 */
void tp_string_free(char *s);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tp_version(void);

/**
 * Untrained policy (all weights zero).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TpStatus tp_policy_new(struct TpPolicy **out);

/**
 * Load a policy checkpoint file.
 *
 * # Safety
 * `path` must be a NUL-terminated string, `out` a valid pointer.
 */
enum TpStatus tp_policy_load(const char *path, struct TpPolicy **out);

/**
 * Parse a policy from checkpoint JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string, `out` a valid pointer.
 */
enum TpStatus tp_policy_from_json(const char *json, struct TpPolicy **out);

/**
 * Checkpoint JSON of a policy. Free the string with `tp_string_free`.
 *
 * # Safety
 * `policy` must be a live handle, `out` a valid pointer.
 */
enum TpStatus tp_policy_to_json(const struct TpPolicy *policy, char **out);

/**
 * # Safety
 * `policy` must be NULL or a handle from this library, freed once.
 */
void tp_policy_free(struct TpPolicy *policy);

/**
 * Build a passage from raw text.
 *
 * # Safety
 * `id` and `text` must be NUL-terminated strings, `out` a valid pointer.
 */
enum TpStatus tp_passage_new(const char *id, const char *text, struct TpPassage **out);

/**
 * Number of sentences the passage was split into.
 *
 * # Safety
 * `passage` must be a live handle, `out` a valid pointer.
 */
enum TpStatus tp_passage_sentence_count(const struct TpPassage *passage, size_t *out);

/**
 * # Safety
 * `passage` must be NULL or a handle from this library, freed once.
 */
void tp_passage_free(struct TpPassage *passage);

/**
 * ROUGE F1 of `candidate` against `reference`.
 *
 * # Safety
 * Strings must be NUL-terminated, `out` a valid pointer.
 */
enum TpStatus tp_rouge(const char *reference,
                       const char *candidate,
                       enum TpRougeVariant variant,
                       double *out);

/**
 * Coverage reward of `utterance` given `history`, clipped at `cov_clip`.
 * `out_raw` may be NULL.
 *
 * # Safety
 * `passage` must be a live handle, strings NUL-terminated, `out` valid.
 */
enum TpStatus tp_coverage_reward(const struct TpPassage *passage,
                                 const char *history,
                                 const char *utterance,
                                 double cov_clip,
                                 double *out,
                                 double *out_raw);

/**
 * `beta * r_cov + (1 - beta) * r_coh`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TpStatus tp_mixed_reward(double r_cov, double r_coh, double beta, double *out);

/**
 * One self-play conversation with the rule-based student, scored with the
 * lexical coherence proxy, as JSON `{"passage_id", "turns", "rewards"}`.
 *
 * # Safety
 * Handles must be live, `out` a valid pointer. Free the string with
 * `tp_string_free`.
 */
enum TpStatus tp_selfplay_json(const struct TpPassage *passage,
                               const struct TpPolicy *policy,
                               size_t n_turns,
                               uint64_t seed,
                               bool greedy,
                               double beta,
                               char **out);

/**
 * Pearson correlation of two rating arrays of length `n`.
 *
 * # Safety
 * `a` and `b` must point to `n` doubles each, `out` a valid pointer.
 */
enum TpStatus tp_pearson(const double *a, const double *b, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TEACHPLAY_H */
