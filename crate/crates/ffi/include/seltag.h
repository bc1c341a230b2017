#ifndef SELTAG_H
#define SELTAG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SeltagStatus {
  SELTAG_STATUS_OK = 0,
  SELTAG_STATUS_NULL_POINTER,
  SELTAG_STATUS_INVALID_UTF8,
  SELTAG_STATUS_PARSE,
  SELTAG_STATUS_INVALID_MODEL,
  SELTAG_STATUS_EMPTY_INPUT,
  SELTAG_STATUS_DEAD_END,
  SELTAG_STATUS_INVALID_ARGUMENT,
  SELTAG_STATUS_IO,
  SELTAG_STATUS_TARGET_UNACHIEVABLE,
  /**
   * Not enough ambiguous, correct or incorrect tokens for the request.
   */
  SELTAG_STATUS_INSUFFICIENT_DATA,
  SELTAG_STATUS_PANIC,
} SeltagStatus;

typedef enum SeltagMeasure {
  SELTAG_MEASURE_PROBABILITY = 0,
  SELTAG_MEASURE_SURPRISAL = 1,
  SELTAG_MEASURE_ENTROPY_CONTRIBUTION = 2,
  SELTAG_MEASURE_MARGIN = 3,
} SeltagMeasure;

typedef enum SeltagMode {
  SELTAG_MODE_ORACLE = 0,
  SELTAG_MODE_IGNORE = 1,
} SeltagMode;

/**
 * A trained or loaded model.
 */
typedef struct SeltagModel SeltagModel;

/**
 * The tagged tokens of one sentence.
 */
typedef struct SeltagTagging SeltagTagging;

/**
 * One token of a [`SeltagTagging`]. The strings are owned by the tagging.
 */
typedef struct SeltagToken {
  const char *word;
  /**
   * Chosen tag, reported even when the token was rejected.
   */
  const char *tag;
  double probability;
  /**
   * Value of the requested measure for the chosen tag.
   */
  double value;
  bool accepted;
  size_t hypotheses;
} SeltagToken;

typedef struct SeltagCalibration {
  double threshold;
  double s;
  double predicted_c;
  double predicted_i;
  double predicted_accuracy;
  double predicted_efficiency;
} SeltagCalibration;

typedef struct SeltagEvaluation {
  uint64_t tokens;
  uint64_t ambiguous_tokens;
  uint64_t correct_accepted;
  uint64_t correct_rejected;
  uint64_t incorrect_accepted;
  uint64_t incorrect_rejected;
  double s;
  double c;
  double i;
  double a;
  double accuracy_oracle;
  /**
   * NaN when every ambiguous token was rejected.
   */
  double accuracy_ignore;
  double efficiency;
  double overall_accuracy;
} SeltagEvaluation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or an empty string. Valid
 * until the next failing call on the same thread.
 */
const char *seltag_last_error(void);

/**
 * Parses a model from its JSON form.
 *
 * # Safety
 *
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SeltagStatus seltag_model_from_json(const char *json, struct SeltagModel **out);

/**
 * Loads a model file.
 *
 * # Safety
 *
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SeltagStatus seltag_model_load(const char *path, struct SeltagModel **out);

/**
 * Trains a model from tagged text (one sentence per line, `word/TAG`
 * tokens). `closed_tags` lists closed-class tags one per line and may be
 * null.
 *
 * # Safety
 *
 * String arguments must be NUL-terminated or null where allowed; `out` must
 * be a valid pointer.
 */
enum SeltagStatus seltag_model_train(const char *tagged,
                                     const char *closed_tags,
                                     struct SeltagModel **out);

/**
 * Serializes a model to JSON. Free the result with [`seltag_string_free`].
 *
 * # Safety
 *
 * `model` must come from this library and `out` be a valid pointer.
 */
enum SeltagStatus seltag_model_to_json(const struct SeltagModel *model, char **out);

/**
 * Writes a model to a file.
 *
 * # Safety
 *
 * `model` must come from this library and `path` be NUL-terminated.
 */
enum SeltagStatus seltag_model_save(const struct SeltagModel *model, const char *path);

/**
 * Number of tags, or 0 for a null model.
 *
 * # Safety
 *
 * `model` must be null or come from this library.
 */
size_t seltag_model_tag_count(const struct SeltagModel *model);

/**
 * Name of tag `index`, owned by the model; null if out of range.
 *
 * # Safety
 *
 * `model` must be null or come from this library.
 */
const char *seltag_model_tag_name(const struct SeltagModel *model, size_t index);

/**
 * # Safety
 *
 * `model` must be null or come from this library, and not be used again.
 */
void seltag_model_free(struct SeltagModel *model);

/**
 * # Safety
 *
 * `s` must be null or a string returned by this library.
 */
void seltag_string_free(char *s);

/**
 * Threshold under which `measure` accepts every token.
 */
double seltag_accept_all_threshold(uint32_t measure);

/**
 * Tags one whitespace-separated sentence and applies a threshold on
 * `measure`.
 *
 * # Safety
 *
 * `model` must come from this library, `sentence` be NUL-terminated and
 * `out` a valid pointer.
 */
enum SeltagStatus seltag_tag_sentence(const struct SeltagModel *model,
                                      const char *sentence,
                                      uint32_t measure,
                                      double threshold,
                                      struct SeltagTagging **out);

/**
 * Number of tokens, or 0 for a null tagging.
 *
 * # Safety
 *
 * `tagging` must be null or come from this library.
 */
size_t seltag_tagging_len(const struct SeltagTagging *tagging);

/**
 * Copies token `index` into `out`.
 *
 * # Safety
 *
 * `tagging` must come from this library and `out` be a valid pointer.
 */
enum SeltagStatus seltag_tagging_token(const struct SeltagTagging *tagging,
                                       size_t index,
                                       struct SeltagToken *out);

/**
 * # Safety
 *
 * `tagging` must be null or come from this library, and not be used again.
 */
void seltag_tagging_free(struct SeltagTagging *tagging);

/**
 * Chooses a threshold on `measure` reaching `target` accuracy on the tagged
 * text.
 *
 * # Safety
 *
 * `model` must come from this library, `tagged` be NUL-terminated and `out`
 * a valid pointer.
 */
enum SeltagStatus seltag_calibrate(const struct SeltagModel *model,
                                   const char *tagged,
                                   uint32_t measure,
                                   double target,
                                   uint32_t mode,
                                   struct SeltagCalibration *out);

/**
 * Evaluates a threshold on `measure` against the tagged text.
 *
 * # Safety
 *
 * `model` must come from this library, `tagged` be NUL-terminated and `out`
 * a valid pointer.
 */
enum SeltagStatus seltag_evaluate(const struct SeltagModel *model,
                                  const char *tagged,
                                  uint32_t measure,
                                  double threshold,
                                  struct SeltagEvaluation *out);

/**
 * Accuracy on ambiguous tokens when rejected tokens are tagged correctly by
 * someone else.
 */
double seltag_accuracy_oracle(double s, double i);

/**
 * Accuracy over retained ambiguous tokens only.
 *
 * # Safety
 *
 * `out` must be a valid pointer.
 */
enum SeltagStatus seltag_accuracy_ignore(double s, double c, double i, double *out);

/**
 * Share of ambiguous tokens that are not rejected.
 */
double seltag_efficiency(double s, double c, double i);

/**
 * Accuracy over all tokens given the ambiguous share `a` and the accuracy on
 * ambiguous tokens.
 */
double seltag_overall_accuracy(double a, double ambiguous_accuracy);

/**
 * Probability threshold making the same decisions as a margin threshold on
 * two-hypothesis tokens.
 */
double seltag_margin_to_prob_threshold(double margin);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SELTAG_H */
