#ifndef CSSR_H
#define CSSR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum CssrStatus {
  CSSR_STATUS_OK = 0,
  CSSR_STATUS_NULL_POINTER = 1,
  CSSR_STATUS_INVALID_INPUT = 2,
  CSSR_STATUS_DEGENERATE_ALPHABET = 3,
  /**
   * Prediction from a history that maps to no state; the output holds the
   * stationary symbol distribution instead.
   */
  CSSR_STATUS_UNSYNCHRONIZED = 4,
  CSSR_STATUS_BUFFER_TOO_SMALL = 5,
  CSSR_STATUS_INTERNAL = 6,
} CssrStatus;

typedef enum CssrTestKind {
  CSSR_TEST_KIND_KS = 0,
  CSSR_TEST_KIND_CHI_SQUARED = 1,
} CssrTestKind;

/**
 * Opaque machine handle.
 */
typedef struct CssrMachine CssrMachine;

/**
 * Inference parameters; fill with [`cssr_infer_config_default`].
 */
typedef struct CssrInferConfig {
  size_t l_max;
  double alpha;
  /**
   * A [`CssrTestKind`] value.
   */
  uint32_t test;
  uint64_t min_count;
} CssrInferConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into the library from this thread.
 */
const char *cssr_last_error_message(void);

/**
 * Writes the default parameters (`l_max` 5, `alpha` 0.001, KS test,
 * `min_count` 1).
 *
 * # Safety
 * `out` must be null or point to writable memory for one config.
 */
enum CssrStatus cssr_infer_config_default(struct CssrInferConfig *out);

/**
 * Infers a machine from text data, one sequence per line, one character
 * per symbol. `alphabet` lists the symbols in order (e.g. `"AB"`) or is
 * null to infer them from the data.
 *
 * # Safety
 * `data` and `alphabet` must be null or nul-terminated strings; `config`
 * must be null or point to a config; `out` must be null or writable.
 */
enum CssrStatus cssr_infer(const char *data,
                           const char *alphabet,
                           const struct CssrInferConfig *config,
                           struct CssrMachine **out);

/**
 * Parses a machine or process spec in the text format.
 *
 * # Safety
 * `text` must be null or a nul-terminated string; `out` must be null or
 * writable.
 */
enum CssrStatus cssr_machine_from_text(const char *text, struct CssrMachine **out);

/**
 * Releases a machine; null is ignored.
 *
 * # Safety
 * `machine` must be null or a handle from this library not yet freed.
 */
void cssr_machine_free(struct CssrMachine *machine);

/**
 * # Safety
 * `machine` must be null or a live handle; `out` null or writable.
 */
enum CssrStatus cssr_machine_num_states(const struct CssrMachine *machine, size_t *out);

/**
 * Entropy rate in bits per symbol.
 *
 * # Safety
 * `machine` must be null or a live handle; `out` null or writable.
 */
enum CssrStatus cssr_machine_entropy_rate(const struct CssrMachine *machine, double *out);

/**
 * Serializes the machine; release the string with [`cssr_string_free`].
 *
 * # Safety
 * `machine` must be null or a live handle; `out` null or writable.
 */
enum CssrStatus cssr_machine_to_text(const struct CssrMachine *machine, char **out);

/**
 * Samples `n` symbols starting from the stationary distribution and
 * renders them as text.
 *
 * # Safety
 * `machine` must be null or a live handle; `out` null or writable.
 */
enum CssrStatus cssr_machine_simulate(const struct CssrMachine *machine,
                                      size_t n,
                                      uint64_t seed,
                                      char **out);

/**
 * Total variation distance between the two machines' distributions over
 * words of length `len`.
 *
 * # Safety
 * `a` and `b` must be null or live handles; `out` null or writable.
 */
enum CssrStatus cssr_machine_tv_distance(const struct CssrMachine *a,
                                         const struct CssrMachine *b,
                                         size_t len,
                                         double *out);

/**
 * Next-symbol distribution after `history` (text, one character per
 * symbol), written to `probs[0..k]`. Returns `UNSYNCHRONIZED` with the
 * stationary marginal in `probs` when the history maps to no state.
 *
 * # Safety
 * `machine` must be null or a live handle; `history` null or a
 * nul-terminated string; `probs` null or writable for `probs_len` doubles.
 */
enum CssrStatus cssr_machine_predict(const struct CssrMachine *machine,
                                     const char *history,
                                     double *probs,
                                     size_t probs_len);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void cssr_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* CSSR_H */
