#ifndef MMSPD_H
#define MMSPD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MmspdMode {
  MMSPD_MODE_STOCHASTIC = 0,
  MMSPD_MODE_GREEDY = 1,
} MmspdMode;

typedef enum MmspdStatus {
  MMSPD_STATUS_OK = 0,
  MMSPD_STATUS_NULL_POINTER = 1,
  MMSPD_STATUS_INVALID_ARGUMENT = 2,
  MMSPD_STATUS_IO = 3,
  MMSPD_STATUS_PARSE = 4,
  MMSPD_STATUS_BUFFER_TOO_SMALL = 5,
  MMSPD_STATUS_INTERNAL = 6,
} MmspdStatus;

// Opaque n-gram model handle.
typedef struct MmspdModel MmspdModel;

// Image context and text of a prompt. `image_ctx` may be null when
// `image_len` is zero.
typedef struct MmspdPrompt {
  const uint32_t *image_ctx;
  size_t image_len;
  const uint32_t *text;
  size_t text_len;
} MmspdPrompt;

// Speculative decoding settings. `lane` selects an independent random
// substream for the same seed.
typedef struct MmspdSpdConfig {
  size_t gamma;
  enum MmspdMode mode;
  size_t max_new_tokens;
  bool stop_on_eos;
  uint64_t seed;
  uint64_t lane;
} MmspdSpdConfig;

typedef struct MmspdStats {
  size_t emitted;
  size_t accepted;
  uint64_t target_calls;
  uint64_t draft_calls;
  // Emitted tokens per target call.
  double tau;
} MmspdStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *mmspd_version(void);

// Copies the last error message of the calling thread into `buf`, truncated
// and NUL-terminated. Returns the full message length excluding the NUL.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t mmspd_last_error(char *buf, size_t len);

// Loads an ngram-v1 model file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum MmspdStatus mmspd_model_load(const char *path, struct MmspdModel **out);

// Trains an additive-smoothed n-gram model. The corpus is `tokens`, split
// into `n_seqs` sequences whose lengths are given by `seq_lens`.
//
// # Safety
// `tokens` must hold the sum of `seq_lens` entries, `seq_lens` must hold
// `n_seqs` entries, and `out` must be valid.
enum MmspdStatus mmspd_model_train(const uint32_t *tokens,
                                   const size_t *seq_lens,
                                   size_t n_seqs,
                                   size_t vocab_size,
                                   uint32_t eos,
                                   size_t order,
                                   double alpha,
                                   struct MmspdModel **out);

// Writes the model as an ngram-v1 file.
//
// # Safety
// `model` must come from this library and `path` must be NUL-terminated.
enum MmspdStatus mmspd_model_save(const struct MmspdModel *model, const char *path);

// # Safety
// `model` must be null or a handle from this library not yet freed.
void mmspd_model_free(struct MmspdModel *model);

// # Safety
// `model` must be a live handle and `out_size`, `out_eos` valid pointers.
enum MmspdStatus mmspd_model_vocab(const struct MmspdModel *model,
                                   size_t *out_size,
                                   uint32_t *out_eos);

// Next-token distribution after `prefix`, written to `out_probs` which must
// hold exactly the vocabulary size.
//
// # Safety
// `prefix` must hold `prefix_len` entries and `out_probs` `out_len` entries.
enum MmspdStatus mmspd_model_next_dist(const struct MmspdModel *model,
                                       const uint32_t *prefix,
                                       size_t prefix_len,
                                       double *out_probs,
                                       size_t out_len);

// Speculative decoding with a multimodal target and a text-only draft.
//
// On `MMSPD_STATUS_BUFFER_TOO_SMALL` the required length is stored in
// `out_len`; generation is deterministic, so retrying with a larger buffer
// yields the same tokens.
//
// # Safety
// Handles must be live, `prompt` and `config` valid, `out_tokens` must hold
// `capacity` entries, and `out_len` must be valid. `stats` may be null.
enum MmspdStatus mmspd_spd_generate(const struct MmspdModel *target,
                                    const struct MmspdModel *draft,
                                    const struct MmspdPrompt *prompt,
                                    const struct MmspdSpdConfig *config,
                                    uint32_t *out_tokens,
                                    size_t capacity,
                                    size_t *out_len,
                                    struct MmspdStats *stats);

// Target-only decoding. `out_calls` may be null.
//
// # Safety
// Same buffer rules as [`mmspd_spd_generate`].
enum MmspdStatus mmspd_autoregressive_generate(const struct MmspdModel *target,
                                               const struct MmspdPrompt *prompt,
                                               size_t max_new_tokens,
                                               enum MmspdMode mode,
                                               bool stop_on_eos,
                                               uint64_t seed,
                                               uint32_t *out_tokens,
                                               size_t capacity,
                                               size_t *out_len,
                                               uint64_t *out_calls);

// Memory-bound speedup `tau / (c * gamma + 1)` for a draft costing `c`
// target runs.
//
// # Safety
// `out` must be a valid pointer.
enum MmspdStatus mmspd_mbsu(double tau, size_t gamma, double c, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MMSPD_H */
