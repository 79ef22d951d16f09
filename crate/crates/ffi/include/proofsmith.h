#ifndef PROOFSMITH_H
#define PROOFSMITH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes shared by every entry point.
typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_INVALID_UTF8 = 2,
  PS_STATUS_INVALID_ARGUMENT = 3,
  PS_STATUS_ORACLE_UNAVAILABLE = 4,
  PS_STATUS_PROTOCOL = 5,
  PS_STATUS_IO = 6,
  PS_STATUS_FORMAT = 7,
  PS_STATUS_INTERNAL = 99,
} PsStatus;

// An embedded fact index, tied to the oracle that built it.
typedef struct PsKb PsKb;

// A generation / embedding / judging backend.
typedef struct PsOracle PsOracle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next call on this thread; do not free it.
const char *ps_last_error_message(void);

// Releases a string returned by this library. Null is a no-op.
//
// # Safety
// `s` must come from this library and not have been freed.
void ps_string_free(char *s);

// Library version, statically allocated.
const char *ps_version(void);

// Deterministic offline oracle.
//
// # Safety
// `out` must be writable.
enum PsStatus ps_oracle_mock_new(struct PsOracle **out);

// HTTP client for a model sidecar at `base_url`. No request is made here.
//
// # Safety
// `base_url` must be a valid C string and `out` writable.
enum PsStatus ps_oracle_remote_new(const char *base_url, struct PsOracle **out);

// # Safety
// `oracle` must come from a `ps_oracle_*_new` call, or be null.
void ps_oracle_free(struct PsOracle *oracle);

// Sentence BLEU-4 of `candidate` against `reference` after normalization.
//
// # Safety
// Both strings must be valid C strings and `out` writable.
enum PsStatus ps_bleu4(const char *candidate, const char *reference, double *out);

// Token-set Jaccard similarity after normalization.
//
// # Safety
// Both strings must be valid C strings and `out` writable.
enum PsStatus ps_jaccard(const char *a, const char *b, double *out);

// Embeds the facts in `paths` (plain text or TSV files) with `oracle`.
//
// # Safety
// `paths` must point to `n_paths` valid C strings; `out` must be writable.
enum PsStatus ps_kb_new(const struct PsOracle *oracle,
                        const char *const *paths,
                        size_t n_paths,
                        struct PsKb **out);

// Number of facts in the index.
//
// # Safety
// `kb` must be a live handle or null (which yields 0).
size_t ps_kb_len(const struct PsKb *kb);

// # Safety
// `kb` must come from `ps_kb_new`, or be null.
void ps_kb_free(struct PsKb *kb);

// Runs one proof search and writes a JSON array of proof records to `out`.
//
// `method` is `level`, `beam`, `none` or `facts`; `facts` needs `kb`, the
// others ignore it. `config_json` is a search-config object (unknown keys
// are rejected) or null for defaults.
//
// # Safety
// String arguments must be valid C strings (`config_json` may be null),
// handles live, and `out` writable.
enum PsStatus ps_prove(const struct PsOracle *oracle,
                       const struct PsKb *kb,
                       const char *method,
                       const char *premise,
                       const char *hypothesis,
                       const char *config_json,
                       char **out);

// Scores one proof record (JSON object) and writes its metrics as JSON.
// `mode` is `plain`, `fact_concat`, or null for `plain`.
//
// # Safety
// `proof_json` must be a valid C string, `mode` a valid C string or null,
// `oracle` live and `out` writable.
enum PsStatus ps_score_proof(const struct PsOracle *oracle,
                             const char *proof_json,
                             const char *mode,
                             char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROOFSMITH_H */
