#ifndef REVQ_H
#define REVQ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RevqDialect {
  REVQ_DIALECT_QUANTUM = 0,
  REVQ_DIALECT_CLASSICAL = 1,
} RevqDialect;

typedef enum RevqStatus {
  REVQ_STATUS_OK = 0,
  REVQ_STATUS_NULL_ARGUMENT = 1,
  REVQ_STATUS_INVALID_UTF8 = 2,
  /**
   * Lexing, parsing or type checking failed; the message is a diagnostic.
   */
  REVQ_STATUS_REJECTED = 3,
  /**
   * Evaluation failed or the program has nothing to run.
   */
  REVQ_STATUS_EVAL = 4,
  /**
   * The request does not apply to this program, e.g. a matrix of a
   * classical program.
   */
  REVQ_STATUS_UNSUPPORTED = 5,
  REVQ_STATUS_PANIC = 6,
} RevqStatus;

/**
 * A parsed and type-checked program.
 */
typedef struct RevqProgram RevqProgram;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *revq_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next call into the library on the same thread.
 */
const char *revq_last_error(void);

/**
 * Parses and type-checks `source`. A leading `dialect` header overrides
 * `dialect`. On success `*out` owns a new program handle.
 *
 * # Safety
 * `source` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RevqStatus revq_program_parse(const char *source,
                                   enum RevqDialect dialect,
                                   struct RevqProgram **out);

/**
 * Releases a program handle. NULL is ignored.
 *
 * # Safety
 * `p` must come from `revq_program_parse` and not be used afterwards.
 */
void revq_program_free(struct RevqProgram *p);

/**
 * Dialect the program was checked in.
 *
 * # Safety
 * `p` must be a live program handle and `out` a valid pointer.
 */
enum RevqStatus revq_program_dialect(const struct RevqProgram *p, enum RevqDialect *out);

/**
 * Applies the entry iso to `arg`, or evaluates `main` when `arg` is NULL.
 * `fuel` bounds classical evaluation. `*out` receives the printed result.
 *
 * # Safety
 * `p` must be a live handle, `arg` NULL or a NUL-terminated string, and
 * `out` a valid pointer.
 */
enum RevqStatus revq_program_run(const struct RevqProgram *p,
                                 const char *arg,
                                 uint64_t fuel,
                                 char **out);

/**
 * Applies the inverse of the entry iso to `value`.
 *
 * # Safety
 * As for `revq_program_run`, with `value` non-NULL.
 */
enum RevqStatus revq_program_invert(const struct RevqProgram *p,
                                    const char *value,
                                    uint64_t fuel,
                                    char **out);

/**
 * Matrix of the entry iso of a quantum program as JSON
 * `{"rows", "cols", "entries": [[row, col, re, im], ...]}`.
 *
 * # Safety
 * `p` must be a live handle and `out` a valid pointer.
 */
enum RevqStatus revq_program_matrix_json(const struct RevqProgram *p, size_t cutoff, char **out);

/**
 * Releases a string returned by the library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void revq_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REVQ_H */
