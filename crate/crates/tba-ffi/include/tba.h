#ifndef TBA_H
#define TBA_H

/* Generated by cbindgen from the tba-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every FFI call.
typedef enum TbaStatus {
  // Success.
  TBA_STATUS_OK = 0,
  // A required pointer argument was null.
  TBA_STATUS_NULL_POINTER = 1,
  // Input text was not valid UTF-8.
  TBA_STATUS_INVALID_UTF8 = 2,
  // The input failed to parse or was otherwise malformed.
  TBA_STATUS_PARSE_ERROR = 3,
  // The free-variable feasibility cap was exceeded.
  TBA_STATUS_CAP_EXCEEDED = 4,
  // Filesystem failure while writing solutions.
  TBA_STATUS_IO_ERROR = 5,
  // Unexpected internal failure.
  TBA_STATUS_INTERNAL_ERROR = 6,
} TbaStatus;

// Opaque solver handle: a prepared problem plus engine settings.
typedef struct TbaSolver TbaSolver;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses a script or theory file (auto-detected) into a solver handle.
//
// # Safety
// `text` must be a valid NUL-terminated string; `out` must be a valid
// pointer to receive the handle.
enum TbaStatus tba_solver_new(const char *text, struct TbaSolver **out);

// Sets the log2 chunk size used by the engine.
//
// # Safety
// `solver` must be a live handle from [`tba_solver_new`].
enum TbaStatus tba_solver_set_chunk_bits(struct TbaSolver *solver, uint32_t bits);

// Sets the worker count; 0 uses all cores.
//
// # Safety
// `solver` must be a live handle from [`tba_solver_new`].
enum TbaStatus tba_solver_set_jobs(struct TbaSolver *solver, uint32_t jobs);

// Sets the feasibility cap on free variables (at most 40).
//
// # Safety
// `solver` must be a live handle from [`tba_solver_new`].
enum TbaStatus tba_solver_set_max_vars(struct TbaSolver *solver, uint32_t cap);

// Selects the naive oracle backend (nonzero) or the word-parallel engine.
//
// # Safety
// `solver` must be a live handle from [`tba_solver_new`].
enum TbaStatus tba_solver_set_naive(struct TbaSolver *solver, uint32_t naive);

// Number of letters left free after assumptions.
//
// # Safety
// `solver` must be a live handle from [`tba_solver_new`].
uint32_t tba_solver_free_letters(const struct TbaSolver *solver);

// Counts the models; the count is returned as a decimal string to release
// with [`tba_string_free`].
//
// # Safety
// `solver` must be a live handle; `count_out` must be valid.
enum TbaStatus tba_solver_count(struct TbaSolver *solver, char **count_out);

// Writes the solution file to `path` (same format as the CLI).
//
// # Safety
// `solver` must be a live handle; `path` a valid NUL-terminated string.
enum TbaStatus tba_solver_write_solutions(struct TbaSolver *solver, const char *path);

// Runs the partitioned counting procedure of a theory handle; labeled and
// unlabeled totals come back as decimal strings.
//
// # Safety
// `solver` must be a live handle built from a theory file with a partition
// block; the out pointers must be valid.
enum TbaStatus tba_solver_count_partitions(struct TbaSolver *solver,
                                           char **labeled_out,
                                           char **unlabeled_out);

// The most recent error message on this thread, as a fresh allocation to
// release with [`tba_string_free`]; null when no error was recorded.
char *tba_last_error_message(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must have been returned by a tba function and not freed before.
void tba_string_free(char *s);

// Releases a solver handle.
//
// # Safety
// `solver` must have been returned by [`tba_solver_new`] and not freed
// before.
void tba_solver_free(struct TbaSolver *solver);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TBA_H */
