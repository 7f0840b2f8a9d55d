#ifndef NILPIECE_H
#define NILPIECE_H

/* Generated by cbindgen from the nilpiece-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every fallible call.
 */
typedef enum NpStatus {
  NP_STATUS_OK = 0,
  NP_STATUS_ERR_NULL_POINTER = 1,
  NP_STATUS_ERR_INVALID_ARGUMENT = 2,
  NP_STATUS_ERR_PARSE = 3,
  NP_STATUS_ERR_PRECONDITION = 4,
  NP_STATUS_ERR_INFEASIBLE = 5,
  NP_STATUS_ERR_VERDICT = 6,
  NP_STATUS_ERR_INTERNAL = 7,
} NpStatus;

/**
 * Opaque handle to a matrix over a finite field.
 */
typedef struct NpMatrix NpMatrix;

/**
 * Opaque handle to a formed space.
 */
typedef struct NpSpace NpSpace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread.
 */
const char *np_last_error_message(void);

/**
 * Builds the standard split space of a kind (0 = GL, 1 = Sp, 2 = O) over
 * F_{p^k}.
 */
enum NpStatus np_space_split(int32_t kind,
                             uintptr_t dim,
                             uint32_t p,
                             uint32_t k,
                             struct NpSpace **out);

/**
 * Parses a space descriptor (`kind dim p k` plus optional form blocks).
 */
enum NpStatus np_space_from_descriptor(const char *text, struct NpSpace **out);

void np_space_free(struct NpSpace *space);

/**
 * Parses a matrix in the text format `rows cols p k` plus entries.
 */
enum NpStatus np_matrix_from_text(const char *text, struct NpMatrix **out);

void np_matrix_free(struct NpMatrix *matrix);

/**
 * Classifies a nilpotent (unipotent when `unipotent != 0`) element;
 * on success writes a JSON document describing label, subpiece, and
 * filtration steps.
 */
enum NpStatus np_classify_json(const struct NpSpace *space,
                               const struct NpMatrix *elem,
                               int32_t unipotent,
                               char **out);

/**
 * Runs a full census and writes the JSON report. Returns a verdict error if
 * any verification fails.
 */
enum NpStatus np_census_json(int32_t kind,
                             uintptr_t dim,
                             uintptr_t q,
                             uintptr_t workers,
                             char **out);

/**
 * Piece labels of a kind and dimension as a JSON array of partitions.
 */
enum NpStatus np_labels_json(int32_t kind, uintptr_t dim, char **out);

/**
 * Releases a string returned by any `_json` entry point.
 */
void np_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NILPIECE_H */
