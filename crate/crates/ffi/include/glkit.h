#ifndef GLKIT_H
#define GLKIT_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every entry point.
 */
typedef enum GlkitStatus {
  GLKIT_STATUS_OK = 0,
  GLKIT_STATUS_NULL_POINTER = 1,
  GLKIT_STATUS_INVALID_UTF8 = 2,
  GLKIT_STATUS_BAD_INPUT = 3,
  GLKIT_STATUS_SOLVER_FAILURE = 4,
  GLKIT_STATUS_OUT_OF_RANGE = 5,
  GLKIT_STATUS_TOO_LARGE = 6,
  GLKIT_STATUS_PANIC = 7,
} GlkitStatus;

/**
 * Opaque instance handle.
 */
typedef struct GlkitInstance GlkitInstance;

/**
 * Opaque solution handle.
 */
typedef struct GlkitSolution GlkitSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next glkit call on the same thread.
 */
const char *glkit_last_error_message(void);

/**
 * Parses an instance file (JSON, UTF-8, nul-terminated).
 *
 * # Safety
 * `json` must be a valid C string and `out` a valid pointer.
 */
enum GlkitStatus glkit_instance_from_json(const char *json, struct GlkitInstance **out);

/**
 * # Safety
 * `inst` must come from `glkit_instance_from_json` or be null.
 */
void glkit_instance_free(struct GlkitInstance *inst);

/**
 * Number of coordinates of the instance.
 *
 * # Safety
 * `inst` and `out` must be valid pointers.
 */
enum GlkitStatus glkit_instance_dim(const struct GlkitInstance *inst, size_t *out);

/**
 * Runs GLPG with accuracy `delta` and default options otherwise.
 *
 * # Safety
 * `inst` and `out` must be valid pointers.
 */
enum GlkitStatus glkit_solve(const struct GlkitInstance *inst,
                             double delta,
                             struct GlkitSolution **out);

/**
 * # Safety
 * `sol` must come from `glkit_solve` or be null.
 */
void glkit_solution_free(struct GlkitSolution *sol);

/**
 * `Σ_k α_k Δ_{x^k}` of the allocation.
 *
 * # Safety
 * `sol` and `out` must be valid pointers.
 */
enum GlkitStatus glkit_solution_objective(const struct GlkitSolution *sol, double *out);

/**
 * Certified largest constraint violation of the allocation.
 *
 * # Safety
 * `sol` and `out` must be valid pointers.
 */
enum GlkitStatus glkit_solution_violation(const struct GlkitSolution *sol, double *out);

/**
 * Number of decisions in the allocation.
 *
 * # Safety
 * `sol` and `out` must be valid pointers.
 */
enum GlkitStatus glkit_solution_num_atoms(const struct GlkitSolution *sol, size_t *out);

/**
 * Copies atom `k` into `bits` (length `len`, at least the dimension) and
 * its weight into `weight`.
 *
 * # Safety
 * `sol` and `weight` must be valid; `bits` must hold `len` bytes.
 */
enum GlkitStatus glkit_solution_atom(const struct GlkitSolution *sol,
                                     size_t k,
                                     uint8_t *bits,
                                     size_t len,
                                     double *weight);

/**
 * Solution as JSON. Release the string with `glkit_string_free`.
 *
 * # Safety
 * `sol` and `out` must be valid pointers.
 */
enum GlkitStatus glkit_solution_to_json(const struct GlkitSolution *sol, char **out);

/**
 * # Safety
 * `s` must come from a glkit function returning an owned string, or be null.
 */
void glkit_string_free(char *s);

/**
 * Brute-force `C(θ)` for instances with at most 500 decisions.
 *
 * # Safety
 * `inst` and `out` must be valid pointers.
 */
enum GlkitStatus glkit_brute_force(const struct GlkitInstance *inst, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GLKIT_H */
