#ifndef FRACDELTA_H
#define FRACDELTA_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every exported function.
 */
typedef enum {
  FD_STATUS_OK = 0,
  FD_STATUS_NULL_POINTER = 1,
  FD_STATUS_INVALID_ARGUMENT = 2,
  FD_STATUS_PARSE = 3,
  FD_STATUS_CHECK_FAILED = 4,
  FD_STATUS_EXHAUSTED = 5,
  FD_STATUS_IO = 6,
  FD_STATUS_PANIC = 7,
} FdStatus;

/**
 * Branch taken by a value exactly on the threshold.
 */
typedef enum {
  FD_BOUNDARY_RULE_HIGH = 0,
  FD_BOUNDARY_RULE_LOW = 1,
} FdBoundaryRule;

/**
 * An exact orbit.
 */
typedef struct FdOrbit FdOrbit;

/**
 * The outcome of one prover run.
 */
typedef struct FdProof FdProof;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread; empty after a success. The
 * pointer stays valid until the next call on the same thread.
 */
const char *fd_last_error(void);

/**
 * Static version string.
 */
const char *fd_version(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void fd_string_free(char *s);

/**
 * Write `delta(x)` as a new `p/q` string to `*result`.
 *
 * # Safety
 * `x` must be a valid C string and `result` a valid pointer.
 */
FdStatus fd_delta(const char *x, FdBoundaryRule rule, char **result);

/**
 * Exact orbit `x_0..x_steps` of `seed`.
 *
 * # Safety
 * `seed` must be a valid C string and `result` a valid pointer.
 */
FdStatus fd_orbit_new(const char *seed, size_t steps, FdBoundaryRule rule, FdOrbit **result);

/**
 * Number of stored values (`steps + 1`), or 0 for a null handle.
 *
 * # Safety
 * `orbit` must be null or a live handle.
 */
size_t fd_orbit_len(const FdOrbit *orbit);

/**
 * Value `index` as a new `p/q` string.
 *
 * # Safety
 * `orbit` must be a live handle and `result` a valid pointer.
 */
FdStatus fd_orbit_value(const FdOrbit *orbit, size_t index, char **result);

/**
 * Value `index` rounded to the nearest double.
 *
 * # Safety
 * `orbit` must be a live handle and `result` a valid pointer.
 */
FdStatus fd_orbit_value_f64(const FdOrbit *orbit, size_t index, double *result);

/**
 * # Safety
 * `orbit` must be null or a live handle, which is invalid afterwards.
 */
void fd_orbit_free(FdOrbit *orbit);

/**
 * Stopping time of `seed` (entry into the listed start of the 29-cycle):
 * writes the entry index and phase, or `-1` for both when the orbit reaches
 * zero. Returns `Exhausted` when `budget` steps decide nothing.
 *
 * # Safety
 * `seed` must be a valid C string; `stopping_time` and `phase` valid pointers.
 */
FdStatus fd_classify(const char *seed, size_t budget, int64_t *stopping_time, int64_t *phase);

/**
 * Extend `[a_in, b_in)` to `b_out`. A run stopped by `extension_cap`
 * still produces a handle and returns `Exhausted`.
 *
 * # Safety
 * The strings must be valid C strings and `result` a valid pointer.
 */
FdStatus fd_prove(const char *a_in,
                  const char *b_in,
                  const char *b_out,
                  size_t extension_cap,
                  FdProof **result);

/**
 * Extensions performed, or 0 for a null handle.
 *
 * # Safety
 * `proof` must be null or a live handle.
 */
size_t fd_proof_extensions(const FdProof *proof);

/**
 * Whether the run reached its target.
 *
 * # Safety
 * `proof` must be null or a live handle.
 */
bool fd_proof_reached(const FdProof *proof);

/**
 * Final certified bound as a new `p/q` string.
 *
 * # Safety
 * `proof` must be a live handle and `result` a valid pointer.
 */
FdStatus fd_proof_final_bound(const FdProof *proof, char **result);

/**
 * Bound the last extension started from, as a double.
 *
 * # Safety
 * `proof` must be a live handle and `result` a valid pointer.
 */
FdStatus fd_proof_last_start(const FdProof *proof, double *result);

/**
 * # Safety
 * `proof` must be null or a live handle, which is invalid afterwards.
 */
void fd_proof_free(FdProof *proof);

/**
 * Run the full certification of `[0, upper]`; `CheckFailed` or `Exhausted`
 * when it does not pass.
 *
 * # Safety
 * `upper` must be a valid C string.
 */
FdStatus fd_theorem(const char *upper);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACDELTA_H */
