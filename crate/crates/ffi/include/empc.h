#ifndef EMPC_H
#define EMPC_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EmpcStatus {
  EMPC_STATUS_OK = 0,
  EMPC_STATUS_NULL_POINTER = 1,
  EMPC_STATUS_INVALID = 2,
  EMPC_STATUS_DIMENSION = 3,
  EMPC_STATUS_NOT_COERCIVE = 4,
  EMPC_STATUS_JSON = 5,
  EMPC_STATUS_BUFFER_TOO_SMALL = 6,
  EMPC_STATUS_PANIC = 7,
  EMPC_STATUS_OTHER = 8,
} EmpcStatus;

typedef enum EmpcSolveStatus {
  EMPC_SOLVE_STATUS_OPTIMAL = 0,
  EMPC_SOLVE_STATUS_INFEASIBLE = 1,
  EMPC_SOLVE_STATUS_BUDGET_EXHAUSTED = 2,
} EmpcSolveStatus;

typedef struct EmpcProblem EmpcProblem;

typedef struct EmpcQp EmpcQp;

typedef struct EmpcResult EmpcResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread, NUL-terminated and truncated
 * to `len - 1` bytes. Returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t empc_last_error_message(char *buf, size_t len);

/**
 * Parses a problem from JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EmpcStatus empc_problem_from_json(const char *json, struct EmpcProblem **out);

/**
 * Builds the beam benchmark problem with default settings except the
 * horizon and, when `h > 0`, the sampling period.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum EmpcStatus empc_beam_build(size_t horizon, double h, struct EmpcProblem **out);

/**
 * # Safety
 * `p` must be null or a handle from this library, not freed before.
 */
void empc_problem_free(struct EmpcProblem *p);

/**
 * Condenses a problem into its parametric QP.
 *
 * # Safety
 * `p` must be a live problem handle and `out` a valid pointer.
 */
enum EmpcStatus empc_qp_build(const struct EmpcProblem *p, struct EmpcQp **out);

/**
 * # Safety
 * `qp` must be null or a handle from this library, not freed before.
 */
void empc_qp_free(struct EmpcQp *qp);

/**
 * Decision-vector length, parameter length and constraint count. Any output
 * pointer may be null.
 *
 * # Safety
 * `qp` must be a live handle.
 */
enum EmpcStatus empc_qp_dims(const struct EmpcQp *qp, size_t *nz, size_t *ntheta, size_t *p_tilde);

/**
 * Solves for the stacked parameter `theta = (x, u_prev)`. `warm_hex` may be
 * null for a cold start; `budget = 0` keeps the default KKT-solve budget.
 * A successful call yields a result even when the status is not optimal.
 *
 * # Safety
 * `qp` must be a live handle, `theta` must point to `theta_len` doubles and
 * `out` must be valid.
 */
enum EmpcStatus empc_solve(const struct EmpcQp *qp,
                           const double *theta,
                           size_t theta_len,
                           const char *warm_hex,
                           size_t budget,
                           struct EmpcResult **out);

/**
 * # Safety
 * `r` must be null or a handle from this library, not freed before.
 */
void empc_result_free(struct EmpcResult *r);

/**
 * # Safety
 * `r` must be a live handle and `status` valid.
 */
enum EmpcStatus empc_result_status(const struct EmpcResult *r, enum EmpcSolveStatus *status);

/**
 * Copies `z*` (empty unless optimal). `written` receives the length.
 *
 * # Safety
 * `buf` must hold `len` doubles; `written` may be null.
 */
enum EmpcStatus empc_result_z(const struct EmpcResult *r, double *buf, size_t len, size_t *written);

/**
 * Copies the first input of the optimal sequence.
 *
 * # Safety
 * As for `empc_result_z`.
 */
enum EmpcStatus empc_result_u_first(const struct EmpcResult *r,
                                    double *buf,
                                    size_t len,
                                    size_t *written);

/**
 * Writes the active set as a NUL-terminated hex mask such as `0x1`.
 *
 * # Safety
 * `buf` must point to `len` writable bytes.
 */
enum EmpcStatus empc_result_active_set(const struct EmpcResult *r, char *buf, size_t len);

/**
 * Number of KKT systems solved by the search.
 *
 * # Safety
 * `r` must be a live handle and `out` valid.
 */
enum EmpcStatus empc_result_kkt_solves(const struct EmpcResult *r, size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EMPC_H */
