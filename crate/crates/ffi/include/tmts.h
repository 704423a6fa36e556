#ifndef TMTS_H
#define TMTS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TmtsStatus {
  TMTS_STATUS_OK = 0,
  TMTS_STATUS_NULL_POINTER = 1,
  TMTS_STATUS_INVALID_ARGUMENT = 2,
  TMTS_STATUS_OUT_OF_RANGE = 3,
  TMTS_STATUS_BUFFER_TOO_SMALL = 4,
  TMTS_STATUS_NUMERICAL = 5,
  TMTS_STATUS_IO = 6,
  TMTS_STATUS_PANIC = 7,
} TmtsStatus;

/**
 * Opaque eigensolution handle.
 */
typedef struct TmtsEigen TmtsEigen;

/**
 * Model parameters, mirroring `ModelParams`.
 */
typedef struct TmtsParams {
  double omega_x;
  double omega_y;
  double theta;
  double a;
  double eps_a;
  double eps_b;
  double coupling;
} TmtsParams;

/**
 * Entanglement data of one eigenstate.
 */
typedef struct TmtsEntanglement {
  size_t k;
  double energy;
  double s_vn;
  double s_ab;
  double dp_ab;
  /**
   * |S_vN from the reduced density - S_vN from (S_AB, dP_AB)|
   */
  double identity_deviation;
} TmtsEntanglement;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *tmts_version(void);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *tmts_last_error_message(void);

/**
 * Writes the default model parameters into `out`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `TmtsParams`.
 */
enum TmtsStatus tmts_params_default(struct TmtsParams *out);

/**
 * Diagonalizes the Hamiltonian in the matched basis with `n_x`, `n_y`
 * quanta per mode. No convergence certification.
 *
 * # Safety
 * `params` must point to a valid `TmtsParams`; `out` to writable storage
 * for one handle pointer.
 */
enum TmtsStatus tmts_solve(const struct TmtsParams *params,
                           size_t n_x,
                           size_t n_y,
                           struct TmtsEigen **out);

/**
 * Like `tmts_solve`, certified against an eigenvalue-only solve with
 * `ladder_step` fewer quanta per mode at drift tolerance `tol`.
 *
 * # Safety
 * As for `tmts_solve`.
 */
enum TmtsStatus tmts_solve_certified(const struct TmtsParams *params,
                                     size_t n_x,
                                     size_t n_y,
                                     size_t ladder_step,
                                     double tol,
                                     struct TmtsEigen **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `e` must be null or a handle from this library not yet freed.
 */
void tmts_eigen_free(struct TmtsEigen *e);

/**
 * Number of eigenpairs (2 (N_x+1)(N_y+1)); 0 for a null handle.
 *
 * # Safety
 * `e` must be null or a live handle.
 */
size_t tmts_eigen_dim(const struct TmtsEigen *e);

/**
 * Highest certified index, or -1 when uncertified or nothing converged.
 *
 * # Safety
 * `e` must be null or a live handle.
 */
int64_t tmts_eigen_converged_upto(const struct TmtsEigen *e);

/**
 * Copies all eigenvalues (ascending) into `buf` of capacity `len`.
 *
 * # Safety
 * `e` must be a live handle and `buf` valid for `len` writes.
 */
enum TmtsStatus tmts_eigen_energies(const struct TmtsEigen *e, double *buf, size_t len);

/**
 * Copies eigenvector `k` as [C_A; C_B] into `buf` of capacity `len`.
 *
 * # Safety
 * `e` must be a live handle and `buf` valid for `len` writes.
 */
enum TmtsStatus tmts_eigen_state(const struct TmtsEigen *e, size_t k, double *buf, size_t len);

/**
 * Entanglement entropy and its decomposition for eigenstate `k`.
 *
 * # Safety
 * `e` must be a live handle and `out` writable.
 */
enum TmtsStatus tmts_eigen_entanglement(const struct TmtsEigen *e,
                                        size_t k,
                                        struct TmtsEntanglement *out);

/**
 * Von Neumann entropy (nats) of the electronic reduced density of a pure
 * state with components `c1`, `c2` of length `len` each.
 *
 * # Safety
 * `c1` and `c2` must be valid for `len` reads; `out` writable.
 */
enum TmtsStatus tmts_entropy_of_state(const double *c1, const double *c2, size_t len, double *out);

/**
 * Entropy from the surface overlap and population difference.
 *
 * # Safety
 * `out` must be writable.
 */
enum TmtsStatus tmts_entropy_from_decomposition(double s_ab, double dp_ab, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TMTS_H */
