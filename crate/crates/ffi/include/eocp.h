#ifndef EOCP_H
#define EOCP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Values of [`EocpConfig::constraints`].
 */
typedef enum EocpConstraints {
  EOCP_CONSTRAINTS_NONE = 0,
  EOCP_CONSTRAINTS_G1 = 1,
  EOCP_CONSTRAINTS_G2 = 2,
  EOCP_CONSTRAINTS_F1 = 3,
  EOCP_CONSTRAINTS_F2 = 4,
  EOCP_CONSTRAINTS_F3 = 5,
  EOCP_CONSTRAINTS_F4 = 6,
  EOCP_CONSTRAINTS_F5 = 7,
} EocpConstraints;

typedef enum EocpStatus {
  EOCP_STATUS_OK = 0,
  EOCP_STATUS_INVALID_ARGUMENT = 1,
  EOCP_STATUS_SOLVER_FAILURE = 2,
  /**
   * The active-set iteration stopped at its iteration limit; the
   * solution handle is still produced.
   */
  EOCP_STATUS_NOT_CONVERGED = 3,
  EOCP_STATUS_NULL_POINTER = 4,
  EOCP_STATUS_UNSUPPORTED = 5,
  EOCP_STATUS_PANIC = 6,
} EocpStatus;

/**
 * Values of [`EocpConfig::target`].
 */
typedef enum EocpTarget {
  EOCP_TARGET_U1 = 0,
  EOCP_TARGET_U2 = 1,
  EOCP_TARGET_U3 = 2,
} EocpTarget;

typedef struct EocpMesh EocpMesh;

typedef struct EocpSolution EocpSolution;

/**
 * Problem and solver settings. Obtain defaults from
 * [`eocp_config_default`].
 */
typedef struct EocpConfig {
  /**
   * One of [`EocpTarget`].
   */
  uint32_t target;
  /**
   * Steepness of the plateau target.
   */
  double k;
  /**
   * One of [`EocpConstraints`].
   */
  uint32_t constraints;
  /**
   * Regularization parameter; a value `<= 0` selects `rho = h^2`.
   */
  double rho;
  double c;
  double tol;
  uint32_t max_iter;
} EocpConfig;

typedef struct EocpSolveInfo {
  bool converged;
  size_t iterations;
  size_t dofs;
  double rho;
  double feasibility_violation;
} EocpSolveInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *eocp_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *eocp_last_error_message(void);

/**
 * Fill `out` with the default settings: target u1, no constraints,
 * `rho = h^2`, `c = 1`, `tol = 1e-5`, 100 iterations.
 *
 * # Safety
 * `out` must be NULL or point to writable memory for one `EocpConfig`.
 */
enum EocpStatus eocp_config_default(struct EocpConfig *out);

/**
 * Structured mesh of the unit square with `n` cells per side.
 *
 * # Safety
 * `out` must be NULL or point to writable memory for one pointer.
 */
enum EocpStatus eocp_mesh_new(size_t n, struct EocpMesh **out);

/**
 * # Safety
 * `mesh` must be NULL or a handle from [`eocp_mesh_new`] not yet freed.
 */
void eocp_mesh_free(struct EocpMesh *mesh);

/**
 * Number of mesh nodes, 0 for NULL.
 *
 * # Safety
 * `mesh` must be NULL or a live handle.
 */
size_t eocp_mesh_num_nodes(const struct EocpMesh *mesh);

/**
 * Number of triangles, 0 for NULL.
 *
 * # Safety
 * `mesh` must be NULL or a live handle.
 */
size_t eocp_mesh_num_elements(const struct EocpMesh *mesh);

/**
 * Solve the configured problem on `mesh`. On [`EocpStatus::Ok`] and
 * [`EocpStatus::NotConverged`] a solution handle is stored in `out`;
 * otherwise `out` is set to NULL.
 *
 * # Safety
 * `mesh` and `config` must be NULL or valid; `out` must be NULL or point to
 * writable memory for one pointer.
 */
enum EocpStatus eocp_solve(const struct EocpMesh *mesh,
                           const struct EocpConfig *config,
                           struct EocpSolution **out);

/**
 * # Safety
 * `sol` must be NULL or a handle from [`eocp_solve`] not yet freed.
 */
void eocp_solution_free(struct EocpSolution *sol);

/**
 * # Safety
 * `sol` must be NULL or a live handle; `out` NULL or writable.
 */
enum EocpStatus eocp_solution_info(const struct EocpSolution *sol, struct EocpSolveInfo *out);

/**
 * Copy the nodal state (one value per mesh node) into `buf`.
 *
 * # Safety
 * `sol` must be NULL or a live handle; `buf` must be NULL or hold `len`
 * writable doubles.
 */
enum EocpStatus eocp_solution_state(const struct EocpSolution *sol, double *buf, size_t len);

/**
 * Copy the multiplier (`lambda` for state, `w` for control constraints),
 * extended by zero to every mesh node. Unconstrained solutions have none
 * and return [`EocpStatus::Unsupported`].
 *
 * # Safety
 * As for [`eocp_solution_state`].
 */
enum EocpStatus eocp_solution_multiplier(const struct EocpSolution *sol, double *buf, size_t len);

/**
 * Recover the piecewise constant control on `coarse` (one value per coarse
 * element) from the state of `sol`. The solution mesh must refine `coarse`.
 *
 * # Safety
 * `sol` and `coarse` must be NULL or live handles; `z` must be NULL or
 * hold `len` writable doubles; `outer_iterations` may be NULL.
 */
enum EocpStatus eocp_reconstruct_control(const struct EocpSolution *sol,
                                         const struct EocpMesh *coarse,
                                         double *z,
                                         size_t len,
                                         size_t *outer_iterations);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EOCP_H */
