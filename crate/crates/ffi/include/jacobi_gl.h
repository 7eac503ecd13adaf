#ifndef JACOBI_GL_H
#define JACOBI_GL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. The numeric values match the command-line exit codes where they overlap.
 */
typedef enum JglStatus {
  JGL_STATUS_OK = 0,
  /**
   * Null pointer, short buffer, index out of range or unknown enum value.
   */
  JGL_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Inadmissible operator or spectral data.
   */
  JGL_STATUS_INVALID_INPUT = 2,
  /**
   * Eigensolver, recurrence or recursion failure.
   */
  JGL_STATUS_NUMERICAL = 3,
  /**
   * The Gel'fand-Levitan system is singular or too ill-conditioned.
   */
  JGL_STATUS_NON_INVERTIBLE = 4,
  /**
   * A Rust panic was caught at the boundary.
   */
  JGL_STATUS_INTERNAL = 99,
} JglStatus;

/**
 * Which edge the weight factors are taken at.
 */
typedef enum JglOrientation {
  JGL_ORIENTATION_LEFT = 0,
  JGL_ORIENTATION_RIGHT = 1,
} JglOrientation;

/**
 * Recovery route for [`jgl_invert`].
 */
typedef enum JglMethod {
  JGL_METHOD_SYNTHESIS = 0,
  JGL_METHOD_RECURSION = 1,
  JGL_METHOD_BOTH = 2,
} JglMethod;

/**
 * Three-diagonal operator.
 */
typedef struct JglOperator JglOperator;

/**
 * Output of an inversion.
 */
typedef struct JglRecovered JglRecovered;

/**
 * Levels and weight factors.
 */
typedef struct JglSpectralData JglSpectralData;

/**
 * Scalar diagnostics of an inversion. Fields that were not computed are NaN.
 */
typedef struct JglDiagnostics {
  double gl_residual;
  double gl_condition;
  double kernel_max;
  double orthonormality_defect;
  double leakage;
  double h_norm;
  double recursion_gap;
  double level_error;
  double weight_error;
  /**
   * 1 if the inversion ran from the right edge.
   */
  uint32_t right_frame;
} JglDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Owned by the library.
 */
const char *jgl_last_error(void);

/**
 * Operator with `n` potentials `v` and `n - 1` couplings `u`.
 *
 * # Safety
 * `v` must point to `n` doubles, `u` to `n - 1` doubles, `out` to writable storage.
 */
enum JglStatus jgl_operator_new(size_t n,
                                const double *v,
                                const double *u,
                                double u_edge,
                                struct JglOperator **out);

/**
 * Free well (`V = u = 0`) on `n` nodes.
 *
 * # Safety
 * `out` must point to writable storage.
 */
enum JglStatus jgl_operator_free_well(size_t n, struct JglOperator **out);

/**
 * # Safety
 * `op` must be null or a handle from this library that has not been freed.
 */
void jgl_operator_free(struct JglOperator *op);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `op` must be null or a live handle.
 */
size_t jgl_operator_len(const struct JglOperator *op);

/**
 * Copies `V` (`n` entries) into `buf`.
 *
 * # Safety
 * `op` must be a live handle and `buf` must hold `len` doubles.
 */
enum JglStatus jgl_operator_potential(const struct JglOperator *op, double *buf, size_t len);

/**
 * Copies `u` (`n - 1` entries) into `buf`.
 *
 * # Safety
 * `op` must be a live handle and `buf` must hold `len` doubles.
 */
enum JglStatus jgl_operator_coupling(const struct JglOperator *op, double *buf, size_t len);

/**
 * Spectral data from levels and weight factors; checked like any loaded data.
 *
 * # Safety
 * `levels` and `weights` must point to `n` doubles; `out` to writable storage.
 */
enum JglStatus jgl_spectral_new(size_t n,
                                const double *levels,
                                const double *weights,
                                uint32_t orientation_code,
                                struct JglSpectralData **out);

/**
 * # Safety
 * `data` must be null or a live handle.
 */
void jgl_spectral_free(struct JglSpectralData *data);

/**
 * # Safety
 * `data` must be null or a live handle.
 */
size_t jgl_spectral_len(const struct JglSpectralData *data);

/**
 * # Safety
 * `data` must be a live handle and `buf` must hold `len` doubles.
 */
enum JglStatus jgl_spectral_levels(const struct JglSpectralData *data, double *buf, size_t len);

/**
 * # Safety
 * `data` must be a live handle and `buf` must hold `len` doubles.
 */
enum JglStatus jgl_spectral_weights(const struct JglSpectralData *data, double *buf, size_t len);

/**
 * Eigenvalues and weight factors of `op` at the given edge.
 *
 * # Safety
 * `op` must be a live handle; `out` must point to writable storage.
 */
enum JglStatus jgl_forward(const struct JglOperator *op,
                           uint32_t orientation_code,
                           struct JglSpectralData **out);

/**
 * Recovers the operator whose data is `target` relative to `reference`.
 *
 * `reference_data` may be null, in which case it is computed from `reference` at the
 * target's edge. Default thresholds apply.
 *
 * # Safety
 * Non-null handles must be live; `out` must point to writable storage.
 */
enum JglStatus jgl_invert(const struct JglOperator *reference,
                          const struct JglSpectralData *reference_data,
                          const struct JglSpectralData *target,
                          uint32_t method_code,
                          struct JglRecovered **out);

/**
 * Convenience: invert `target`'s own forward data against the free well.
 *
 * # Safety
 * `target` must be a live handle; `out` must point to writable storage.
 */
enum JglStatus jgl_roundtrip(const struct JglOperator *target, struct JglRecovered **out);

/**
 * # Safety
 * `rec` must be null or a live handle.
 */
void jgl_recovered_free(struct JglRecovered *rec);

/**
 * Copy of the recovered operator as a new handle.
 *
 * # Safety
 * `rec` must be a live handle; `out` must point to writable storage.
 */
enum JglStatus jgl_recovered_operator(const struct JglRecovered *rec, struct JglOperator **out);

/**
 * Unit-leading transformation kernel `K(m, n)` for `1 ≤ n ≤ m ≤ N`; the diagonal follows
 * the default convention.
 *
 * # Safety
 * `rec` must be a live handle; `value` must point to writable storage.
 */
enum JglStatus jgl_recovered_kernel(const struct JglRecovered *rec,
                                    size_t m,
                                    size_t n,
                                    double *value);

/**
 * # Safety
 * `rec` must be a live handle; `out` must point to a writable `JglDiagnostics`.
 */
enum JglStatus jgl_recovered_diagnostics(const struct JglRecovered *rec,
                                         struct JglDiagnostics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JACOBI_GL_H */
