#ifndef QRENYI_H
#define QRENYI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every entry point.
 */
typedef enum QrStatus {
  QR_STATUS_OK = 0,
  /**
   * A required pointer was null.
   */
  QR_STATUS_NULL_POINTER = 1,
  /**
   * Input is not a valid density matrix (shape, Hermiticity, trace, positivity).
   */
  QR_STATUS_INVALID_STATE = 2,
  /**
   * Argument out of range, e.g. a Rényi order of 1.
   */
  QR_STATUS_INVALID_ARGUMENT = 3,
  /**
   * Outside the mathematical domain, e.g. a rate above the reverse relative entropy.
   */
  QR_STATUS_DOMAIN = 4,
  /**
   * A size limit would be exceeded.
   */
  QR_STATUS_RESOURCE = 5,
  /**
   * The problem is degenerate (affine cumulant, no unique optimizer).
   */
  QR_STATUS_DEGENERATE = 6,
  /**
   * An iterative routine failed to converge.
   */
  QR_STATUS_NON_CONVERGENCE = 7,
  /**
   * Internal panic; the library state is unchanged.
   */
  QR_STATUS_INTERNAL = 8,
} QrStatus;

/**
 * Opaque density-matrix handle.
 */
typedef struct QrDensity QrDensity;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a state from `dim × dim` row-major real and imaginary parts.
 * `im` may be null for a real matrix. On success `*out` owns a handle that
 * must be released with [`qr_density_free`].
 *
 * # Safety
 * `re` (and `im` if non-null) must point to `dim * dim` doubles; `out` must
 * be a valid pointer.
 */
enum QrStatus qr_density_new(size_t dim,
                             const double *re,
                             const double *im,
                             struct QrDensity **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `p` must come from [`qr_density_new`] and not have been freed.
 */
void qr_density_free(struct QrDensity *p);

/**
 * Dimension of a state, 0 for null.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
size_t qr_density_dim(const struct QrDensity *p);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL,
 * or 0 if there is none.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t qr_last_error_message(char *buf, size_t len);

/**
 * Umegaki relative entropy in bits.
 *
 * # Safety
 * Handles must be live; `out` must be valid.
 */
enum QrStatus qr_umegaki(const struct QrDensity *rho, const struct QrDensity *sigma, double *out);

/**
 * Petz Rényi divergence of order `alpha` in bits.
 *
 * # Safety
 * Handles must be live; `out` must be valid.
 */
enum QrStatus qr_petz(const struct QrDensity *rho,
                      const struct QrDensity *sigma,
                      double alpha,
                      double *out);

/**
 * Sandwiched Rényi divergence of order `alpha` in bits.
 *
 * # Safety
 * Handles must be live; `out` must be valid.
 */
enum QrStatus qr_sandwiched(const struct QrDensity *rho,
                            const struct QrDensity *sigma,
                            double alpha,
                            double *out);

/**
 * Reverse sandwiched Rényi divergence of order `alpha` in bits.
 *
 * # Safety
 * Handles must be live; `out` must be valid.
 */
enum QrStatus qr_reverse_sandwiched(const struct QrDensity *rho,
                                    const struct QrDensity *sigma,
                                    double alpha,
                                    double *out);

/**
 * Reverse relative entropy in bits (full-rank states).
 *
 * # Safety
 * Handles must be live; `out` must be valid.
 */
enum QrStatus qr_reverse_relative_entropy(const struct QrDensity *rho,
                                          const struct QrDensity *sigma,
                                          double *out);

/**
 * Hoeffding exponent at Type-II rate `r`. `optimizer_alpha` may be null.
 *
 * # Safety
 * Handles must be live; `exponent` must be valid.
 */
enum QrStatus qr_hoeffding_exponent(const struct QrDensity *rho,
                                    const struct QrDensity *sigma,
                                    double r,
                                    double *exponent,
                                    double *optimizer_alpha);

/**
 * Stein exponent (the reverse relative entropy) in bits.
 *
 * # Safety
 * Handles must be live; `out` must be valid.
 */
enum QrStatus qr_stein_exponent(const struct QrDensity *rho,
                                const struct QrDensity *sigma,
                                double *out);

/**
 * Minimal Type-I error over `n` copies with Type-II error at most `2^{-n r}`.
 *
 * # Safety
 * Handles must be live; `out` must be valid.
 */
enum QrStatus qr_alpha_nr(const struct QrDensity *rho,
                          const struct QrDensity *sigma,
                          size_t n,
                          double r,
                          double *out);

/**
 * Minimal Type-II error over `n` copies with Type-I error at most `epsilon`.
 *
 * # Safety
 * Handles must be live; `out` must be valid.
 */
enum QrStatus qr_beta_neps(const struct QrDensity *rho,
                           const struct QrDensity *sigma,
                           size_t n,
                           double epsilon,
                           double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QRENYI_H */
