#ifndef KRONFILTER_H
#define KRONFILTER_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

enum KfStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  KF_STATUS_OK = 0,
  KF_STATUS_NULL_POINTER = 1,
  KF_STATUS_INVALID_ARGUMENT = 2,
  KF_STATUS_DIMENSION = 3,
  KF_STATUS_SINGULAR = 4,
  // A leave-one-out leverage reached 1.
  KF_STATUS_LEVERAGE = 5,
  KF_STATUS_SEARCH_FAILED = 6,
  KF_STATUS_NON_FINITE = 7,
  // Output buffer length does not match the result.
  KF_STATUS_BUFFER_SIZE = 8,
  KF_STATUS_PANIC = 9,
  KF_STATUS_OTHER = 10,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum KfStatus KfStatus;
#else
typedef int32_t KfStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// Samples `x` (M×N) and responses `y` (N).
typedef struct KfDataset KfDataset;

// A fitted filter with its factors and the α it was fitted at.
typedef struct KfEstimate KfEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until the
// next failing call on the same thread.
const char *kf_last_error(void);

// Library version as a static NUL-terminated string.
const char *kf_version(void);

// Copies `x` (`m × n`, column-major) and `y` (`n`) into a new dataset.
//
// # Safety
// `x` must point to `m * n` doubles, `y` to `n` doubles, `out` to writable
// storage for one pointer.
KfStatus kf_dataset_new(const double *x,
                        size_t m,
                        size_t n,
                        const double *y,
                        struct KfDataset **out);

// # Safety
// `ds` must be NULL or a handle from [`kf_dataset_new`] not yet freed.
void kf_dataset_free(struct KfDataset *ds);

// Exact leave-one-out error of the full-rank ridge filter at `alpha`.
//
// # Safety
// `ds` must be a live dataset handle and `out` writable.
KfStatus kf_press_loocv(const struct KfDataset *ds, double alpha, double *out);

// Full-rank ridge filter at `alpha` into `w` (length M).
//
// # Safety
// `ds` must be a live dataset handle and `w` must hold `w_len` doubles.
KfStatus kf_ridge_solve(const struct KfDataset *ds, double alpha, double *w, size_t w_len);

// α minimizing PRESS over `[lo, hi]`, and the PRESS value there.
//
// # Safety
// `ds` must be a live dataset handle; `alpha_out` and `press_out` writable.
KfStatus kf_ridge_select(const struct KfDataset *ds,
                         double lo,
                         double hi,
                         double *alpha_out,
                         double *press_out);

// Rank-`r` factor model at a fixed `alpha` by alternating least squares.
// `iterations = 0` uses the default count. The ALO metric of the fit is
// stored when it exists and is NaN otherwise.
//
// # Safety
// `ds` must be a live dataset handle and `out` writable.
KfStatus kf_als_fit(const struct KfDataset *ds,
                    size_t m1,
                    size_t m2,
                    size_t r,
                    double alpha,
                    size_t iterations,
                    struct KfEstimate **out);

// Rank-`r` factor model with α chosen by minimizing the ALO metric over
// `[lo, hi]`.
//
// # Safety
// `ds` must be a live dataset handle and `out` writable.
KfStatus kf_alo_select(const struct KfDataset *ds,
                       size_t m1,
                       size_t m2,
                       size_t r,
                       double lo,
                       double hi,
                       struct KfEstimate **out);

// # Safety
// `est` must be NULL or a handle returned by this library not yet freed.
void kf_estimate_free(struct KfEstimate *est);

// # Safety
// `est` must be a live estimate handle; the outputs must be writable.
KfStatus kf_estimate_shape(const struct KfEstimate *est, size_t *m1, size_t *m2, size_t *r);

// # Safety
// `est` must be a live estimate handle and `out` writable.
KfStatus kf_estimate_alpha(const struct KfEstimate *est, double *out);

// ALO metric at the estimate's α (NaN when undefined).
//
// # Safety
// `est` must be a live estimate handle and `out` writable.
KfStatus kf_estimate_alo(const struct KfEstimate *est, double *out);

// Filter `w = vec(U1 U2ᵀ)` into a buffer of length `M1·M2`.
//
// # Safety
// `est` must be a live estimate handle and `w` must hold `w_len` doubles.
KfStatus kf_estimate_filter(const struct KfEstimate *est, double *w, size_t w_len);

// Factor matrices, column-major: `u1` is `M1 × R`, `u2` is `M2 × R`.
//
// # Safety
// `est` must be a live estimate handle; `u1`, `u2` must hold `u1_len`,
// `u2_len` doubles.
KfStatus kf_estimate_factors(const struct KfEstimate *est,
                             double *u1,
                             size_t u1_len,
                             double *u2,
                             size_t u2_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KRONFILTER_H */
