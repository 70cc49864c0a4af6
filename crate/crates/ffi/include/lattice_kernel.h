#ifndef LATTICE_KERNEL_H
#define LATTICE_KERNEL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LkStatus {
  LK_STATUS_OK = 0,
  LK_STATUS_NULL_POINTER = 1,
  LK_STATUS_INVALID_ARGUMENT = 2,
  LK_STATUS_NUMERICAL = 3,
  LK_STATUS_PANIC = 4,
} LkStatus;

typedef enum LkWeightKind {
  LK_WEIGHT_KIND_PRODUCT = 0,
  LK_WEIGHT_KIND_POD = 1,
  LK_WEIGHT_KIND_SPOD = 2,
} LkWeightKind;

typedef struct LkInterpolant LkInterpolant;

typedef struct LkLattice LkLattice;

/**
 * Derived weights with their kernel.
 */
typedef struct LkWeights LkWeights;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *lk_last_error(void);

/**
 * Derives weights for the periodic diffusion model with `b_j ∝ c j^{−θ}`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum LkStatus lk_weights_derive(enum LkWeightKind kind,
                                double theta,
                                double c,
                                double p,
                                double delta,
                                uintptr_t s,
                                struct LkWeights **out);

/**
 * Smoothness `α` of the derived kernel, or 0 for a null handle.
 *
 * # Safety
 * `w` must be null or a live handle from [`lk_weights_derive`].
 */
uint32_t lk_weights_alpha(const struct LkWeights *w);

/**
 * Theoretical convergence rate of the derived weights, or NaN for a null handle.
 *
 * # Safety
 * `w` must be null or a live handle from [`lk_weights_derive`].
 */
double lk_weights_rate(const struct LkWeights *w);

/**
 * # Safety
 * `w` must be null or a handle from [`lk_weights_derive`] not freed before.
 */
void lk_weights_free(struct LkWeights *w);

/**
 * Lattice from an explicit generating vector of length `s`.
 *
 * # Safety
 * `z` must point to `s` readable values and `out` to writable storage.
 */
enum LkStatus lk_lattice_new(uint64_t n, const uint64_t *z, uintptr_t s, struct LkLattice **out);

/**
 * CBC construction of an `n`-point lattice in the first `s` dimensions of `w`.
 *
 * # Safety
 * `w` must be a live weights handle and `out` valid writable storage.
 */
enum LkStatus lk_lattice_cbc(const struct LkWeights *w,
                             uint64_t n,
                             uintptr_t s,
                             struct LkLattice **out);

/**
 * Number of points, or 0 for a null handle.
 *
 * # Safety
 * `lat` must be null or a live lattice handle.
 */
uint64_t lk_lattice_n(const struct LkLattice *lat);

/**
 * Dimension, or 0 for a null handle.
 *
 * # Safety
 * `lat` must be null or a live lattice handle.
 */
uintptr_t lk_lattice_dim(const struct LkLattice *lat);

/**
 * Copies the generating vector into `out[0..len]`; `len` must equal the dimension.
 *
 * # Safety
 * `out` must point to `len` writable values.
 */
enum LkStatus lk_lattice_z(const struct LkLattice *lat, uint64_t *out, uintptr_t len);

/**
 * # Safety
 * `lat` must be null or a lattice handle not freed before.
 */
void lk_lattice_free(struct LkLattice *lat);

/**
 * CBC criterion value of `lat` under the kernel of `w` (restricted to the lattice dimension).
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum LkStatus lk_criterion(const struct LkWeights *w, const struct LkLattice *lat, double *out);

/**
 * Kernel interpolant of `values[k-1] = f(t_k)`, `k = 1..=n`.
 *
 * # Safety
 * Handles must be live, `values` must hold `len` readable values, `out` writable.
 */
enum LkStatus lk_interpolant_build(const struct LkWeights *w,
                                   const struct LkLattice *lat,
                                   const double *values,
                                   uintptr_t len,
                                   struct LkInterpolant **out);

/**
 * `f_n(y)` for a point `y` of length `dim`.
 *
 * # Safety
 * `itp` must be live, `y` must hold `dim` values, `out` writable.
 */
enum LkStatus lk_interpolant_eval(const struct LkInterpolant *itp,
                                  const double *y,
                                  uintptr_t dim,
                                  double *out);

/**
 * `[f_n(y + t_k)]_{k=1..=n}` into `out[0..len]`, `len = n`.
 *
 * # Safety
 * `itp` must be live, `y` must hold `dim` values, `out` must hold `len` writable values.
 */
enum LkStatus lk_interpolant_eval_shifted(const struct LkInterpolant *itp,
                                          const double *y,
                                          uintptr_t dim,
                                          double *out,
                                          uintptr_t len);

/**
 * # Safety
 * `itp` must be null or an interpolant handle not freed before.
 */
void lk_interpolant_free(struct LkInterpolant *itp);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LATTICE_KERNEL_H */
