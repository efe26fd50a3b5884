#ifndef BLISS_MOSER_H
#define BLISS_MOSER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BmStatus {
  BM_STATUS_OK = 0,
  BM_STATUS_NULL_POINTER = 1,
  BM_STATUS_INVALID_ARGUMENT = 2,
  BM_STATUS_NUMERIC = 3,
  BM_STATUS_BUFFER_TOO_SMALL = 4,
  BM_STATUS_PANIC = 5,
} BmStatus;

typedef enum BmPerturbation {
  BM_PERTURBATION_NONE = 0,
  BM_PERTURBATION_TRIPLE_LOG = 1,
} BmPerturbation;

/*
 Opaque piecewise-linear function with `v(0) = 0`.
 */
typedef struct BmGridFn BmGridFn;

typedef struct BmMaxRatio {
  double a;
  double max_value;
  double delta;
  bool degenerate;
} BmMaxRatio;

/*
 `W(s) = beta·log(e/s) + gamma·log log(e/s) + h(1/s)`.
 */
typedef struct BmWeight {
  double beta;
  double gamma;
  enum BmPerturbation perturbation;
} BmWeight;

typedef struct BmQuadResult {
  double value;
  double error_estimate;
  size_t panels_used;
  bool converged;
} BmQuadResult;

typedef struct BmSeriesBound {
  double value;
  uint64_t terms;
  double tail_estimate;
  bool tail_converged;
} BmSeriesBound;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failing call on this thread; empty if none. The
 pointer stays valid until the next failing call on the same thread.
 */
const char *bm_last_error(void);

/*
 Builds a function from `len` nodes; `xs` must start at 0, end at 1 and
 increase strictly, and `vs[0]` must be 0.

 # Safety
 `xs` and `vs` must point to `len` readable doubles; `out` must be writable.
 */
enum BmStatus bm_gridfn_new(const double *xs, const double *vs, size_t len, struct BmGridFn **out);

/*
 The infinitesimal Moser function `w_j` in dimension `n`.

 # Safety
 `out` must be writable.
 */
enum BmStatus bm_gridfn_moser(double j, uint32_t n, struct BmGridFn **out);

/*
 Copy of `f` rescaled to unit energy.

 # Safety
 `f` must be a live handle or null; `out` must be writable.
 */
enum BmStatus bm_gridfn_normalize(const struct BmGridFn *f, uint32_t n, struct BmGridFn **out);

/*
 Releases a handle; null is ignored.

 # Safety
 `f` must come from a `bm_gridfn_*` constructor and not be used afterwards.
 */
void bm_gridfn_free(struct BmGridFn *f);

/*
 Number of nodes, or 0 for a null handle.

 # Safety
 `f` must be a live handle or null.
 */
size_t bm_gridfn_len(const struct BmGridFn *f);

/*
 Copies the nodes into `xs` and `vs`, each holding `cap` doubles.

 # Safety
 `f` must be a live handle; `xs` and `vs` must have room for `cap` doubles.
 */
enum BmStatus bm_gridfn_nodes(const struct BmGridFn *f, double *xs, double *vs, size_t cap);

/*
 `∫₀¹ |v'|^n`.

 # Safety
 `f` must be a live handle; `out` must be writable.
 */
enum BmStatus bm_gridfn_energy(const struct BmGridFn *f, uint32_t n, double *out);

/*
 Maximizer of `|v|^n / s^(n-1)`.

 # Safety
 `f` must be a live handle; `out` must be writable.
 */
enum BmStatus bm_gridfn_max_ratio(const struct BmGridFn *f, uint32_t n, struct BmMaxRatio *out);

/*
 `∫₀¹ exp(W(s) |v|^n / s^(n-1)) ds`. A run that exhausts its panel budget
 still returns `BM_STATUS_OK` with `converged = false`.

 # Safety
 `f` must be a live handle; `out` must be writable.
 */
enum BmStatus bm_eval_functional(const struct BmGridFn *f,
                                 struct BmWeight w,
                                 uint32_t n,
                                 double rel_tol,
                                 double abs_tol,
                                 struct BmQuadResult *out);

/*
 Derivative of the functional with respect to each segment slope;
 `out` must hold `bm_gridfn_len(f) - 1` doubles.

 # Safety
 `f` must be a live handle; `out` must have room for `cap` doubles.
 */
enum BmStatus bm_grad_slopes(const struct BmGridFn *f,
                             struct BmWeight w,
                             uint32_t n,
                             double rel_tol,
                             double abs_tol,
                             double *out,
                             size_t cap);

/*
 Sharp Bliss constant `C_{n,k}`, `k ≥ 1`.

 # Safety
 `out` must be writable.
 */
enum BmStatus bm_bliss_constant(uint32_t n, double k, double *out);

/*
 `lim k·C_{n,k} = e^{H_{n-1}} / (n-1)`.

 # Safety
 `out` must be writable.
 */
enum BmStatus bm_bliss_limit(uint32_t n, double *out);

/*
 Taylor-series upper bound for the supremum of `I_beta`, `0 ≤ beta < 1`.

 # Safety
 `out` must be writable.
 */
enum BmStatus bm_series_bound(uint32_t n, double beta, struct BmSeriesBound *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BLISS_MOSER_H */
