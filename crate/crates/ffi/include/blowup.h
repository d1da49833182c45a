/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef BLOWUP_H
#define BLOWUP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum BlowupStatus {
  BLOWUP_STATUS_OK = 0,
  BLOWUP_STATUS_INVALID_ARGUMENT = 1,
  BLOWUP_STATUS_PARSE = 2,
  BLOWUP_STATUS_SINGULAR = 3,
  BLOWUP_STATUS_NUMERICAL = 4,
  BLOWUP_STATUS_INSTABILITY = 5,
  BLOWUP_STATUS_BUFFER_TOO_SMALL = 6,
  BLOWUP_STATUS_PANIC = 7,
} BlowupStatus;

/**
 * Parsed perturbation `F(t, r, u, v, w)`.
 */
typedef struct BlowupExpr BlowupExpr;

/**
 * Similarity-coordinate evolution for one equation and grid.
 */
typedef struct BlowupSim BlowupSim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread (empty after success).
 * Valid until the next library call on the same thread.
 */
const char *blowup_last_error_message(void);

/**
 * `κ_p = (2(p+1)/(p−1)²)^{1/(p−1)}`; NaN for `p ≤ 1`.
 */
double blowup_kappa(double p);

/**
 * `c_p = 2(p+1)/(p−1)²`; NaN for `p ≤ 1`.
 */
double blowup_c_p(double p);

/**
 * Complex gamma function.
 *
 * # Safety
 * `out_re` and `out_im` must be valid for writes.
 */
enum BlowupStatus blowup_gamma(double re, double im, double *out_re, double *out_im);

/**
 * Gauss hypergeometric function `₂F₁(a, b; c; z)`.
 *
 * # Safety
 * `out_re` and `out_im` must be valid for writes.
 */
enum BlowupStatus blowup_hyp2f1(double a_re,
                                double a_im,
                                double b_re,
                                double b_im,
                                double c_re,
                                double c_im,
                                double z_re,
                                double z_im,
                                double *out_re,
                                double *out_im);

/**
 * Parses an expression or preset name into `*out`.
 *
 * # Safety
 * `source` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum BlowupStatus blowup_expr_parse(const char *source, struct BlowupExpr **out);

/**
 * Evaluates `F` at `(t, r, u, v, w)`; complex arguments are `[re, im]` pairs.
 *
 * # Safety
 * `expr` must come from [`blowup_expr_parse`]; `u`, `v`, `w` must point to
 * two readable doubles each and `out` to two writable doubles.
 */
enum BlowupStatus blowup_expr_eval(const struct BlowupExpr *expr,
                                   double t,
                                   double r,
                                   const double *u,
                                   const double *v,
                                   const double *w,
                                   double *out);

/**
 * Releases an expression handle; null is ignored.
 *
 * # Safety
 * `expr` must come from [`blowup_expr_parse`] and not be used afterwards.
 */
void blowup_expr_free(struct BlowupExpr *expr);

/**
 * Zeros of the connection coefficient in the given rectangle, written as
 * `[re0, im0, re1, im1, ...]`. `*count` receives the number of eigenvalues;
 * when it exceeds `capacity` nothing is written and `BufferTooSmall` is returned.
 *
 * # Safety
 * `out` must be valid for `2·capacity` writes (may be null if `capacity` is 0);
 * `count` must be valid for writes.
 */
enum BlowupStatus blowup_spectrum_scan(double p,
                                       double mu,
                                       double re_min,
                                       double re_max,
                                       double im_min,
                                       double im_max,
                                       double grid_step,
                                       double *out,
                                       size_t capacity,
                                       size_t *count);

/**
 * Creates a simulation of `u_tt − Δu + F = |u|^{p−1}u` in the lightcone of
 * `(T, T0)` on `grid_n` nodes, starting from the profile `Ψ_0` at `τ = 0`.
 * `perturbation` is an expression or preset name; null means `F = 0`.
 *
 * # Safety
 * `perturbation` must be null or NUL-terminated; `out` must be valid for writes.
 */
enum BlowupStatus blowup_sim_new(double p,
                                 double blowup_time,
                                 double initial_time,
                                 const char *perturbation,
                                 size_t grid_n,
                                 struct BlowupSim **out);

/**
 * Number of radial nodes; 0 for a null handle.
 *
 * # Safety
 * `sim` must be null or come from [`blowup_sim_new`].
 */
size_t blowup_sim_len(const struct BlowupSim *sim);

/**
 * Current similarity time; NaN for a null handle.
 *
 * # Safety
 * `sim` must be null or come from [`blowup_sim_new`].
 */
double blowup_sim_tau(const struct BlowupSim *sim);

/**
 * Copies the `len` radial nodes into `out`.
 *
 * # Safety
 * `sim` must come from [`blowup_sim_new`]; `out` must be valid for `capacity` writes.
 */
enum BlowupStatus blowup_sim_nodes(const struct BlowupSim *sim, double *out, size_t capacity);

/**
 * Replaces the state. `comps` holds `4·len` doubles, component-major:
 * `φ₁, φ₂, ν₁, ν₂` (real and imaginary parts of `ψ` and `∂_τψ`-type fields).
 *
 * # Safety
 * `sim` must come from [`blowup_sim_new`]; `comps` must be valid for `n` reads.
 */
enum BlowupStatus blowup_sim_set_state(struct BlowupSim *sim,
                                       double tau,
                                       const double *comps,
                                       size_t n);

/**
 * Copies the state (same layout as [`blowup_sim_set_state`]) into `out`.
 *
 * # Safety
 * `sim` must come from [`blowup_sim_new`]; `out` must be valid for `capacity` writes.
 */
enum BlowupStatus blowup_sim_state(const struct BlowupSim *sim, double *out, size_t capacity);

/**
 * Integrates to `tau_target` with step `dtau` (`dtau ≤ 0` selects the default).
 *
 * # Safety
 * `sim` must come from [`blowup_sim_new`].
 */
enum BlowupStatus blowup_sim_advance(struct BlowupSim *sim, double tau_target, double dtau);

/**
 * Phase of the state and its coefficients along `r_θ`, `g_θ` relative to `Ψ_θ`.
 *
 * # Safety
 * `sim` must come from [`blowup_sim_new`]; the outputs must be valid for writes.
 */
enum BlowupStatus blowup_sim_project(const struct BlowupSim *sim,
                                     double *theta,
                                     double *coeff_r,
                                     double *coeff_g,
                                     double *remainder_norm);

/**
 * Releases a simulation handle; null is ignored.
 *
 * # Safety
 * `sim` must come from [`blowup_sim_new`] and not be used afterwards.
 */
void blowup_sim_free(struct BlowupSim *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BLOWUP_H */
