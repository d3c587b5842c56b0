#ifndef QEVENT_H
#define QEVENT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Which mass-shell branches a propagator integrates over.
 */
typedef enum QevShellSelector {
  QEV_SHELL_SELECTOR_BOTH = 0,
  QEV_SHELL_SELECTOR_POSITIVE_ONLY = 1,
  QEV_SHELL_SELECTOR_NEGATIVE_ONLY = 2,
} QevShellSelector;

typedef enum QevStatus {
  QEV_STATUS_OK = 0,
  QEV_STATUS_NULL_POINTER = 1,
  QEV_STATUS_INVALID_ARGUMENT = 2,
  QEV_STATUS_DIMENSION_MISMATCH = 3,
  QEV_STATUS_UNIT_MISMATCH = 4,
  QEV_STATUS_ZERO_NORM = 5,
  QEV_STATUS_PHYSICALLY_DISALLOWED = 6,
  QEV_STATUS_QUADRATURE_FAILURE = 7,
  QEV_STATUS_GRID_ERROR = 8,
  QEV_STATUS_STABILITY_VIOLATION = 9,
  QEV_STATUS_ALL_CANDIDATES_DISALLOWED = 10,
  QEV_STATUS_IO_ERROR = 11,
  QEV_STATUS_PANIC = 12,
} QevStatus;

typedef struct QevPacket QevPacket;

typedef struct QevPoincare QevPoincare;

typedef struct QevPropagator QevPropagator;

typedef struct QevQuadrature QevQuadrature;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL if none failed. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *qev_last_error_message(void);

void qev_clear_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qev_version(void);

/**
 * Creates a packet with `dim` = D spacetime components and diagonal momentum widths.
 *
 * # Safety
 * `x`, `p` and `widths` must point to `dim` readable doubles; `out` must be writable.
 */
enum QevStatus qev_packet_new(size_t dim,
                              const double *x,
                              const double *p,
                              const double *widths,
                              double amplitude_re,
                              double amplitude_im,
                              struct QevPacket **out);

/**
 * Creates a packet from a full momentum-space precision matrix (`dim`×`dim`, row-major, SPD).
 *
 * # Safety
 * `x` and `p` must point to `dim` doubles, `precision` to `dim`² doubles; `out` must be writable.
 */
enum QevStatus qev_packet_new_with_precision(size_t dim,
                                             const double *x,
                                             const double *p,
                                             const double *precision,
                                             double amplitude_re,
                                             double amplitude_im,
                                             struct QevPacket **out);

/**
 * # Safety
 * `packet` must be NULL or a handle from a `qev_packet_*` constructor not yet freed.
 */
void qev_packet_free(struct QevPacket *packet);

/**
 * Spacetime dimension D of the packet, 0 for NULL.
 *
 * # Safety
 * `packet` must be NULL or a live handle.
 */
size_t qev_packet_dim(const struct QevPacket *packet);

/**
 * Copies the spacetime and momentum centres into `x_out` and `p_out` (D doubles each).
 *
 * # Safety
 * `packet` must be a live handle; `x_out` and `p_out` must hold D writable doubles.
 */
enum QevStatus qev_packet_centers(const struct QevPacket *packet, double *x_out, double *p_out);

/**
 * ⟨ψ|ψ⟩.
 *
 * # Safety
 * `packet` must be a live handle and `out` writable.
 */
enum QevStatus qev_packet_norm_sq(const struct QevPacket *packet, double *out);

/**
 * e^{i b·x} ψ(x), i.e. ψ(p + b) in momentum space. Pairs with a propagator whose potential is shifted by −b.
 *
 * # Safety
 * `packet` must be a live handle, `b` must point to D doubles and `out` be writable.
 */
enum QevStatus qev_packet_gauge_shift(const struct QevPacket *packet,
                                      const double *b,
                                      struct QevPacket **out);

/**
 * ⟨φ|ψ⟩ on the full momentum space.
 *
 * # Safety
 * `phi` and `psi` must be live handles; `re` and `im` writable.
 */
enum QevStatus qev_inner_product(const struct QevPacket *phi,
                                 const struct QevPacket *psi,
                                 double *re,
                                 double *im);

/**
 * x·y with signature (+,−,−,−).
 *
 * # Safety
 * `x` and `y` must point to `dim` doubles and `out` be writable.
 */
enum QevStatus qev_minkowski_dot(size_t dim, const double *x, const double *y, double *out);

/**
 * Propagator of mass `mass` in a constant potential (`potential` may be NULL for zero).
 *
 * # Safety
 * `potential` must be NULL or point to `dim` doubles; `out` must be writable.
 */
enum QevStatus qev_propagator_new(size_t dim,
                                  double mass,
                                  const double *potential,
                                  enum QevShellSelector selector,
                                  int32_t charge_sign,
                                  struct QevPropagator **out);

/**
 * # Safety
 * `g` must be NULL or a live propagator handle.
 */
void qev_propagator_free(struct QevPropagator *g);

/**
 * Default adaptive Gauss–Legendre rule for `dim_space` = D − 1 spatial dimensions.
 *
 * # Safety
 * `out` must be writable.
 */
enum QevStatus qev_quadrature_new(size_t dim_space, struct QevQuadrature **out);

/**
 * Adaptive Gauss–Legendre rule starting at `nodes_per_axis` and refining up to `max_nodes_per_axis`.
 *
 * # Safety
 * `out` must be writable.
 */
enum QevStatus qev_quadrature_gauss_legendre(size_t nodes_per_axis,
                                             size_t max_nodes_per_axis,
                                             double tolerance,
                                             double truncation_sigmas,
                                             struct QevQuadrature **out);

/**
 * Seeded Monte Carlo rule with `samples` draws.
 *
 * # Safety
 * `out` must be writable.
 */
enum QevStatus qev_quadrature_monte_carlo(size_t samples,
                                          uint64_t seed,
                                          struct QevQuadrature **out);

/**
 * # Safety
 * `q` must be NULL or a live quadrature handle.
 */
void qev_quadrature_free(struct QevQuadrature *q);

/**
 * τ(φ, ψ) = ⟨φ|Ĝ|ψ⟩.
 *
 * # Safety
 * All handles must be live; `re` and `im` writable.
 */
enum QevStatus qev_transition_amplitude(const struct QevPacket *phi,
                                        const struct QevPacket *psi,
                                        const struct QevPropagator *g,
                                        const struct QevQuadrature *q,
                                        double *re,
                                        double *im);

/**
 * P(φ, ψ) = |τ(φ,ψ)|² / (τ(φ,φ) τ(ψ,ψ)).
 *
 * # Safety
 * All handles must be live; `out` writable.
 */
enum QevStatus qev_transition_probability(const struct QevPacket *phi,
                                          const struct QevPacket *psi,
                                          const struct QevPropagator *g,
                                          const struct QevQuadrature *q,
                                          double *out);

/**
 * Whether τ(ψ,ψ)/⟨ψ|ψ⟩ exceeds `threshold`.
 *
 * # Safety
 * All handles must be live; `out` writable.
 */
enum QevStatus qev_is_physically_allowed(const struct QevPacket *psi,
                                         const struct QevPropagator *g,
                                         const struct QevQuadrature *q,
                                         double threshold,
                                         bool *out);

/**
 * General element x ↦ Λx + a. `lorentz` is `dim`×`dim` row-major.
 *
 * # Safety
 * `lorentz` must point to `dim`² doubles, `translation` to `dim` doubles; `out` writable.
 */
enum QevStatus qev_poincare_new(size_t dim,
                                const double *lorentz,
                                const double *translation,
                                bool parity,
                                bool time_reversal,
                                struct QevPoincare **out);

/**
 * Pure boost with rapidity vector of `dim_space` components.
 *
 * # Safety
 * `rapidity` must point to `dim_space` doubles; `out` writable.
 */
enum QevStatus qev_poincare_boost(size_t dim_space,
                                  const double *rapidity,
                                  struct QevPoincare **out);

/**
 * Pure translation by `a`.
 *
 * # Safety
 * `a` must point to `dim` doubles; `out` writable.
 */
enum QevStatus qev_poincare_translation(size_t dim, const double *a, struct QevPoincare **out);

/**
 * # Safety
 * `g` must be NULL or a live handle.
 */
void qev_poincare_free(struct QevPoincare *g);

/**
 * The transformed packet U(g)ψ as a new handle.
 *
 * # Safety
 * `g` and `packet` must be live handles; `out` writable.
 */
enum QevStatus qev_packet_apply_poincare(const struct QevPoincare *g,
                                         const struct QevPacket *packet,
                                         struct QevPacket **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QEVENT_H */
