#pragma once

#include "treesmpc/apg_types.hpp"
#include "treesmpc/network_model.hpp"

namespace treesmpc {

class WorkerPool;

/// prox of tau * dist(. | {y >= lower}). Returns the projection when the
/// distance is at most tau, otherwise moves v by tau toward its projection.
Vector prox_distance_above(const Vector& v, const Vector& lower, double tau);

/// prox of tau * dist(. | [lo, hi]).
Vector prox_distance_box(const Vector& v, const Vector& lo, const Vector& hi, double tau);

/// Projection onto [lo, hi] (prox of the box indicator for any parameter).
Vector project_box(const Vector& v, const Vector& lo, const Vector& hi);

/// prox_{gamma g}(t) for g = Wx dist(varsigma | x >= x_s) + gamma_d dist(zeta | [x_min, x_max])
///                           + indicator(psi | [u_min, u_max]), summed over non-root nodes.
SplitPoint prox_g(const SplitPoint& t, double gamma, const NetworkModel& model, WorkerPool* pool = nullptr);

/// prox_{gamma g'}(t) for the rescaled g'(s) = g(D^{-1} s), D = `scaling`.
/// Uses prox_{gamma g'}(v) = c prox_{(gamma/c^2) g}(v / c) on each block of
/// scale c. Writes into `out` (may alias nothing in `t`).
void prox_g_scaled(const SplitPoint& t, double gamma, const NetworkModel& model, const DualScaling& scaling,
                   SplitPoint& out, WorkerPool* pool = nullptr);

/// g(t) for the soft-penalty blocks only (varsigma and zeta); the control box
/// indicator is not included.
double soft_penalty(const SplitPoint& t, const NetworkModel& model);

/// Support-function part of the conjugate g*(y). The norm-ball part of the
/// conjugate of the distance terms is not checked; iterates produced by the
/// dual update lie in dom g* by construction.
double g_conjugate(const DualPoint& y, const NetworkModel& model);

}  // namespace treesmpc
