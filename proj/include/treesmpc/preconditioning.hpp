#pragma once

#include "treesmpc/apg_types.hpp"
#include "treesmpc/elimination.hpp"
#include "treesmpc/factor_solve.hpp"

#include <functional>

namespace treesmpc {

class WorkerPool;

/// Reduced problem of a single scenario (one branch, all probabilities 1).
///
///   z = J v + const,  z = (x_1..x_N, u_0..u_{N-1}),  v = (v_0..v_{N-1})
///   smooth cost = 1/2 v' Q v + linear
///
/// dual_hessian = J Q^{-1} J' is the curvature of the dual function seen
/// through z (before applying H).
struct SingleBranchOperators {
  int horizon = 0;
  int nx = 0;
  int nu = 0;
  Matrix J;
  Matrix Q;
  Matrix dual_hessian;
};

SingleBranchOperators assemble_single_branch(const EliminationBasis& basis, const NetworkModel& model, int horizon);

/// Strong convexity modulus of the smooth cost with respect to z on a
/// single branch: 1 / lambda_max(J Q^{-1} J').
double strong_convexity_modulus(const SingleBranchOperators& ops);

/// Smallest eigenvalue of Q, the curvature of the smooth cost in the reduced
/// controls v. Positive whenever Wu is positive definite.
double reduced_hessian_min_eigenvalue(const SingleBranchOperators& ops);

/// Diagonal dual scaling from the single-branch dual Hessian H J Q^{-1} J' H'.
/// Each varsigma/zeta block gets one scale (1/sqrt of the mean diagonal over
/// the block, which keeps the distance prox in closed form); psi entries are
/// scaled individually. Scales are replicated to every node of the same
/// stage and multiplied by sqrt(p) of the node. Nonpositive diagonal entries
/// fall back to scale 1 with a warning on stderr.
DualScaling compute_preconditioner(const SingleBranchOperators& ops, const ScenarioTree& tree);

/// Diagonal of H J Q^{-1} J' H' in (varsigma, zeta, psi) order, stage-major.
Vector single_branch_dual_hessian_diagonal(const SingleBranchOperators& ops);

/// ||D H||^2 for the single-branch operator, by power iteration on H' D^2 H.
/// `scaling` is evaluated on the nodes of `path` (root first).
double operator_norm_sq(const DualScaling& scaling, const std::vector<int>& path, int nx, int nu);

/// lambda = sigma / ||H||^2. Throws std::invalid_argument when sigma <= 0.
double compute_lambda(double sigma, double h_norm_sq);

/// Largest eigenvalue of a symmetric positive semidefinite operator by power
/// iteration from a fixed pseudo-random start. Stops when the Rayleigh
/// quotient changes by less than rel_tol, or after max_iters.
double power_iteration(const std::function<void(const Vector&, Vector&)>& apply, int dim, double rel_tol,
                       int max_iters);

/// Largest eigenvalue of the (scaled) tree dual Hessian D H grad^2 f* H' D,
/// applied through solve_step differences.
double dual_lipschitz_estimate(const FactorCache& factor, const ScenarioTree& tree, const DualScaling& scaling,
                               WorkerPool* pool = nullptr);

}  // namespace treesmpc
