#pragma once

#include "treesmpc/network_model.hpp"
#include "treesmpc/scenario_tree.hpp"

#include <Eigen/Cholesky>

#include <cstdint>

namespace treesmpc {

class WorkerPool;

/// Change of variables u = L v + u_hat(d) that removes the junction equation.
///
/// L is an orthonormal basis of ker(E) taken from a column-pivoted QR of E';
/// u_hat(d) is the minimum-norm solution of E u = -Ed d from the same
/// factorization.
struct EliminationBasis {
  Matrix L;            // n_u x n_v, orthonormal columns, E L = 0
  Matrix E_pinv;       // n_u x n_e, minimum-norm right inverse of E
  Matrix demand_map;   // n_u x n_d, u_hat(d) = demand_map * d
  Matrix R_hat;        // Wu L
  Matrix R_bar;        // L' Wu L (symmetric positive definite)
  Eigen::LLT<Matrix> R_bar_chol;

  int nv() const { return static_cast<int>(L.cols()); }
};

/// Throws ValidationError when E is rank deficient or R_bar is not positive
/// definite.
EliminationBasis compute_basis(const NetworkModel& model);

Vector particular_solution(const EliminationBasis& basis, const NetworkModel& model, const Vector& d);

/// Per-solve data of the reduced problem. Matrices hold one column per tree
/// node. The root column of u_hat holds the previously applied control q,
/// so that du at a stage-1 node is measured against q; the root columns of
/// e and beta are zero.
struct StageCache {
  Matrix u_hat;      // n_u x nodes
  Matrix e;          // n_x x nodes, B u_hat + Gd d
  Matrix beta;       // n_v x nodes, linear cost on v
  Matrix alpha_bar;  // n_v x N, W_alpha L' (alpha1 + alpha2_{k+j})
  Vector p_bar;      // nodes, p + sum of children's p
  Matrix demands;    // n_d x nodes
  std::int64_t k = 0;
  int num_nodes = 0;
  int horizon = 0;
};

/// `demands` as produced by node_demands() for the same tree; q is the
/// previously applied control; k the absolute time of the first stage.
StageCache build_stage_cache(const EliminationBasis& basis, const NetworkModel& model, const ScenarioTree& tree,
                             const Matrix& demands, const Vector& q, std::int64_t k, WorkerPool* pool = nullptr);

/// u = L v + u_hat node-wise (columns are nodes). The root column is q.
Matrix lift_controls(const EliminationBasis& basis, const StageCache& cache, const Matrix& v);

}  // namespace treesmpc
