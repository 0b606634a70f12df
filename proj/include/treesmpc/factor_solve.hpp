#pragma once

#include "treesmpc/apg_types.hpp"
#include "treesmpc/elimination.hpp"

namespace treesmpc {

class WorkerPool;

/// Tree-independent matrices of the dynamic-programming solve.
///
/// Lambda = -R_bar^{-1} is never formed; it is applied through the cached
/// Cholesky factor of R_bar. Phi = Lambda B_bar' and Psi = Lambda L' are
/// formed once.
struct FactorCache {
  Matrix A;
  Matrix At;
  Matrix L;
  Matrix Lt;
  Matrix B_bar;   // B L, n_x x n_v
  Matrix B_bar_t;
  Matrix Phi;     // n_v x n_x
  Matrix Psi;     // n_v x n_u
  Eigen::LLT<Matrix> R_bar_chol;

  int nx() const { return static_cast<int>(A.rows()); }
  int nv() const { return static_cast<int>(L.cols()); }
  int nu() const { return static_cast<int>(L.rows()); }

  /// Lambda * g = -R_bar^{-1} g.
  Vector apply_lambda(const Vector& g) const;
};

FactorCache factor_step(const EliminationBasis& basis, const NetworkModel& model);

/// Scratch buffers for solve_step, sized to one tree. Reused across
/// iterations so the inner loop does not allocate.
struct SolveWorkspace {
  Matrix cost_x;   // q_j: linear cost-to-go on x, n_x x nodes
  Matrix cost_v;   // r_j: linear cost-to-go on v, n_v x nodes
  Matrix offset;   // v increment relative to the ancestor, n_v x nodes
  Matrix v;        // reduced controls, n_v x nodes (root column 0)

  void resize(int nx, int nv, int nodes);
};

/// Minimizes <z, H' w> + f(z) over the tree (dual gradient at w): backward
/// sweep over stages N-1..0 accumulating the linear cost-to-go, then a
/// forward sweep rolling out v, u and x from x(:,0) = p. The previous
/// control q enters through cache.u_hat(:,0). Node loops inside a stage run
/// on `pool`; sums over children are taken in node order.
void solve_step(const FactorCache& factor, const StageCache& cache, const ScenarioTree& tree, const DualPoint& w,
                const Vector& p, PrimalPoint& out, SolveWorkspace& ws, WorkerPool* pool = nullptr);

PrimalPoint solve_step(const FactorCache& factor, const StageCache& cache, const ScenarioTree& tree,
                       const DualPoint& w, const Vector& p, WorkerPool* pool = nullptr);

}  // namespace treesmpc
