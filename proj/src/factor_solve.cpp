#include "treesmpc/factor_solve.hpp"

#include "treesmpc/errors.hpp"
#include "treesmpc/parallel.hpp"

namespace treesmpc {

Vector FactorCache::apply_lambda(const Vector& g) const { return -R_bar_chol.solve(g); }

FactorCache factor_step(const EliminationBasis& basis, const NetworkModel& model) {
  if (basis.nv() > 0 && basis.R_bar_chol.info() != Eigen::Success) {
    throw ValidationError({"Cholesky factorization of L' Wu L failed"});
  }
  FactorCache f;
  f.A = model.A;
  f.At = model.A.transpose();
  f.L = basis.L;
  f.Lt = basis.L.transpose();
  f.B_bar = model.B * basis.L;
  f.B_bar_t = f.B_bar.transpose();
  f.R_bar_chol = basis.R_bar_chol;
  f.Phi = -f.R_bar_chol.solve(f.B_bar_t);
  f.Psi = -f.R_bar_chol.solve(f.Lt);
  return f;
}

void SolveWorkspace::resize(int nx, int nv, int nodes) {
  if (cost_x.rows() != nx || cost_x.cols() != nodes) cost_x = Matrix::Zero(nx, nodes);
  if (cost_v.rows() != nv || cost_v.cols() != nodes) cost_v = Matrix::Zero(nv, nodes);
  if (offset.rows() != nv || offset.cols() != nodes) offset = Matrix::Zero(nv, nodes);
  if (v.rows() != nv || v.cols() != nodes) v = Matrix::Zero(nv, nodes);
}

void solve_step(const FactorCache& factor, const StageCache& cache, const ScenarioTree& tree, const DualPoint& w,
                const Vector& p, PrimalPoint& out, SolveWorkspace& ws, WorkerPool* pool) {
  const int nodes = tree.num_nodes();
  const int N = tree.horizon();
  const int nx = factor.nx();
  const int nv = factor.nv();
  const int nu = factor.nu();
  if (cache.num_nodes != nodes || cache.horizon != N) {
    throw DimensionError("stage cache was built for a different tree");
  }
  if (w.varsigma.cols() != nodes || w.varsigma.rows() != nx || w.zeta.cols() != nodes ||
      w.zeta.rows() != nx || w.psi.cols() != nodes || w.psi.rows() != nu) {
    throw DimensionError("dual point does not match the tree");
  }
  if (p.size() != nx) throw DimensionError("initial state has wrong length");

  ws.resize(nx, nv, nodes);
  if (out.x.rows() != nx || out.x.cols() != nodes) out.x.resize(nx, nodes);
  if (out.u.rows() != nu || out.u.cols() != nodes) out.u.resize(nu, nodes);

  WorkerPool serial(1);
  WorkerPool& exec = pool ? *pool : serial;

  ws.cost_x.middleCols(tree.stage_begin(N), tree.stage_size(N)).setZero();
  ws.cost_v.middleCols(tree.stage_begin(N), tree.stage_size(N)).setZero();

  for (int j = N - 1; j >= 0; --j) {
    exec.parallel_for(tree.stage_begin(j), tree.stage_end(j), [&](int n) {
      Vector r = Vector::Zero(nv);
      Vector s_sum = Vector::Zero(nx);
      Vector s(nx);
      Vector g(nv);
      for (int c = tree.child_begin(n); c < tree.child_end(n); ++c) {
        // s = xi + q_{j+1}, g = sigma + B_bar' s + L' psi with sigma = beta + r_{j+1}.
        s.noalias() = w.varsigma.col(c) + w.zeta.col(c) + ws.cost_x.col(c);
        g.noalias() = cache.beta.col(c) + ws.cost_v.col(c);
        g.noalias() += factor.B_bar_t * s;
        g.noalias() += factor.Lt * w.psi.col(c);
        ws.offset.col(c) = factor.R_bar_chol.solve(g) * (-0.5 / tree.probability(c));
        r += g;
        s_sum += s;
      }
      ws.cost_v.col(n) = r;
      ws.cost_x.col(n).noalias() = factor.At * s_sum;
    });
  }

  out.x.col(0) = p;
  out.u.col(0) = cache.u_hat.col(0);
  ws.v.col(0).setZero();
  for (int j = 1; j <= N; ++j) {
    exec.parallel_for(tree.stage_begin(j), tree.stage_end(j), [&](int n) {
      const int a = tree.ancestor(n);
      ws.v.col(n) = ws.v.col(a) + ws.offset.col(n);
      out.u.col(n) = cache.u_hat.col(n);
      out.u.col(n).noalias() += factor.L * ws.v.col(n);
      out.x.col(n) = cache.e.col(n);
      out.x.col(n).noalias() += factor.A * out.x.col(a);
      out.x.col(n).noalias() += factor.B_bar * ws.v.col(n);
    });
  }
}

PrimalPoint solve_step(const FactorCache& factor, const StageCache& cache, const ScenarioTree& tree,
                       const DualPoint& w, const Vector& p, WorkerPool* pool) {
  PrimalPoint out;
  SolveWorkspace ws;
  solve_step(factor, cache, tree, w, p, out, ws, pool);
  return out;
}

}  // namespace treesmpc
