#include "treesmpc/elimination.hpp"

#include "treesmpc/errors.hpp"
#include "treesmpc/parallel.hpp"

#include <Eigen/QR>

namespace treesmpc {

EliminationBasis compute_basis(const NetworkModel& model) {
  const int nu = model.nu();
  const int ne = model.ne();

  Eigen::ColPivHouseholderQR<Matrix> qr(model.E.transpose());
  qr.setThreshold(1e-10);
  if (qr.rank() < ne) throw ValidationError({"E not full row rank"});

  // E' P = Q R  =>  E = P R1' Q1'. ker(E) = range(Q2); min-norm solution of
  // E u = b is u = Q1 R1^{-T} P' b.
  const Matrix Q = qr.householderQ() * Matrix::Identity(nu, nu);
  const Matrix R1 = qr.matrixR().topLeftCorner(ne, ne).template triangularView<Eigen::Upper>();

  EliminationBasis basis;
  basis.L = Q.rightCols(nu - ne);
  const Matrix Pt = qr.colsPermutation().transpose() * Matrix::Identity(ne, ne);
  const Matrix R1_inv_t = R1.transpose().triangularView<Eigen::Lower>().solve(Pt);
  basis.E_pinv = Q.leftCols(ne) * R1_inv_t;
  basis.demand_map = -basis.E_pinv * model.Ed;

  basis.R_hat = model.Wu * basis.L;
  basis.R_bar = basis.L.transpose() * basis.R_hat;
  basis.R_bar = 0.5 * (basis.R_bar + basis.R_bar.transpose());
  basis.R_bar_chol.compute(basis.R_bar);
  if (basis.nv() > 0 && basis.R_bar_chol.info() != Eigen::Success) {
    throw ValidationError({"reduced smoothing weight L' Wu L is not positive definite"});
  }
  return basis;
}

Vector particular_solution(const EliminationBasis& basis, const NetworkModel& model, const Vector& d) {
  if (d.size() != model.nd()) {
    throw DimensionError("demand has length " + std::to_string(d.size()) + ", expected " +
                         std::to_string(model.nd()));
  }
  return basis.demand_map * d;
}

StageCache build_stage_cache(const EliminationBasis& basis, const NetworkModel& model, const ScenarioTree& tree,
                             const Matrix& demands, const Vector& q, std::int64_t k, WorkerPool* pool) {
  const int nodes = tree.num_nodes();
  const int N = tree.horizon();
  if (demands.cols() != nodes || demands.rows() != model.nd()) {
    throw DimensionError("node demands do not match the tree (" + std::to_string(demands.rows()) + "x" +
                         std::to_string(demands.cols()) + ", expected " + std::to_string(model.nd()) + "x" +
                         std::to_string(nodes) + ")");
  }
  if (q.size() != model.nu()) throw DimensionError("previous control has wrong length");

  StageCache c;
  c.k = k;
  c.num_nodes = nodes;
  c.horizon = N;
  c.demands = demands;
  c.u_hat.resize(model.nu(), nodes);
  c.e = Matrix::Zero(model.nx(), nodes);
  c.beta = Matrix::Zero(basis.nv(), nodes);
  c.p_bar.resize(nodes);
  c.alpha_bar.resize(basis.nv(), N);
  for (int j = 0; j < N; ++j) {
    c.alpha_bar.col(j) = model.W_alpha * (basis.L.transpose() * model.price(k + j));
  }

  WorkerPool serial(1);
  WorkerPool& p = pool ? *pool : serial;

  c.u_hat.col(0) = q;
  p.parallel_for(1, nodes, [&](int n) {
    c.u_hat.col(n) = basis.demand_map * demands.col(n);
    c.e.col(n) = model.B * c.u_hat.col(n) + model.Gd * demands.col(n);
  });

  p.parallel_for(0, nodes, [&](int n) {
    const double pn = tree.probability(n);
    double child_p = 0.0;
    Vector child_sum = Vector::Zero(model.nu());
    for (int ch = tree.child_begin(n); ch < tree.child_end(n); ++ch) {
      child_p += tree.probability(ch);
      child_sum += tree.probability(ch) * c.u_hat.col(ch);
    }
    c.p_bar(n) = pn + child_p;
    if (n == 0) return;
    const int j = tree.stage_of(n) - 1;
    const Vector dir = c.p_bar(n) * c.u_hat.col(n) - pn * c.u_hat.col(tree.ancestor(n)) - child_sum;
    c.beta.col(n) = pn * c.alpha_bar.col(j) + 2.0 * basis.R_hat.transpose() * dir;
  });
  return c;
}

Matrix lift_controls(const EliminationBasis& basis, const StageCache& cache, const Matrix& v) {
  if (v.cols() != cache.num_nodes || v.rows() != basis.nv()) {
    throw DimensionError("reduced controls do not match the stage cache");
  }
  Matrix u = basis.L * v + cache.u_hat;
  u.col(0) = cache.u_hat.col(0);
  return u;
}

}  // namespace treesmpc
