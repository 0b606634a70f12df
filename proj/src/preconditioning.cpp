#include "treesmpc/preconditioning.hpp"

#include "treesmpc/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <iostream>
#include <random>
#include <stdexcept>

namespace treesmpc {

SingleBranchOperators assemble_single_branch(const EliminationBasis& basis, const NetworkModel& model, int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  const int N = horizon;
  const int nx = model.nx();
  const int nu = model.nu();
  const int nv = basis.nv();
  const Matrix B_bar = model.B * basis.L;

  SingleBranchOperators ops;
  ops.horizon = N;
  ops.nx = nx;
  ops.nu = nu;

  // Sum_j (v_j - v_{j-1})' R_bar (v_j - v_{j-1}) with v_{-1} = 0.
  ops.Q = Matrix::Zero(N * nv, N * nv);
  for (int j = 0; j < N; ++j) {
    const double diag = (j + 1 < N) ? 2.0 : 1.0;
    ops.Q.block(j * nv, j * nv, nv, nv) = 2.0 * diag * basis.R_bar;
    if (j + 1 < N) {
      ops.Q.block(j * nv, (j + 1) * nv, nv, nv) = -2.0 * basis.R_bar;
      ops.Q.block((j + 1) * nv, j * nv, nv, nv) = -2.0 * basis.R_bar;
    }
  }

  ops.J = Matrix::Zero(N * (nx + nu), N * nv);
  Matrix power = Matrix::Identity(nx, nx);  // A^{j-i}
  std::vector<Matrix> powers{power};
  for (int k = 1; k < N; ++k) powers.push_back(model.A * powers.back());
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i <= j; ++i) ops.J.block(j * nx, i * nv, nx, nv) = powers[static_cast<std::size_t>(j - i)] * B_bar;
    ops.J.block(N * nx + j * nu, j * nv, nu, nv) = basis.L;
  }

  Eigen::LLT<Matrix> chol(ops.Q);
  ops.dual_hessian = ops.J * chol.solve(ops.J.transpose());
  ops.dual_hessian = 0.5 * (ops.dual_hessian + ops.dual_hessian.transpose());
  return ops;
}

double strong_convexity_modulus(const SingleBranchOperators& ops) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(ops.dual_hessian, Eigen::EigenvaluesOnly);
  const double top = eig.eigenvalues().maxCoeff();
  if (!(top > 0.0)) throw std::runtime_error("single-branch dual Hessian is zero");
  return 1.0 / top;
}

double reduced_hessian_min_eigenvalue(const SingleBranchOperators& ops) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(ops.Q, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

Vector single_branch_dual_hessian_diagonal(const SingleBranchOperators& ops) {
  const int N = ops.horizon;
  const Vector diag = ops.dual_hessian.diagonal();
  Vector out(2 * N * ops.nx + N * ops.nu);
  out.head(N * ops.nx) = diag.head(N * ops.nx);
  out.segment(N * ops.nx, N * ops.nx) = diag.head(N * ops.nx);
  out.tail(N * ops.nu) = diag.tail(N * ops.nu);
  return out;
}

DualScaling compute_preconditioner(const SingleBranchOperators& ops, const ScenarioTree& tree) {
  const int N = ops.horizon;
  const int nx = ops.nx;
  const int nu = ops.nu;
  if (tree.horizon() != N) throw std::invalid_argument("tree horizon does not match the single-branch operators");
  const Vector diag = ops.dual_hessian.diagonal();

  Vector state_scale(N);
  Matrix input_scale(nu, N);
  bool warned = false;
  auto scale_of = [&](double h) {
    if (h > 0.0 && std::isfinite(h)) return 1.0 / std::sqrt(h);
    if (!warned) {
      std::cerr << "warning: nonpositive dual Hessian diagonal entry; using unit scaling for it\n";
      warned = true;
    }
    return 1.0;
  };
  for (int j = 0; j < N; ++j) {
    state_scale(j) = scale_of(diag.segment(j * nx, nx).mean());
    for (int i = 0; i < nu; ++i) input_scale(i, j) = scale_of(diag(N * nx + j * nu + i));
  }

  DualScaling d = DualScaling::identity(nu, tree.num_nodes());
  for (int n = 1; n < tree.num_nodes(); ++n) {
    const int j = tree.stage_of(n) - 1;
    const double w = std::sqrt(tree.probability(n));
    d.varsigma(n) = w * state_scale(j);
    d.zeta(n) = w * state_scale(j);
    d.psi.col(n) = w * input_scale.col(j);
  }
  return d;
}

double power_iteration(const std::function<void(const Vector&, Vector&)>& apply, int dim, double rel_tol,
                       int max_iters) {
  if (dim <= 0) return 0.0;
  std::mt19937_64 rng(20160404);
  std::uniform_real_distribution<double> uni(0.5, 1.5);
  Vector x(dim);
  for (int i = 0; i < dim; ++i) x(i) = uni(rng);
  x.normalize();
  Vector y(dim);
  double rq = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    apply(x, y);
    const double next = x.dot(y);
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    x = y / norm;
    if (it > 0 && std::abs(next - rq) <= rel_tol * std::abs(next)) return next;
    rq = next;
  }
  return rq;
}

double operator_norm_sq(const DualScaling& scaling, const std::vector<int>& path, int nx, int nu) {
  // H' D^2 H on the nodes of `path` (root excluded): x entries get
  // c_varsigma^2 + c_zeta^2, u entries c_psi^2.
  const int steps = static_cast<int>(path.size()) - 1;
  const int dim = steps * (nx + nu);
  Vector weights(dim);
  for (int s = 0; s < steps; ++s) {
    const int n = path[static_cast<std::size_t>(s) + 1];
    weights.segment(s * nx, nx).setConstant(scaling.varsigma(n) * scaling.varsigma(n) +
                                            scaling.zeta(n) * scaling.zeta(n));
    weights.segment(steps * nx + s * nu, nu) = scaling.psi.col(n).cwiseAbs2();
  }
  return power_iteration([&](const Vector& x, Vector& y) { y = weights.cwiseProduct(x); }, dim, 1e-12, 10000);
}

double compute_lambda(double sigma, double h_norm_sq) {
  if (!(sigma > 0.0)) throw std::invalid_argument("strong convexity modulus must be positive");
  if (!(h_norm_sq > 0.0)) throw std::invalid_argument("operator norm must be positive");
  return sigma / h_norm_sq;
}

namespace {

void pack(const SplitPoint& s, Vector& out) {
  const Eigen::Index a = s.varsigma.size();
  const Eigen::Index b = s.psi.size();
  out.resize(2 * a + b);
  out.head(a) = s.varsigma.reshaped();
  out.segment(a, a) = s.zeta.reshaped();
  out.tail(b) = s.psi.reshaped();
}

void unpack(const Vector& in, SplitPoint& s) {
  const Eigen::Index a = s.varsigma.size();
  const Eigen::Index b = s.psi.size();
  s.varsigma.reshaped() = in.head(a);
  s.zeta.reshaped() = in.segment(a, a);
  s.psi.reshaped() = in.tail(b);
}

}  // namespace

double dual_lipschitz_estimate(const FactorCache& factor, const ScenarioTree& tree, const DualScaling& scaling,
                               WorkerPool* pool) {
  const int nodes = tree.num_nodes();
  const int nx = factor.nx();
  const int nu = factor.nu();

  // With zero data and p = 0 the dual gradient is linear in w.
  StageCache zero;
  zero.num_nodes = nodes;
  zero.horizon = tree.horizon();
  zero.u_hat = Matrix::Zero(nu, nodes);
  zero.e = Matrix::Zero(nx, nodes);
  zero.beta = Matrix::Zero(factor.nv(), nodes);
  const Vector p = Vector::Zero(nx);

  SplitPoint y = SplitPoint::zeros(nx, nu, nodes);
  PrimalPoint z;
  SolveWorkspace ws;
  const int dim = 2 * nx * nodes + nu * nodes;
  auto apply = [&](const Vector& in, Vector& out) {
    unpack(in, y);
    y.varsigma.col(0).setZero();
    y.zeta.col(0).setZero();
    y.psi.col(0).setZero();
    solve_step(factor, zero, tree, scaling.apply(y), p, z, ws, pool);
    pack(scaling.apply(apply_H(z)), out);
    out = -out;  // w -> H z(w) is minus the dual Hessian
  };
  return power_iteration(apply, dim, 1e-7, 2000);
}

}  // namespace treesmpc
