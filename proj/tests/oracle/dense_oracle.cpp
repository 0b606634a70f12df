#include "dense_oracle.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace oracle {

using treesmpc::DemandForecast;
using treesmpc::NetworkModel;
using treesmpc::ScenarioTree;

DenseProblem build_dense(const NetworkModel& model, const ScenarioTree& tree, const DemandForecast& forecast,
                         const Vector& p, const Vector& q) {
  DenseProblem prob;
  prob.nx = model.nx();
  prob.nu = model.nu();
  prob.nodes = tree.num_nodes();
  const int m = prob.num_free();
  const int nz = m * (prob.nx + prob.nu);
  if (nz > kMaxVariables) {
    throw SizeCapExceeded("dense problem has " + std::to_string(nz) + " variables (cap " +
                          std::to_string(kMaxVariables) + ")");
  }
  const int nx = prob.nx, nu = prob.nu, ne = model.ne();

  prob.P = Matrix::Zero(nz, nz);
  prob.c = Vector::Zero(nz);
  prob.Aeq = Matrix::Zero(m * (nx + ne), nz);
  prob.beq = Vector::Zero(m * (nx + ne));

  for (int n = 1; n < prob.nodes; ++n) {
    const int j = tree.stage_of(n) - 1;
    const int a = tree.ancestor(n);
    const double pn = tree.probability(n);
    const Vector d = forecast.d_hat.col(j) + tree.eps().col(n);
    const int un = prob.u_offset(n);

    // p_n [ W_alpha price' u_n + (u_n - u_a)' Wu (u_n - u_a) ]
    prob.c.segment(un, nu) += pn * model.W_alpha * model.price(forecast.k + j);
    prob.P.block(un, un, nu, nu) += 2.0 * pn * model.Wu;
    if (a == 0) {
      prob.c.segment(un, nu) += -2.0 * pn * model.Wu * q;
      prob.c0 += pn * q.dot(model.Wu * q);
    } else {
      const int ua = prob.u_offset(a);
      prob.P.block(ua, ua, nu, nu) += 2.0 * pn * model.Wu;
      prob.P.block(un, ua, nu, nu) -= 2.0 * pn * model.Wu;
      prob.P.block(ua, un, nu, nu) -= 2.0 * pn * model.Wu;
    }

    // x_n - A x_a - B u_n = Gd d  (x_0 = p moves to the right)
    const int row = (n - 1) * (nx + ne);
    prob.Aeq.block(row, prob.x_offset(n), nx, nx) = Matrix::Identity(nx, nx);
    prob.Aeq.block(row, un, nx, nu) = -model.B;
    prob.beq.segment(row, nx) = model.Gd * d;
    if (a == 0) {
      prob.beq.segment(row, nx) += model.A * p;
    } else {
      prob.Aeq.block(row, prob.x_offset(a), nx, nx) = -model.A;
    }
    // E u_n = -Ed d
    prob.Aeq.block(row + nx, un, ne, nu) = model.E;
    prob.beq.segment(row + nx, ne) = -model.Ed * d;
  }

  prob.x_s = model.x_s;
  prob.x_min = model.x_min;
  prob.x_max = model.x_max;
  prob.u_min = model.u_min;
  prob.u_max = model.u_max;
  prob.Wx = model.Wx;
  prob.gamma_d = model.gamma_d;
  return prob;
}

double smooth_value(const DenseProblem& prob, const Vector& z) {
  return 0.5 * z.dot(prob.P * z) + prob.c.dot(z) + prob.c0;
}

double nonsmooth_value(const DenseProblem& prob, const Vector& z) {
  double total = 0.0;
  for (int n = 1; n < prob.nodes; ++n) {
    const Vector x = z.segment(prob.x_offset(n), prob.nx);
    total += prob.Wx * (prob.x_s - x).cwiseMax(0.0).norm();
    total += prob.gamma_d * (x - x.cwiseMax(prob.x_min).cwiseMin(prob.x_max)).norm();
    const Vector u = z.segment(prob.u_offset(n), prob.nu);
    const double viol = (u - u.cwiseMax(prob.u_min).cwiseMin(prob.u_max)).cwiseAbs().maxCoeff();
    if (viol > 1e-9) return std::numeric_limits<double>::infinity();
  }
  return total;
}

Vector forward_simulate(const NetworkModel& model, const ScenarioTree& tree, const DemandForecast& forecast,
                        const Vector& p, const Matrix& u) {
  const int m = tree.num_nodes() - 1;
  const int nx = model.nx(), nu = model.nu();
  Vector z(m * (nx + nu));
  Matrix x(nx, tree.num_nodes());
  x.col(0) = p;
  for (int n = 1; n < tree.num_nodes(); ++n) {
    const int j = tree.stage_of(n) - 1;
    const Vector d = forecast.d_hat.col(j) + tree.eps().col(n);
    x.col(n) = model.A * x.col(tree.ancestor(n)) + model.B * u.col(n) + model.Gd * d;
    z.segment((n - 1) * nx, nx) = x.col(n);
    z.segment(m * nx + (n - 1) * nu, nu) = u.col(n);
  }
  return z;
}

KktResult solve_dense_kkt(const DenseProblem& prob, const Vector& extra_linear) {
  const Eigen::Index nz = prob.P.rows();
  const Eigen::Index nc = prob.Aeq.rows();
  Matrix K = Matrix::Zero(nz + nc, nz + nc);
  K.topLeftCorner(nz, nz) = prob.P;
  K.topRightCorner(nz, nc) = prob.Aeq.transpose();
  K.bottomLeftCorner(nc, nz) = prob.Aeq;
  Vector rhs(nz + nc);
  rhs.head(nz) = -(prob.c + extra_linear);
  rhs.tail(nc) = prob.beq;

  Eigen::FullPivLU<Matrix> lu(K);
  if (lu.rank() < K.rows()) {
    throw SingularKkt("KKT matrix has rank " + std::to_string(lu.rank()) + " < " + std::to_string(K.rows()));
  }
  Vector s = lu.solve(rhs);
  KktResult r;
  r.residual = (K * s - rhs).cwiseAbs().maxCoeff() / std::max(1.0, rhs.cwiseAbs().maxCoeff());
  r.z = s.head(nz);
  r.multipliers = s.tail(nc);
  return r;
}

namespace {

// prox of tau * dist(. | C) given the projection onto C.
Vector prox_dist(const Vector& v, const Vector& proj, double tau) {
  const double dist = (v - proj).norm();
  if (dist <= tau) return proj;
  return v + (tau / dist) * (proj - v);
}

}  // namespace

FullResult solve_dense_full(const DenseProblem& prob, int max_iters, double tol) {
  const int nx = prob.nx, nu = prob.nu, m = prob.num_free();

  // z = z0 + N v
  Eigen::JacobiSVD<Matrix> svd(prob.Aeq, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const double thresh = 1e-12 * std::max(1.0, sv.size() ? sv(0) : 0.0);
  int rank = 0;
  while (rank < sv.size() && sv(rank) > thresh) ++rank;
  if (rank < prob.Aeq.rows()) throw SingularKkt("equality constraints are rank deficient");
  const Matrix Vfull = svd.matrixV();
  const Matrix N = Vfull.rightCols(Vfull.cols() - rank);
  const Vector z0 = Vfull.leftCols(rank) *
                    (sv.head(rank).cwiseInverse().asDiagonal() * (svd.matrixU().leftCols(rank).transpose() * prob.beq));

  // Reduced quadratic and its eigendecomposition for the primal prox.
  const Matrix Q = N.transpose() * prob.P * N;
  const Vector l = N.transpose() * (prob.P * z0 + prob.c);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (Q + Q.transpose()));
  const Vector lam = eig.eigenvalues();
  const Matrix& W = eig.eigenvectors();
  const double mu = lam.minCoeff();

  // K v + k0 stacks (x, x, u) of every free node.
  const int rows = m * (2 * nx + nu);
  Matrix S = Matrix::Zero(rows, prob.num_variables());
  for (int n = 1; n <= m; ++n) {
    const int r = (n - 1) * (2 * nx + nu);
    S.block(r, prob.x_offset(n), nx, nx).setIdentity();
    S.block(r + nx, prob.x_offset(n), nx, nx).setIdentity();
    S.block(r + 2 * nx, prob.u_offset(n), nu, nu).setIdentity();
  }
  const Matrix K = S * N;
  const Vector k0 = S * z0;
  const double Lk = Eigen::JacobiSVD<Matrix>(K).singularValues()(0);

  // prox of sigma h^* at y via Moreau: y - sigma prox_{h/sigma}(y/sigma).
  auto prox_conj = [&](const Vector& y, double sigma) {
    Vector out(y.size());
    for (int n = 0; n < m; ++n) {
      const int r = n * (2 * nx + nu);
      const Vector a = y.segment(r, nx) / sigma;
      out.segment(r, nx) = y.segment(r, nx) - sigma * prox_dist(a, a.cwiseMax(prob.x_s), prob.Wx / sigma);
      const Vector b = y.segment(r + nx, nx) / sigma;
      out.segment(r + nx, nx) =
          y.segment(r + nx, nx) -
          sigma * prox_dist(b, b.cwiseMax(prob.x_min).cwiseMin(prob.x_max), prob.gamma_d / sigma);
      const Vector c = y.segment(r + 2 * nx, nu) / sigma;
      out.segment(r + 2 * nx, nu) = y.segment(r + 2 * nx, nu) - sigma * c.cwiseMax(prob.u_min).cwiseMin(prob.u_max);
    }
    return out;
  };
  auto prox_primal = [&](const Vector& v, double tau) {
    const Vector t = W.transpose() * (v - tau * l);
    return Vector(W * (t.array() / (1.0 + tau * lam.array())).matrix());
  };

  const int nv = static_cast<int>(N.cols());
  Vector v = Vector::Zero(nv), v_bar = v, y = Vector::Zero(rows);
  double tau = 1.0 / Lk, sigma = 1.0 / Lk;
  FullResult res;
  int it = 0;
  for (; it < max_iters; ++it) {
    y = prox_conj(y + sigma * (K * v_bar + k0), sigma);
    const Vector v_next = prox_primal(v - tau * (K.transpose() * y), tau);
    const double theta = 1.0 / std::sqrt(1.0 + 2.0 * mu * tau);
    tau *= theta;
    sigma /= theta;
    res.last_change = (v_next - v).cwiseAbs().maxCoeff();
    v_bar = v_next + theta * (v_next - v);
    v = v_next;
    if (it > 10 && res.last_change < tol) {
      ++it;
      break;
    }
  }
  res.iterations = it;
  res.z = z0 + N * v;
  // Remove rounding-level box violations before evaluating the indicator.
  for (int n = 1; n <= m; ++n) {
    auto u = res.z.segment(prob.u_offset(n), nu);
    u = u.cwiseMax(prob.u_min).cwiseMin(prob.u_max);
  }
  res.objective = full_value(prob, res.z);
  return res;
}

}  // namespace oracle
