#include "treesmpc/prox.hpp"

#include "treesmpc/parallel.hpp"

namespace treesmpc {

namespace {

template <typename In, typename Out>
void prox_distance_to(const In& v, const Vector& proj, double tau, Out&& out) {
  const double dist = (proj - v).norm();
  if (dist <= tau) {
    out = proj;
  } else {
    out = v + (tau / dist) * (proj - v);
  }
}

}  // namespace

Vector prox_distance_above(const Vector& v, const Vector& lower, double tau) {
  Vector out(v.size());
  prox_distance_to(v, v.cwiseMax(lower), tau, out);
  return out;
}

Vector prox_distance_box(const Vector& v, const Vector& lo, const Vector& hi, double tau) {
  Vector out(v.size());
  prox_distance_to(v, project_box(v, lo, hi), tau, out);
  return out;
}

Vector project_box(const Vector& v, const Vector& lo, const Vector& hi) { return v.cwiseMax(lo).cwiseMin(hi); }

SplitPoint prox_g(const SplitPoint& t, double gamma, const NetworkModel& model, WorkerPool* pool) {
  SplitPoint out;
  const auto nodes = static_cast<int>(t.varsigma.cols());
  prox_g_scaled(t, gamma, model, DualScaling::identity(model.nu(), nodes), out, pool);
  return out;
}

void prox_g_scaled(const SplitPoint& t, double gamma, const NetworkModel& model, const DualScaling& scaling,
                   SplitPoint& out, WorkerPool* pool) {
  const auto nodes = static_cast<int>(t.varsigma.cols());
  if (out.varsigma.rows() != t.varsigma.rows() || out.varsigma.cols() != nodes) {
    out = SplitPoint::zeros(static_cast<int>(t.varsigma.rows()), static_cast<int>(t.psi.rows()), nodes);
  }
  WorkerPool serial(1);
  WorkerPool& exec = pool ? *pool : serial;
  exec.parallel_for(1, nodes, [&](int n) {
    {
      const double c = scaling.varsigma(n);
      const Vector v = t.varsigma.col(n) / c;
      const double tau = gamma / (c * c) * model.Wx;
      Vector r(v.size());
      prox_distance_to(v, v.cwiseMax(model.x_s), tau, r);
      out.varsigma.col(n) = c * r;
    }
    {
      const double c = scaling.zeta(n);
      const Vector v = t.zeta.col(n) / c;
      const double tau = gamma / (c * c) * model.gamma_d;
      Vector r(v.size());
      prox_distance_to(v, project_box(v, model.x_min, model.x_max), tau, r);
      out.zeta.col(n) = c * r;
    }
    const auto c = scaling.psi.col(n).array();
    out.psi.col(n) = t.psi.col(n).array().max(c * model.u_min.array()).min(c * model.u_max.array()).matrix();
  });
  out.varsigma.col(0).setZero();
  out.zeta.col(0).setZero();
  out.psi.col(0).setZero();
}

double soft_penalty(const SplitPoint& t, const NetworkModel& model) {
  double total = 0.0;
  for (Eigen::Index n = 1; n < t.varsigma.cols(); ++n) {
    total += model.Wx * distance_above(t.varsigma.col(n), model.x_s);
    total += model.gamma_d * distance_to_box(t.zeta.col(n), model.x_min, model.x_max);
  }
  return total;
}

double g_conjugate(const DualPoint& y, const NetworkModel& model) {
  // Support functions: {x >= x_s} -> y' x_s for y <= 0; box -> sum max(y lo, y hi).
  double total = 0.0;
  for (Eigen::Index n = 1; n < y.varsigma.cols(); ++n) {
    total += y.varsigma.col(n).dot(model.x_s);
    total += y.zeta.col(n).cwiseProduct(model.x_min).cwiseMax(y.zeta.col(n).cwiseProduct(model.x_max)).sum();
    total += y.psi.col(n).cwiseProduct(model.u_min).cwiseMax(y.psi.col(n).cwiseProduct(model.u_max)).sum();
  }
  return total;
}

}  // namespace treesmpc
