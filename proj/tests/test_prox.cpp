#include "instances.hpp"
#include "treesmpc/apg_solver.hpp"
#include "treesmpc/apg_types.hpp"
#include "treesmpc/prox.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace treesmpc;

namespace {

Vector randn(std::mt19937_64& rng, int n, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

double dist_above(const Vector& v, const Vector& lo) { return (lo - v).cwiseMax(0.0).norm(); }

double dist_box(const Vector& v, const Vector& lo, const Vector& hi) {
  return (v - v.cwiseMax(lo).cwiseMin(hi)).norm();
}

SplitPoint random_split(std::mt19937_64& rng, int nx, int nu, int nodes, double scale) {
  SplitPoint s = SplitPoint::zeros(nx, nu, nodes);
  for (int n = 1; n < nodes; ++n) {
    s.varsigma.col(n) = randn(rng, nx, scale);
    s.zeta.col(n) = randn(rng, nx, scale);
    s.psi.col(n) = randn(rng, nu, scale);
  }
  return s;
}

double g_value(const SplitPoint& t, const NetworkModel& m) {
  for (int n = 1; n < t.psi.cols(); ++n) {
    if (((t.psi.col(n) - m.u_min).minCoeff() < -1e-12) || ((m.u_max - t.psi.col(n)).minCoeff() < -1e-12)) {
      return INFINITY;
    }
  }
  return soft_penalty(t, m);
}

}  // namespace

TEST_CASE("distance prox on hand-checked points") {
  const Vector zero = Vector::Zero(1);
  CHECK(prox_distance_above(Vector::Constant(1, -3.0), zero, 1.0)(0) == doctest::Approx(-2.0));
  CHECK(prox_distance_above(Vector::Constant(1, -0.5), zero, 1.0)(0) == 0.0);
  CHECK(prox_distance_above(Vector::Constant(1, 4.0), zero, 1.0)(0) == 4.0);
  const Vector lo = Vector::Zero(2), hi = Vector::Ones(2);
  const Vector inside = (Vector(2) << 0.2, 0.9).finished();
  CHECK((prox_distance_box(inside, lo, hi, 3.0) - inside).norm() == 0.0);
  const Vector far = (Vector(2) << 4.0, 5.0).finished();
  const Vector moved = prox_distance_box(far, lo, hi, 1.0);
  CHECK(dist_box(moved, lo, hi) == doctest::Approx(dist_box(far, lo, hi) - 1.0));
}

TEST_CASE("scalar distance prox agrees with a grid search") {
  const double tau = 1.0;
  const double v = -3.0;
  double best = 0.0, best_val = INFINITY;
  for (int i = 0; i <= 600000; ++i) {
    const double y = -6.0 + 1e-5 * i;
    const double val = tau * std::max(0.0, -y) + 0.5 * (y - v) * (y - v);
    if (val < best_val) {
      best_val = val;
      best = y;
    }
  }
  CHECK(prox_distance_above(Vector::Constant(1, v), Vector::Zero(1), tau)(0) == doctest::Approx(best).epsilon(1e-4));
}

TEST_CASE("control copies are projected onto the flow box") {
  std::mt19937_64 rng(1);
  const NetworkModel m = testing_support::random_network(rng, 2, 3, 1);
  SplitPoint t = SplitPoint::zeros(2, 3, 2);
  t.varsigma.col(1) = m.x_s + Vector::Ones(2);
  t.zeta.col(1) = 0.5 * (m.x_min + m.x_max);
  t.psi.col(1) = m.u_max + Vector::Ones(3);
  const SplitPoint out = prox_g(t, 0.7, m);
  CHECK((out.psi.col(1) - m.u_max).norm() == 0.0);
  CHECK((out.varsigma.col(1) - t.varsigma.col(1)).norm() == 0.0);
  CHECK((out.zeta.col(1) - t.zeta.col(1)).norm() == 0.0);
}

TEST_CASE("prox output minimizes the prox objective on random points") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const NetworkModel m = testing_support::random_network(rng, 2, 3, 1);
    const SplitPoint v = random_split(rng, 2, 3, 3, 6.0);
    const double gamma = std::exp(randn(rng, 1, 1.0)(0)) / 5.0;
    const SplitPoint y = prox_g(v, gamma, m);
    const auto objective = [&](const SplitPoint& s) { return g_value(s, m) + (s - v).squared_norm() / (2.0 * gamma); };
    const double at_y = objective(y);
    REQUIRE(std::isfinite(at_y));
    for (int k = 0; k < 20; ++k) {
      SplitPoint s = y + random_split(rng, 2, 3, 3, 1e-3);
      for (int n = 1; n < 3; ++n) s.psi.col(n) = s.psi.col(n).cwiseMax(m.u_min).cwiseMin(m.u_max);
      CHECK(objective(s) >= at_y - 1e-12 * std::max(1.0, at_y));
    }
  }
}

TEST_CASE("prox is nonexpansive") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const NetworkModel m = testing_support::random_network(rng, 3, 4, 1);
    const SplitPoint a = random_split(rng, 3, 4, 4, 8.0);
    const SplitPoint b = random_split(rng, 3, 4, 4, 8.0);
    const double gamma = 0.05 + 2.0 * std::abs(randn(rng, 1, 1.0)(0));
    const SplitPoint pa = prox_g(a, gamma, m), pb = prox_g(b, gamma, m);
    CHECK(std::sqrt((pa - pb).squared_norm()) <= std::sqrt((a - b).squared_norm()) + 1e-12);
  }
}

TEST_CASE("scaled prox minimizes the rescaled prox objective") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> unit(0.2, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const NetworkModel m = testing_support::random_network(rng, 2, 3, 1);
    DualScaling D = DualScaling::identity(3, 3);
    for (int n = 0; n < 3; ++n) {
      D.varsigma(n) = unit(rng);
      D.zeta(n) = unit(rng);
      for (int i = 0; i < 3; ++i) D.psi(i, n) = unit(rng);
    }
    const auto unscale = [&](const SplitPoint& s) {
      SplitPoint r = s;
      for (int n = 0; n < 3; ++n) {
        r.varsigma.col(n) /= D.varsigma(n);
        r.zeta.col(n) /= D.zeta(n);
        r.psi.col(n) = r.psi.col(n).cwiseQuotient(D.psi.col(n));
      }
      return r;
    };
    const SplitPoint v = random_split(rng, 2, 3, 3, 6.0);
    const double gamma = 0.3;
    SplitPoint y = SplitPoint::zeros(2, 3, 3);
    prox_g_scaled(v, gamma, m, D, y);
    const auto objective = [&](const SplitPoint& s) {
      return g_value(unscale(s), m) + (s - v).squared_norm() / (2.0 * gamma);
    };
    const double at_y = objective(y);
    REQUIRE(std::isfinite(at_y));
    for (int k = 0; k < 20; ++k) {
      SplitPoint s = y + random_split(rng, 2, 3, 3, 1e-3);
      for (int n = 1; n < 3; ++n) {
        const Vector lo = m.u_min.cwiseProduct(D.psi.col(n)), hi = m.u_max.cwiseProduct(D.psi.col(n));
        s.psi.col(n) = s.psi.col(n).cwiseMax(lo).cwiseMin(hi);
      }
      CHECK(objective(s) >= at_y - 1e-12 * std::max(1.0, at_y));
    }
  }
}

TEST_CASE("H and its adjoint") {
  PrimalPoint z = PrimalPoint::zeros(2, 3, 4);
  z.x.setOnes();
  z.u.setConstant(2.0);
  const SplitPoint t = apply_H(z);
  CHECK(t.varsigma.rightCols(3).isConstant(1.0));
  CHECK(t.zeta.rightCols(3).isConstant(1.0));
  CHECK(t.psi.rightCols(3).isConstant(2.0));
  CHECK(t.squared_norm() == doctest::Approx(2.0 * 6.0 + 4.0 * 9.0));

  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    PrimalPoint a = PrimalPoint::zeros(2, 3, 5);
    a.x = Matrix::Random(2, 5);
    a.u = Matrix::Random(3, 5);
    const SplitPoint y = random_split(rng, 2, 3, 5, 1.0);
    CHECK(apply_H(a).dot(y) == doctest::Approx(primal_dot(a, adjoint_H(y))).epsilon(1e-12));
  }

  SplitPoint y = SplitPoint::zeros(2, 3, 3);
  CHECK(adjoint_H(y).x.norm() == 0.0);
  y.varsigma.setRandom();
  y.zeta = -y.varsigma;
  CHECK(adjoint_H(y).x.norm() == 0.0);
}

TEST_CASE("theta recursion") {
  CHECK(theta_update(1.0) == doctest::Approx(0.6180339887).epsilon(1e-10));
  CHECK(theta_update(0.5) == doctest::Approx(0.390388).epsilon(1e-6));
  const double t1 = theta_update(0.5);
  CHECK(t1 * t1 == doctest::Approx(0.25 * (1.0 - t1)).epsilon(1e-14));
  double theta = 1.0;
  for (int nu = 0; nu <= 100; ++nu) {
    CHECK(theta <= 2.0 / (nu + 2.0) + 1e-15);
    const double next = theta_update(theta);
    CHECK(next > 0.0);
    CHECK(next < theta);
    theta = next;
  }
}

TEST_CASE("extrapolation") {
  std::mt19937_64 rng(37);
  const SplitPoint y = random_split(rng, 2, 2, 3, 1.0);
  const SplitPoint yp = random_split(rng, 2, 2, 3, 1.0);
  CHECK((extrapolate(y, y, 0.4, 0.7) - y).max_abs() == 0.0);
  CHECK((extrapolate(y, yp, 0.6, 1.0) - y).max_abs() == 0.0);
  const double th = 0.4, thp = 0.7;
  const SplitPoint w = extrapolate(y, yp, th, thp);
  const double c = th * (1.0 / thp - 1.0);
  for (int n = 0; n < 3; ++n) {
    for (int i = 0; i < 2; ++i) {
      CHECK(w.varsigma(i, n) == doctest::Approx(y.varsigma(i, n) + c * (y.varsigma(i, n) - yp.varsigma(i, n))));
      CHECK(w.zeta(i, n) == doctest::Approx(y.zeta(i, n) + c * (y.zeta(i, n) - yp.zeta(i, n))));
      CHECK(w.psi(i, n) == doctest::Approx(y.psi(i, n) + c * (y.psi(i, n) - yp.psi(i, n))));
    }
  }
}
