#include "treesmpc/apg_types.hpp"

namespace treesmpc {

PrimalPoint PrimalPoint::zeros(int nx, int nu, int nodes) {
  return {Matrix::Zero(nx, nodes), Matrix::Zero(nu, nodes)};
}

SplitPoint SplitPoint::zeros(int nx, int nu, int nodes) {
  return {Matrix::Zero(nx, nodes), Matrix::Zero(nx, nodes), Matrix::Zero(nu, nodes)};
}

SplitPoint& SplitPoint::operator+=(const SplitPoint& o) {
  varsigma += o.varsigma;
  zeta += o.zeta;
  psi += o.psi;
  return *this;
}

SplitPoint& SplitPoint::operator-=(const SplitPoint& o) {
  varsigma -= o.varsigma;
  zeta -= o.zeta;
  psi -= o.psi;
  return *this;
}

SplitPoint& SplitPoint::operator*=(double s) {
  varsigma *= s;
  zeta *= s;
  psi *= s;
  return *this;
}

double SplitPoint::dot(const SplitPoint& o) const {
  const auto n = varsigma.cols() - 1;
  return varsigma.rightCols(n).cwiseProduct(o.varsigma.rightCols(n)).sum() +
         zeta.rightCols(n).cwiseProduct(o.zeta.rightCols(n)).sum() +
         psi.rightCols(n).cwiseProduct(o.psi.rightCols(n)).sum();
}

double SplitPoint::max_abs() const {
  const auto n = varsigma.cols() - 1;
  if (n <= 0) return 0.0;
  double m = varsigma.rightCols(n).cwiseAbs().maxCoeff();
  m = std::max(m, zeta.rightCols(n).cwiseAbs().maxCoeff());
  if (psi.rows() > 0) m = std::max(m, psi.rightCols(n).cwiseAbs().maxCoeff());
  return m;
}

SplitPoint operator+(SplitPoint a, const SplitPoint& b) { return a += b; }
SplitPoint operator-(SplitPoint a, const SplitPoint& b) { return a -= b; }
SplitPoint operator*(double s, SplitPoint a) { return a *= s; }

SplitPoint apply_H(const PrimalPoint& z) {
  SplitPoint t{z.x, z.x, z.u};
  t.varsigma.col(0).setZero();
  t.zeta.col(0).setZero();
  t.psi.col(0).setZero();
  return t;
}

PrimalPoint adjoint_H(const DualPoint& y) {
  PrimalPoint g{y.varsigma + y.zeta, y.psi};
  g.x.col(0).setZero();
  g.u.col(0).setZero();
  return g;
}

double primal_dot(const PrimalPoint& a, const PrimalPoint& b) {
  const auto n = a.x.cols() - 1;
  return a.x.rightCols(n).cwiseProduct(b.x.rightCols(n)).sum() +
         a.u.rightCols(n).cwiseProduct(b.u.rightCols(n)).sum();
}

DualScaling DualScaling::identity(int nu, int nodes) {
  return {Vector::Ones(nodes), Vector::Ones(nodes), Matrix::Ones(nu, nodes)};
}

SplitPoint DualScaling::apply(const SplitPoint& y) const {
  SplitPoint out{y.varsigma * varsigma.asDiagonal(), y.zeta * zeta.asDiagonal(), y.psi.cwiseProduct(psi)};
  return out;
}

}  // namespace treesmpc
