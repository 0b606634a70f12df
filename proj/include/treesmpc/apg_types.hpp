#pragma once

#include "treesmpc/network_model.hpp"
#include "treesmpc/scenario_tree.hpp"

namespace treesmpc {

/// Primal decision z over the tree. Columns are nodes. Column 0 holds the
/// fixed initial data: x(:,0) = p and u(:,0) = q (the previously applied
/// control). Column n >= 1 holds x at node n and the control on the edge
/// leading into n.
struct PrimalPoint {
  Matrix x;  // n_x x nodes
  Matrix u;  // n_u x nodes

  static PrimalPoint zeros(int nx, int nu, int nodes);
};

/// t = (varsigma, zeta, psi) = H z: two copies of every state at stages
/// 1..N and one copy of every control. Columns are nodes; the root column is
/// zero and unused. The dual vector y and its extrapolation w share this
/// layout, so DualPoint is the same type.
struct SplitPoint {
  Matrix varsigma;  // n_x x nodes
  Matrix zeta;      // n_x x nodes
  Matrix psi;       // n_u x nodes

  static SplitPoint zeros(int nx, int nu, int nodes);

  SplitPoint& operator+=(const SplitPoint& o);
  SplitPoint& operator-=(const SplitPoint& o);
  SplitPoint& operator*=(double s);

  double dot(const SplitPoint& o) const;
  double squared_norm() const { return dot(*this); }
  double max_abs() const;
};

using DualPoint = SplitPoint;

SplitPoint operator+(SplitPoint a, const SplitPoint& b);
SplitPoint operator-(SplitPoint a, const SplitPoint& b);
SplitPoint operator*(double s, SplitPoint a);

/// H z: varsigma = zeta = x, psi = u on non-root nodes.
SplitPoint apply_H(const PrimalPoint& z);

/// H' y: x slot receives varsigma + zeta, u slot receives psi (root columns
/// zero).
PrimalPoint adjoint_H(const DualPoint& y);

/// Inner product over non-root columns.
double primal_dot(const PrimalPoint& a, const PrimalPoint& b);

/// Diagonal change of dual coordinates, one scale per copy block:
/// a scalar for each varsigma/zeta column and one entry per control
/// component for psi. Columns are nodes.
struct DualScaling {
  Vector varsigma;  // nodes
  Vector zeta;      // nodes
  Matrix psi;       // n_u x nodes

  static DualScaling identity(int nu, int nodes);
  /// Elementwise D * y.
  SplitPoint apply(const SplitPoint& y) const;
};

}  // namespace treesmpc
