#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace treesmpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Flow-based model of a drinking water network.
///
///   x+ = A x + B u + Gd d       (tank mass balance)
///   0  = E u + Ed d             (junction balance)
///
/// together with flow/volume bounds, the safety volume and the stage cost
/// weights. Instances returned by load_network() have been validated and are
/// treated as immutable.
struct NetworkModel {
  Matrix A;   // n_x x n_x
  Matrix B;   // n_x x n_u
  Matrix Gd;  // n_x x n_d
  Matrix E;   // n_e x n_u
  Matrix Ed;  // n_e x n_d

  Vector u_min, u_max;
  Vector x_min, x_max;
  Vector x_s;

  Vector alpha1;
  /// Electricity price vectors, indexed by absolute time modulo the period.
  std::vector<Vector> alpha2_schedule;

  double W_alpha = 1.0;
  Matrix Wu;
  double Wx = 1.0;
  double gamma_d = 1.0;

  int nx() const { return static_cast<int>(A.rows()); }
  int nu() const { return static_cast<int>(B.cols()); }
  int nd() const { return static_cast<int>(Gd.cols()); }
  int ne() const { return static_cast<int>(E.rows()); }

  /// alpha2 at absolute time k (k >= 0).
  const Vector& alpha2(std::int64_t k) const;
  /// alpha1 + alpha2(k).
  Vector price(std::int64_t k) const;
};

/// Components of the stage cost l = l^w + l^Delta + l^S.
struct StageCost {
  double economic = 0.0;   // W_alpha (alpha1 + alpha2_k)' u
  double smoothing = 0.0;  // du' Wu du
  double safety = 0.0;     // Wx dist(x | x >= x_s)

  double total() const { return economic + smoothing + safety; }
};

/// Parses and validates a network document (JSON). Throws ParseError for a
/// malformed document and ValidationError listing every violated invariant.
NetworkModel load_network(std::string_view source);
NetworkModel load_network_file(const std::string& path);

/// Runs every invariant check on an in-memory model; throws ValidationError.
void validate_network(const NetworkModel& model);

Vector simulate_step(const NetworkModel& model, const Vector& x, const Vector& u, const Vector& d);

Vector junction_residual(const NetworkModel& model, const Vector& u, const Vector& d);

StageCost stage_cost(const NetworkModel& model, const Vector& x, const Vector& u, const Vector& u_prev,
                     std::int64_t k);

/// Euclidean distance from x to {y : y >= lower}.
double distance_above(const Vector& x, const Vector& lower);
/// Euclidean distance from x to the box [lo, hi].
double distance_to_box(const Vector& x, const Vector& lo, const Vector& hi);

}  // namespace treesmpc
