#include "treesmpc/apg_solver.hpp"

#include "treesmpc/errors.hpp"
#include "treesmpc/json_io.hpp"
#include "treesmpc/prox.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace treesmpc {

namespace {

constexpr double kSpectralMargin = 1.05;

// out = D .* s, elementwise by block.
void scale_into(const DualScaling& d, const SplitPoint& s, SplitPoint& out) {
  out.varsigma.noalias() = s.varsigma * d.varsigma.asDiagonal();
  out.zeta.noalias() = s.zeta * d.zeta.asDiagonal();
  out.psi = s.psi.cwiseProduct(d.psi);
}

}  // namespace

void SolverConfig::validate() const {
  if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (lambda && !(*lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (threads < 1) throw std::invalid_argument("thread count must be at least 1");
  if (record_every < 0) throw std::invalid_argument("record_every must be nonnegative");
}

double theta_update(double theta) {
  const double t2 = theta * theta;
  return 0.5 * (std::sqrt(t2 * t2 + 4.0 * t2) - t2);
}

DualPoint extrapolate(const DualPoint& y, const DualPoint& y_prev, double theta, double theta_prev) {
  const double coef = theta * (1.0 / theta_prev - 1.0);
  DualPoint w = y;
  w.varsigma += coef * (y.varsigma - y_prev.varsigma);
  w.zeta += coef * (y.zeta - y_prev.zeta);
  w.psi += coef * (y.psi - y_prev.psi);
  return w;
}

double smooth_cost(const NetworkModel& model, const ScenarioTree& tree, const PrimalPoint& z, std::int64_t k) {
  double total = 0.0;
  for (int n = 1; n < tree.num_nodes(); ++n) {
    const int j = tree.stage_of(n) - 1;
    const Vector du = z.u.col(n) - z.u.col(tree.ancestor(n));
    const double stage = model.W_alpha * model.price(k + j).dot(z.u.col(n)) + du.dot(model.Wu * du);
    total += tree.probability(n) * stage;
  }
  return total;
}

double soft_constrained_cost(const NetworkModel& model, const ScenarioTree& tree, const PrimalPoint& z,
                             std::int64_t k) {
  double total = smooth_cost(model, tree, z, k);
  for (int n = 1; n < tree.num_nodes(); ++n) {
    total += model.Wx * distance_above(z.x.col(n), model.x_s);
    total += model.gamma_d * distance_to_box(z.x.col(n), model.x_min, model.x_max);
  }
  return total;
}

Vector project_feasible_control(const NetworkModel& model, const Vector& u, const Vector& d) {
  // Dual of min 1/2 |w - u|^2 s.t. E w = b, w in U: maximize over mu the
  // concave piecewise quadratic phi(mu) with w(mu) = clamp(u - E' mu).
  const Vector b = -model.Ed * d;
  const Matrix& E = model.E;
  auto primal = [&](const Vector& mu) { return Vector((u - E.transpose() * mu).cwiseMax(model.u_min).cwiseMin(model.u_max)); };
  auto phi = [&](const Vector& mu, const Vector& w) { return 0.5 * (w - u).squaredNorm() + mu.dot(E * w - b); };

  const double tol = 1e-12 * std::max(1.0, b.cwiseAbs().maxCoeff() + E.cwiseAbs().maxCoeff() * u.cwiseAbs().maxCoeff());
  Vector mu = Vector::Zero(E.rows());
  Vector w = primal(mu);
  for (int it = 0; it < 100; ++it) {
    const Vector grad = E * w - b;
    if (grad.cwiseAbs().maxCoeff() <= tol) return w;
    const Vector v = u - E.transpose() * mu;
    Matrix active_E = E;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (v(i) <= model.u_min(i) || v(i) >= model.u_max(i)) active_E.col(i).setZero();
    }
    Matrix hess = active_E * E.transpose();
    hess.diagonal().array() += 1e-12 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
    const Vector step = hess.ldlt().solve(grad);
    // Ascent on phi along the Newton direction with backtracking.
    const double base = phi(mu, w);
    double t = 1.0;
    Vector mu_next, w_next;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      mu_next = mu + t * step;
      w_next = primal(mu_next);
      if (phi(mu_next, w_next) >= base + 1e-4 * t * grad.dot(step)) break;
    }
    mu = mu_next;
    w = w_next;
  }
  return w;
}

PrimalPoint project_and_resimulate(const NetworkModel& model, const ScenarioTree& tree, const PrimalPoint& z,
                                 const Matrix& demands) {
  PrimalPoint out = z;
  for (int n = 1; n < tree.num_nodes(); ++n) {
    out.u.col(n) = project_feasible_control(model, z.u.col(n), demands.col(n));
    out.x.col(n) = model.A * out.x.col(tree.ancestor(n)) + model.B * out.u.col(n) + model.Gd * demands.col(n);
  }
  return out;
}

Vector applied_input(const ScenarioTree& tree, const PrimalPoint& z) {
  Vector u = Vector::Zero(z.u.rows());
  double mass = 0.0;
  for (int n = tree.stage_begin(1); n < tree.stage_end(1); ++n) {
    u += tree.probability(n) * z.u.col(n);
    mass += tree.probability(n);
  }
  return u / mass;
}

TreeSolver::TreeSolver(const NetworkModel& model, const ScenarioTree& tree, SolverConfig config)
    : model_(model), tree_(tree), config_(config) {
  config_.validate();
  if (tree.nd() != model.nd()) {
    throw DimensionError("tree eps dimension " + std::to_string(tree.nd()) + " does not match n_d = " +
                         std::to_string(model.nd()));
  }
  pool_ = std::make_unique<WorkerPool>(config_.threads);
  basis_ = compute_basis(model);
  factor_ = factor_step(basis_, model);

  const SingleBranchOperators ops = assemble_single_branch(basis_, model, tree.horizon());
  sigma_ = strong_convexity_modulus(ops);
  scaling_ = config_.precondition ? compute_preconditioner(ops, tree)
                                  : DualScaling::identity(model.nu(), tree.num_nodes());

  if (config_.lambda) {
    lambda_ = *config_.lambda;
  } else if (config_.step_rule == StepSizeRule::kTreeSpectral) {
    lambda_ = 1.0 / (kSpectralMargin * dual_lipschitz_estimate(factor_, tree, scaling_, pool_.get()));
  } else {
    std::vector<int> all(static_cast<std::size_t>(tree.num_nodes()));
    std::iota(all.begin(), all.end(), 0);
    const double h_norm_sq = operator_norm_sq(scaling_, all, model.nx(), model.nu());
    lambda_ = compute_lambda(tree.min_scenario_probability() * sigma_, h_norm_sq);
  }
}

SolveReport TreeSolver::solve(const DemandForecast& forecast, const Vector& p, const Vector& q) {
  const auto start = std::chrono::steady_clock::now();
  const int nx = model_.nx();
  const int nu = model_.nu();
  const int nodes = tree_.num_nodes();
  if (p.size() != nx) throw DimensionError("initial state has wrong length");
  if (q.size() != nu) throw DimensionError("previous control has wrong length");

  const Matrix demands = node_demands(tree_, forecast);
  const StageCache cache = build_stage_cache(basis_, model_, tree_, demands, q, forecast.k, pool_.get());
  WorkerPool* pool = pool_.get();
  const double lambda = lambda_;

  SplitPoint y = SplitPoint::zeros(nx, nu, nodes);
  if (config_.warm_start && last_dual_ && last_dual_->varsigma.cols() == nodes) y = *last_dual_;
  SplitPoint y_prev = y;
  SplitPoint w = y;
  SplitPoint scaled_w = y;
  SplitPoint dhz = y;
  SplitPoint prox_arg = y;
  SplitPoint t = y;
  PrimalPoint z = PrimalPoint::zeros(nx, nu, nodes);
  PrimalPoint z_bar = z;
  SolveWorkspace ws;
  SolveWorkspace gap_ws;
  PrimalPoint gap_z;

  SolveReport report;
  report.lambda = lambda;
  report.min_residual = std::numeric_limits<double>::infinity();

  auto evaluate_gap = [&](int iteration, double residual) {
    IterationRecord rec;
    rec.iteration = iteration;
    rec.residual = residual;
    const PrimalPoint feasible = project_and_resimulate(model_, tree_, z_bar, demands);
    rec.primal = soft_constrained_cost(model_, tree_, feasible, forecast.k);
    const SplitPoint y_orig = scaling_.apply(y);
    solve_step(factor_, cache, tree_, y_orig, p, gap_z, gap_ws, pool);
    rec.dual = smooth_cost(model_, tree_, gap_z, forecast.k) + y_orig.dot(apply_H(gap_z)) -
               g_conjugate(y_orig, model_);
    rec.gap = rec.primal - rec.dual;
    return rec;
  };

  double theta = 1.0;
  double theta_prev = 1.0;
  double residual = 0.0;
  for (int it = 0; it < config_.max_iters; ++it) {
    const double coef = theta * (1.0 / theta_prev - 1.0);
    w.varsigma = y.varsigma + coef * (y.varsigma - y_prev.varsigma);
    w.zeta = y.zeta + coef * (y.zeta - y_prev.zeta);
    w.psi = y.psi + coef * (y.psi - y_prev.psi);

    scale_into(scaling_, w, scaled_w);
    solve_step(factor_, cache, tree_, scaled_w, p, z, ws, pool);

    dhz.varsigma.noalias() = z.x * scaling_.varsigma.asDiagonal();
    dhz.zeta.noalias() = z.x * scaling_.zeta.asDiagonal();
    dhz.psi = z.u.cwiseProduct(scaling_.psi);
    dhz.varsigma.col(0).setZero();
    dhz.zeta.col(0).setZero();
    dhz.psi.col(0).setZero();

    prox_arg.varsigma = w.varsigma / lambda + dhz.varsigma;
    prox_arg.zeta = w.zeta / lambda + dhz.zeta;
    prox_arg.psi = w.psi / lambda + dhz.psi;
    prox_g_scaled(prox_arg, 1.0 / lambda, model_, scaling_, t, pool);

    // dhz <- D H z - t, reused for the dual update and the residual.
    dhz -= t;
    std::swap(y, y_prev);
    y.varsigma = w.varsigma + lambda * dhz.varsigma;
    y.zeta = w.zeta + lambda * dhz.zeta;
    y.psi = w.psi + lambda * dhz.psi;

    residual = 0.0;
    if (nodes > 1) {
      const auto m = nodes - 1;
      residual = (dhz.varsigma.rightCols(m) * scaling_.varsigma.tail(m).cwiseInverse().asDiagonal())
                     .cwiseAbs()
                     .maxCoeff();
      residual = std::max(residual, (dhz.zeta.rightCols(m) * scaling_.zeta.tail(m).cwiseInverse().asDiagonal())
                                        .cwiseAbs()
                                        .maxCoeff());
      if (nu > 0) {
        residual = std::max(
            residual, dhz.psi.rightCols(m).cwiseQuotient(scaling_.psi.rightCols(m)).cwiseAbs().maxCoeff());
      }
    }
    report.min_residual = std::min(report.min_residual, residual);

    z_bar.x = (1.0 - theta) * z_bar.x + theta * z.x;
    z_bar.u = (1.0 - theta) * z_bar.u + theta * z.u;

    theta_prev = theta;
    theta = theta_update(theta);

    if (config_.record_every > 0 && (it + 1) % config_.record_every == 0) {
      report.history.push_back(evaluate_gap(it + 1, residual));
    }
  }

  const IterationRecord final_rec =
      (!report.history.empty() && report.history.back().iteration == config_.max_iters)
          ? report.history.back()
          : evaluate_gap(config_.max_iters, residual);

  report.iterations = config_.max_iters;
  report.residual = residual;
  report.gap = final_rec.gap;
  report.primal_cost = final_rec.primal;
  report.dual_cost = final_rec.dual;
  report.z = std::move(z);
  report.z_ergodic = std::move(z_bar);
  report.u0 = applied_input(tree_, report.z_ergodic);
  report.u0_nodes = report.z_ergodic.u.middleCols(tree_.stage_begin(1), tree_.stage_size(1));
  if (config_.warm_start) last_dual_ = y;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

SolveReport solve(const NetworkModel& model, const ScenarioTree& tree, const DemandForecast& forecast,
                  const Vector& p, const Vector& q, const SolverConfig& config) {
  TreeSolver solver(model, tree, config);
  return solver.solve(forecast, p, q);
}

nlohmann::json report_to_json(const SolveReport& r) {
  using json_io::json;
  json j;
  j["u0"] = json_io::from_vector(r.u0);
  j["u0_nodes"] = json_io::from_matrix(r.u0_nodes.transpose());
  j["residual"] = r.residual;
  j["min_residual"] = r.min_residual;
  j["gap"] = r.gap;
  j["primal_cost"] = r.primal_cost;
  j["dual_cost"] = r.dual_cost;
  j["iterations"] = r.iterations;
  j["lambda"] = r.lambda;
  j["wall_seconds"] = r.wall_seconds;
  j["x_ergodic"] = json_io::from_matrix(r.z_ergodic.x.transpose());
  j["u_ergodic"] = json_io::from_matrix(r.z_ergodic.u.transpose());
  json hist = json::array();
  for (const auto& h : r.history) {
    hist.push_back({{"iteration", h.iteration},
                    {"residual", h.residual},
                    {"gap", h.gap},
                    {"primal", h.primal},
                    {"dual", h.dual}});
  }
  j["history"] = std::move(hist);
  return j;
}

}  // namespace treesmpc
