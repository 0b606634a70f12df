#pragma once

#include "treesmpc/apg_types.hpp"
#include "treesmpc/elimination.hpp"
#include "treesmpc/factor_solve.hpp"
#include "treesmpc/parallel.hpp"
#include "treesmpc/preconditioning.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <vector>

namespace treesmpc {

/// How the dual step size lambda is chosen when not overridden.
enum class StepSizeRule {
  /// 1 / (1.05 * largest eigenvalue of the scaled dual Hessian of the actual
  /// tree), estimated once by power iteration through solve_step.
  kTreeSpectral,
  /// sigma_tree / ||D H||^2 with sigma_tree = (smallest scenario probability)
  /// x (single-branch strong convexity modulus). A guaranteed bound, usually
  /// conservative.
  kSingleBranchBound,
};

struct SolverConfig {
  int max_iters = 500;
  std::optional<double> lambda;
  bool precondition = true;
  int threads = 1;
  /// Record residual and gap every `record_every` iterations (0 = never).
  /// Each gap evaluation costs one extra solve step.
  int record_every = 0;
  bool warm_start = false;
  StepSizeRule step_rule = StepSizeRule::kTreeSpectral;

  /// Throws std::invalid_argument on max_iters < 1, lambda <= 0 or threads < 1.
  void validate() const;
};

struct IterationRecord {
  int iteration = 0;        // number of completed iterations
  double residual = 0.0;    // ||H z - t||_inf at that iteration
  double gap = 0.0;         // duality-gap estimate from the ergodic iterate
  double primal = 0.0;      // primal cost used in the gap
  double dual = 0.0;        // dual objective used in the gap
};

struct SolveReport {
  /// Applied input: probability-weighted mean of the ergodic controls on the
  /// stage-1 nodes (equals the single root-edge control when the root has
  /// one child).
  Vector u0;
  /// Ergodic controls on each stage-1 node (columns in node order).
  Matrix u0_nodes;
  PrimalPoint z;           // last pointwise iterate
  PrimalPoint z_ergodic;   // theta-weighted average
  double residual = 0.0;   // ||H z - t||_inf at the last iteration
  double min_residual = 0.0;
  double gap = 0.0;
  double primal_cost = 0.0;
  double dual_cost = 0.0;
  int iterations = 0;
  double lambda = 0.0;
  double wall_seconds = 0.0;
  std::vector<IterationRecord> history;
};

/// Offline part of the controller (factor step, preconditioner and step
/// size) for one network and tree, plus the workspace of its solves. Not
/// safe for concurrent use; create one per thread.
class TreeSolver {
 public:
  TreeSolver(const NetworkModel& model, const ScenarioTree& tree, SolverConfig config = {});

  /// Runs exactly config.max_iters iterations. `forecast.k` is the absolute
  /// time of the first stage; p is the measured state and q the previously
  /// applied control.
  SolveReport solve(const DemandForecast& forecast, const Vector& p, const Vector& q);

  const EliminationBasis& basis() const { return basis_; }
  const FactorCache& factor() const { return factor_; }
  const DualScaling& scaling() const { return scaling_; }
  const SolverConfig& config() const { return config_; }
  double lambda() const { return lambda_; }
  double sigma_single_branch() const { return sigma_; }
  WorkerPool& pool() { return *pool_; }

 private:
  const NetworkModel& model_;
  const ScenarioTree& tree_;
  SolverConfig config_;
  EliminationBasis basis_;
  FactorCache factor_;
  DualScaling scaling_;
  double sigma_ = 0.0;
  double lambda_ = 0.0;
  std::unique_ptr<WorkerPool> pool_;
  std::optional<SplitPoint> last_dual_;
};

/// One-shot convenience wrapper around TreeSolver.
SolveReport solve(const NetworkModel& model, const ScenarioTree& tree, const DemandForecast& forecast,
                  const Vector& p, const Vector& q, const SolverConfig& config = {});

/// theta_{nu+1} = (sqrt(theta^4 + 4 theta^2) - theta^2) / 2.
double theta_update(double theta);

/// w = y + theta (1/theta_prev - 1) (y - y_prev).
DualPoint extrapolate(const DualPoint& y, const DualPoint& y_prev, double theta, double theta_prev);

/// Expected economic + smoothing cost of z over the tree (weights p of the
/// node each control leads into). z.u(:,0) must hold q. k is the absolute
/// time of stage 0.
double smooth_cost(const NetworkModel& model, const ScenarioTree& tree, const PrimalPoint& z, std::int64_t k);

/// smooth_cost plus the safety and soft-bound penalties on x at stages 1..N.
double soft_constrained_cost(const NetworkModel& model, const ScenarioTree& tree, const PrimalPoint& z,
                             std::int64_t k);

/// Euclidean projection of u onto {w in [u_min, u_max] : E w + Ed d = 0}
/// (semismooth Newton on the junction multipliers). Returns the best point
/// found when the set is empty.
Vector project_feasible_control(const NetworkModel& model, const Vector& u, const Vector& d);

/// Projects every control onto the box and junction constraints and
/// re-simulates the states from x(:,0) along the tree with the node demands.
PrimalPoint project_and_resimulate(const NetworkModel& model, const ScenarioTree& tree, const PrimalPoint& z,
                                 const Matrix& demands);

/// Probability-weighted mean of the stage-1 controls.
Vector applied_input(const ScenarioTree& tree, const PrimalPoint& z);

nlohmann::json report_to_json(const SolveReport& report);

}  // namespace treesmpc
