#pragma once

#include "treesmpc/apg_solver.hpp"
#include "treesmpc/network_model.hpp"
#include "treesmpc/scenario_tree.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace treesmpc {

/// Demand time series, one column per hour starting at absolute time 0.
struct DemandSeries {
  Matrix realized;               // n_d x T, what the plant sees
  std::optional<Matrix> nominal; // n_d x T, what the replay forecaster issues

  int length() const { return static_cast<int>(realized.cols()); }
};

/// {"realized": [[d_0], [d_1], ...], "nominal": [...]} with one inner array
/// per time step. "nominal" is optional.
DemandSeries load_demands(std::string_view source);
DemandSeries load_demands_file(const std::string& path);

enum class ForecastMode {
  kFileReplay,   // nominal series (realized if absent), shifted to k
  kPersistence,  // repeat the last observed day
};

ForecastMode parse_forecast_mode(const std::string& name);
std::string forecast_mode_name(ForecastMode mode);

/// Nominal forecast d_hat_{k+j|k}, j = 0..N-1. Persistence uses the value one
/// (or more) periods back, which must be strictly before k; early steps
/// without history fall back to replay.
DemandForecast make_forecast(const DemandSeries& series, ForecastMode mode, std::int64_t k, int horizon,
                             int period = 24);

struct SimulationConfig {
  std::string network_path;
  std::string tree_path;
  std::string demands_path;
  std::string forecast_path;  // optional separate nominal series
  int horizon = 24;
  int hs = 168;
  SolverConfig solver;
  std::string out_dir;
  std::uint64_t seed = 0;
  ForecastMode forecast = ForecastMode::kFileReplay;
  /// Relative std-dev of multiplicative Gaussian noise added to each issued
  /// forecast (drawn from `seed`); 0 disables it.
  double forecast_noise = 0.0;
  std::optional<Vector> x0;      // default: midpoint of x_s and x_max
  std::optional<Vector> u_prev;  // default: zero

  /// Throws std::invalid_argument on hs < 1, horizon < 1 or negative noise.
  void validate() const;
};

struct KpiReport {
  double kpi_e = 0.0;
  double kpi_du = 0.0;
  double kpi_s = 0.0;
  double kpi_r = 0.0;
};

/// Closed-loop record. states has hs+1 columns (x_0 .. x_hs); every other
/// per-step quantity has hs entries, entry k referring to the step that
/// takes x_k to x_{k+1}.
struct Trajectories {
  Matrix states;
  Matrix controls;
  Matrix demands;
  std::vector<StageCost> costs;  // stage cost of (x_{k+1}, u_k, u_{k-1})
  std::vector<double> residuals;
  std::vector<double> gaps;
  std::vector<double> solve_seconds;
  Vector u_initial;  // previous control before step 0
  int failures = 0;  // steps whose applied control or residual was not finite

  int steps() const { return static_cast<int>(controls.cols()); }
};

struct SimulationResult {
  Trajectories trajectories;
  KpiReport kpis;
  double factor_seconds = 0.0;
  double total_seconds = 0.0;
};

/// In-memory closed loop: factor step and preconditioning once, then per step
/// forecast, solve, apply u0 with the realized demand, shift u_prev.
SimulationResult run_closed_loop(const NetworkModel& model, const ScenarioTree& tree, const DemandSeries& series,
                                 const SimulationConfig& config);

/// Loads every file named in the config and runs the loop.
SimulationResult run_closed_loop(const SimulationConfig& config);

/// states and controls: one column per step k = 1..H_s (states are the
/// post-step volumes). u_prev is the control before the first step; k0 the
/// absolute time of the first step.
KpiReport compute_kpis(const Matrix& states, const Matrix& controls, const NetworkModel& model,
                       const Vector& u_prev, std::int64_t k0 = 0);

std::string trajectory_csv(const Trajectories& traj);
nlohmann::json kpi_to_json(const KpiReport& kpis);

/// Writes trajectory.csv, kpi.json and run_meta.json into dir (created if
/// missing). Throws IoError.
void emit_outputs(const Trajectories& traj, const KpiReport& kpis, const std::string& dir,
                  const nlohmann::json& meta);

nlohmann::json config_to_json(const SimulationConfig& config);

}  // namespace treesmpc
