#include "treesmpc/closed_loop.hpp"

#include "treesmpc/errors.hpp"
#include "treesmpc/json_io.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

namespace treesmpc {

namespace {

using json_io::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Matrix series_matrix(const json& doc, const char* key) {
  Matrix rows = json_io::to_matrix(doc.at(key), std::string("demands.") + key);
  return rows.transpose();
}

}  // namespace

DemandSeries load_demands(std::string_view source) {
  const json doc = json_io::parse(std::string(source), "demand document");
  if (!doc.is_object() || !doc.contains("realized")) {
    throw ParseError("demand document: expected an object with key 'realized'");
  }
  DemandSeries s;
  s.realized = series_matrix(doc, "realized");
  if (doc.contains("nominal") && !doc.at("nominal").is_null()) {
    s.nominal = series_matrix(doc, "nominal");
    if (s.nominal->rows() != s.realized.rows()) {
      throw ParseError("demand document: 'nominal' and 'realized' have different widths");
    }
  }
  return s;
}

DemandSeries load_demands_file(const std::string& path) { return load_demands(json_io::read_text_file(path)); }

ForecastMode parse_forecast_mode(const std::string& name) {
  if (name == "replay" || name == "file") return ForecastMode::kFileReplay;
  if (name == "persistence") return ForecastMode::kPersistence;
  throw std::invalid_argument("unknown forecaster '" + name + "' (expected replay or persistence)");
}

std::string forecast_mode_name(ForecastMode mode) {
  return mode == ForecastMode::kPersistence ? "persistence" : "replay";
}

DemandForecast make_forecast(const DemandSeries& series, ForecastMode mode, std::int64_t k, int horizon,
                             int period) {
  const Matrix& nominal = series.nominal ? *series.nominal : series.realized;
  if (k < 0 || k + horizon > nominal.cols()) {
    throw std::out_of_range("demand series does not cover steps " + std::to_string(k) + ".." +
                            std::to_string(k + horizon - 1));
  }
  DemandForecast f;
  f.k = k;
  f.d_hat.resize(series.realized.rows(), horizon);
  for (int j = 0; j < horizon; ++j) {
    const std::int64_t t = k + j;
    if (mode == ForecastMode::kPersistence) {
      const std::int64_t back = (static_cast<std::int64_t>(j) / period + 1) * period;
      if (t - back >= 0) {
        f.d_hat.col(j) = series.realized.col(t - back);
        continue;
      }
    }
    f.d_hat.col(j) = nominal.col(t);
  }
  return f;
}

void SimulationConfig::validate() const {
  if (hs < 1) throw std::invalid_argument("simulation length must be at least 1");
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  if (!(forecast_noise >= 0.0)) throw std::invalid_argument("forecast noise must be nonnegative");
  solver.validate();
}

KpiReport compute_kpis(const Matrix& states, const Matrix& controls, const NetworkModel& model,
                       const Vector& u_prev, std::int64_t k0) {
  const auto hs = controls.cols();
  if (states.cols() != hs) {
    throw DimensionError("KPI sequences differ in length: " + std::to_string(states.cols()) + " states, " +
                         std::to_string(hs) + " controls");
  }
  if (hs == 0) throw DimensionError("KPI sequences are empty");
  if (states.rows() != model.nx() || controls.rows() != model.nu() || u_prev.size() != model.nu()) {
    throw DimensionError("KPI sequences do not match the network dimensions");
  }

  KpiReport r;
  double volume = 0.0;
  for (Eigen::Index k = 0; k < hs; ++k) {
    r.kpi_e += model.price(k0 + k).dot(controls.col(k).cwiseAbs());
    const Vector du = controls.col(k) - (k == 0 ? u_prev : Vector(controls.col(k - 1)));
    r.kpi_du += du.squaredNorm();
    r.kpi_s += (model.x_s - states.col(k)).cwiseMax(0.0).sum();
    volume += states.col(k).lpNorm<1>();
  }
  const double n = static_cast<double>(hs);
  r.kpi_e /= n;
  r.kpi_du /= n;
  volume /= n;
  if (!(volume > 0.0)) throw std::domain_error("average volume is zero; KPI_R undefined");
  r.kpi_r = model.x_s.lpNorm<1>() / volume * 100.0;
  return r;
}

SimulationResult run_closed_loop(const NetworkModel& model, const ScenarioTree& tree, const DemandSeries& series,
                                 const SimulationConfig& config) {
  config.validate();
  const int N = tree.horizon();
  if (config.horizon != N) {
    throw DimensionError("configured horizon " + std::to_string(config.horizon) + " does not match tree horizon " +
                         std::to_string(N));
  }
  if (series.realized.rows() != model.nd()) throw DimensionError("demand series width does not match n_d");
  if (series.length() < config.hs + N) {
    throw std::out_of_range("realized demands cover " + std::to_string(series.length()) + " steps; need " +
                            std::to_string(config.hs + N));
  }
  if (series.nominal && series.nominal->cols() < config.hs + N) {
    throw std::out_of_range("nominal demands do not cover H_s + N steps");
  }

  const auto t_total = Clock::now();
  const Vector x0 = config.x0 ? *config.x0 : Vector(0.5 * (model.x_s + model.x_max));
  const Vector q0 = config.u_prev ? *config.u_prev : Vector(Vector::Zero(model.nu()));
  if (x0.size() != model.nx() || q0.size() != model.nu()) throw DimensionError("x0 or u_prev has wrong length");

  SimulationResult result;
  auto t_factor = Clock::now();
  TreeSolver solver(model, tree, config.solver);
  result.factor_seconds = seconds_since(t_factor);

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  Trajectories& tr = result.trajectories;
  const int hs = config.hs;
  tr.states.resize(model.nx(), hs + 1);
  tr.controls.resize(model.nu(), hs);
  tr.demands.resize(model.nd(), hs);
  tr.u_initial = q0;
  tr.states.col(0) = x0;

  Vector x = x0;
  Vector q = q0;
  for (int k = 0; k < hs; ++k) {
    DemandForecast f = make_forecast(series, config.forecast, k, N);
    if (config.forecast_noise > 0.0) {
      for (Eigen::Index i = 0; i < f.d_hat.size(); ++i) {
        f.d_hat.data()[i] *= 1.0 + config.forecast_noise * noise(rng);
      }
    }
    const auto t_solve = Clock::now();
    const SolveReport rep = solver.solve(f, x, q);
    tr.solve_seconds.push_back(seconds_since(t_solve));

    const Vector u = rep.u0;
    const Vector d = series.realized.col(k);
    const Vector x_next = simulate_step(model, x, u, d);
    if (!u.allFinite() || !std::isfinite(rep.residual) || !x_next.allFinite()) ++tr.failures;

    tr.controls.col(k) = u;
    tr.demands.col(k) = d;
    tr.costs.push_back(stage_cost(model, x_next, u, q, k));
    tr.residuals.push_back(rep.residual);
    tr.gaps.push_back(rep.gap);
    tr.states.col(k + 1) = x_next;
    x = x_next;
    q = u;
  }

  result.kpis = compute_kpis(tr.states.rightCols(hs), tr.controls, model, q0, 0);
  result.total_seconds = seconds_since(t_total);
  return result;
}

SimulationResult run_closed_loop(const SimulationConfig& config) {
  const NetworkModel model = load_network_file(config.network_path);
  const ScenarioTree tree = load_tree_file(config.tree_path);
  DemandSeries series = load_demands_file(config.demands_path);
  if (!config.forecast_path.empty()) {
    const DemandSeries fc = load_demands_file(config.forecast_path);
    if (fc.realized.rows() != series.realized.rows()) {
      throw DimensionError("forecast series width does not match the realized series");
    }
    series.nominal = fc.nominal ? *fc.nominal : fc.realized;
  }
  return run_closed_loop(model, tree, series, config);
}

std::string trajectory_csv(const Trajectories& tr) {
  std::ostringstream out;
  out << std::setprecision(17);
  const auto nx = tr.states.rows();
  const auto nu = tr.controls.rows();
  const auto nd = tr.demands.rows();
  out << "k";
  for (Eigen::Index i = 0; i < nx; ++i) out << ",x" << i + 1;
  for (Eigen::Index i = 0; i < nu; ++i) out << ",u" << i + 1;
  for (Eigen::Index i = 0; i < nd; ++i) out << ",d" << i + 1;
  out << ",cost_economic,cost_smoothing,cost_safety,residual,gap\n";
  for (int k = 0; k < tr.steps(); ++k) {
    out << k;
    for (Eigen::Index i = 0; i < nx; ++i) out << ',' << tr.states(i, k);
    for (Eigen::Index i = 0; i < nu; ++i) out << ',' << tr.controls(i, k);
    for (Eigen::Index i = 0; i < nd; ++i) out << ',' << tr.demands(i, k);
    const StageCost& c = tr.costs[static_cast<std::size_t>(k)];
    out << ',' << c.economic << ',' << c.smoothing << ',' << c.safety << ','
        << tr.residuals[static_cast<std::size_t>(k)] << ',' << tr.gaps[static_cast<std::size_t>(k)] << '\n';
  }
  return out.str();
}

nlohmann::json kpi_to_json(const KpiReport& kpis) {
  return json{{"KPI_E", kpis.kpi_e}, {"KPI_dU", kpis.kpi_du}, {"KPI_S", kpis.kpi_s}, {"KPI_R", kpis.kpi_r}};
}

nlohmann::json config_to_json(const SimulationConfig& c) {
  json j{{"network", c.network_path},
         {"tree", c.tree_path},
         {"demands", c.demands_path},
         {"forecast_file", c.forecast_path},
         {"horizon", c.horizon},
         {"hs", c.hs},
         {"seed", c.seed},
         {"forecaster", forecast_mode_name(c.forecast)},
         {"forecast_noise", c.forecast_noise},
         {"iters", c.solver.max_iters},
         {"precondition", c.solver.precondition},
         {"threads", c.solver.threads}};
  j["lambda"] = c.solver.lambda ? json(*c.solver.lambda) : json(nullptr);
  if (c.x0) j["x0"] = json_io::from_vector(*c.x0);
  if (c.u_prev) j["u_prev"] = json_io::from_vector(*c.u_prev);
  return j;
}

void emit_outputs(const Trajectories& traj, const KpiReport& kpis, const std::string& dir,
                  const nlohmann::json& meta) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  const std::filesystem::path base(dir);
  json_io::write_text_file((base / "trajectory.csv").string(), trajectory_csv(traj));
  json_io::write_text_file((base / "kpi.json").string(), kpi_to_json(kpis).dump(2) + "\n");
  json_io::write_text_file((base / "run_meta.json").string(), meta.dump(2) + "\n");
}

}  // namespace treesmpc
