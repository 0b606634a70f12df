#include "treesmpc/apg_solver.hpp"
#include "treesmpc/closed_loop.hpp"
#include "treesmpc/errors.hpp"
#include "treesmpc/json_io.hpp"
#include "treesmpc/parallel.hpp"
#include "treesmpc/prox.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

using namespace treesmpc;
using json_io::json;

namespace {

constexpr const char* kVersion = "0.1.0";

enum ExitCode { kOk = 0, kValidation = 1, kIo = 2, kInternal = 3 };

struct SolverFlags {
  int iters = 500;
  double lambda = 0.0;
  bool no_precondition = false;
  int threads = default_thread_count();

  void attach(CLI::App* cmd) {
    cmd->add_option("--iters", iters, "APG iterations per solve")->check(CLI::PositiveNumber);
    cmd->add_option("--lambda", lambda, "fixed dual step size (default: computed)")->check(CLI::PositiveNumber);
    cmd->add_flag("--no-precondition", no_precondition, "disable diagonal dual scaling");
    cmd->add_option("--threads", threads, "worker threads (default: TREESMPC_THREADS or 1)")
        ->check(CLI::PositiveNumber);
  }

  SolverConfig config() const {
    SolverConfig c;
    c.max_iters = iters;
    if (lambda > 0.0) c.lambda = lambda;
    c.precondition = !no_precondition;
    c.threads = threads;
    return c;
  }
};

Vector read_vector_file(const std::string& path, const std::string& what) {
  return json_io::to_vector(json_io::parse(json_io::read_text_file(path), what), what);
}

DemandForecast read_forecast_file(const std::string& path) {
  const json doc = json_io::parse(json_io::read_text_file(path), "forecast document");
  if (!doc.is_object() || !doc.contains("d_hat")) {
    throw ParseError("forecast document: expected an object with key 'd_hat' (one row per stage)");
  }
  DemandForecast f;
  f.d_hat = json_io::to_matrix(doc.at("d_hat"), "forecast.d_hat").transpose();
  if (doc.contains("k")) {
    if (!doc.at("k").is_number_integer()) throw ParseError("forecast document: 'k' must be an integer");
    f.k = doc.at("k").get<std::int64_t>();
  }
  return f;
}

void check_compatible(const NetworkModel& model, const ScenarioTree& tree) {
  if (tree.nd() != model.nd()) {
    throw ValidationError({"tree eps has dimension " + std::to_string(tree.nd()) + " but the network has n_d = " +
                           std::to_string(model.nd())});
  }
}

json version_info() {
  return json{{"treesmpc", kVersion},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

int cmd_validate(const std::string& network_path, const std::string& tree_path) {
  const NetworkModel model = load_network_file(network_path);
  const ScenarioTree tree = load_tree_file(tree_path);
  check_compatible(model, tree);
  std::cout << "network ok: n_x=" << model.nx() << " n_u=" << model.nu() << " n_d=" << model.nd()
            << " n_e=" << model.ne() << "\n";
  std::cout << "tree ok: N=" << tree.horizon() << " nodes=" << tree.num_nodes()
            << " scenarios=" << tree.num_scenarios() << "\n";
  return kOk;
}

int cmd_solve(const std::string& network_path, const std::string& tree_path, const std::string& forecast_path,
              const std::string& x0_path, const std::string& uprev_path, const SolverFlags& flags,
              const std::string& out_dir) {
  const NetworkModel model = load_network_file(network_path);
  const ScenarioTree tree = load_tree_file(tree_path);
  check_compatible(model, tree);
  const DemandForecast forecast = read_forecast_file(forecast_path);
  const Vector x0 = read_vector_file(x0_path, "x0");
  const Vector uprev = read_vector_file(uprev_path, "uprev");

  const SolveReport rep = solve(model, tree, forecast, x0, uprev, flags.config());
  json doc = report_to_json(rep);
  doc["versions"] = version_info();

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());
  json_io::write_text_file((std::filesystem::path(out_dir) / "solution.json").string(), doc.dump(2) + "\n");
  std::cout << "u0 = " << rep.u0.transpose() << "\nresidual = " << rep.residual << "  gap = " << rep.gap
            << "  iterations = " << rep.iterations << "\n";
  return kOk;
}

int cmd_simulate(SimulationConfig cfg, const std::string& x0_path, const std::string& uprev_path,
                 const std::string& forecaster) {
  cfg.forecast = parse_forecast_mode(forecaster);
  if (!x0_path.empty()) cfg.x0 = read_vector_file(x0_path, "x0");
  if (!uprev_path.empty()) cfg.u_prev = read_vector_file(uprev_path, "uprev");
  {
    const ScenarioTree tree = load_tree_file(cfg.tree_path);
    cfg.horizon = tree.horizon();
  }
  const SimulationResult res = run_closed_loop(cfg);
  json meta;
  meta["config"] = config_to_json(cfg);
  meta["versions"] = version_info();
  meta["wall_seconds"] = {{"factor", res.factor_seconds}, {"total", res.total_seconds}};
  double solve_total = 0.0;
  for (double s : res.trajectories.solve_seconds) solve_total += s;
  meta["wall_seconds"]["solves"] = solve_total;
  meta["failures"] = res.trajectories.failures;
  emit_outputs(res.trajectories, res.kpis, cfg.out_dir, meta);
  std::cout << kpi_to_json(res.kpis).dump() << "\n";
  return res.trajectories.failures == 0 ? kOk : kInternal;
}

int cmd_bench(const std::string& network_path, const std::string& tree_path, int repeat, const SolverFlags& flags) {
  using Clock = std::chrono::steady_clock;
  auto secs = [](Clock::time_point a) { return std::chrono::duration<double>(Clock::now() - a).count(); };
  const NetworkModel model = load_network_file(network_path);
  const ScenarioTree tree = load_tree_file(tree_path);
  check_compatible(model, tree);

  DemandForecast f;
  f.d_hat = Matrix::Zero(model.nd(), tree.horizon());
  const Vector p = 0.5 * (model.x_s + model.x_max);
  const Vector q = Vector::Zero(model.nu());
  WorkerPool pool(flags.threads);

  double factor_s = 0.0, solve_s = 0.0, prox_s = 0.0, total_s = 0.0;
  int solve_calls = 0;
  for (int r = 0; r < repeat; ++r) {
    auto t0 = Clock::now();
    const EliminationBasis basis = compute_basis(model);
    const FactorCache factor = factor_step(basis, model);
    factor_s += secs(t0);

    const Matrix demands = node_demands(tree, f);
    const StageCache cache = build_stage_cache(basis, model, tree, demands, q, 0, &pool);
    const SplitPoint w = SplitPoint::zeros(model.nx(), model.nu(), tree.num_nodes());
    PrimalPoint z;
    SolveWorkspace ws;
    SplitPoint t;
    const int inner = 20;
    t0 = Clock::now();
    for (int i = 0; i < inner; ++i) solve_step(factor, cache, tree, w, p, z, ws, &pool);
    solve_s += secs(t0);
    solve_calls += inner;
    const SplitPoint hz = apply_H(z);
    const DualScaling id = DualScaling::identity(model.nu(), tree.num_nodes());
    t0 = Clock::now();
    for (int i = 0; i < inner; ++i) prox_g_scaled(hz, 1.0, model, id, t, &pool);
    prox_s += secs(t0);

    t0 = Clock::now();
    solve(model, tree, f, p, q, flags.config());
    total_s += secs(t0);
  }
  const json out{{"repeat", repeat},
                 {"threads", flags.threads},
                 {"iterations", flags.iters},
                 {"nodes", tree.num_nodes()},
                 {"scenarios", tree.num_scenarios()},
                 {"factor_step_seconds", factor_s / repeat},
                 {"solve_step_seconds", solve_s / solve_calls},
                 {"prox_seconds", prox_s / solve_calls},
                 {"total_solve_seconds", total_s / repeat},
                 {"versions", version_info()}};
  std::cout << out.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scenario-tree stochastic MPC for drinking water networks (accelerated dual proximal gradient)"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string network, tree, forecast, x0, uprev, demands, out, forecaster = "replay", forecast_file;
  int hs = 168, repeat = 5;
  std::uint64_t seed = 0;
  double noise = 0.0;
  SolverFlags flags;

  auto* validate = app.add_subcommand("validate", "check a network and a tree file");
  validate->add_option("--network", network, "network JSON")->required();
  validate->add_option("--tree", tree, "scenario tree JSON")->required();

  auto* solve_cmd = app.add_subcommand("solve", "solve one SMPC problem");
  solve_cmd->add_option("--network", network, "network JSON")->required();
  solve_cmd->add_option("--tree", tree, "scenario tree JSON")->required();
  solve_cmd->add_option("--forecast", forecast, "forecast JSON {k, d_hat}")->required();
  solve_cmd->add_option("--x0", x0, "initial state JSON array")->required();
  solve_cmd->add_option("--uprev", uprev, "previous control JSON array")->required();
  solve_cmd->add_option("--out", out, "output directory")->required();
  flags.attach(solve_cmd);

  auto* simulate = app.add_subcommand("simulate", "closed-loop simulation");
  simulate->add_option("--network", network, "network JSON")->required();
  simulate->add_option("--tree", tree, "scenario tree JSON")->required();
  simulate->add_option("--demands", demands, "demand series JSON {realized, nominal}")->required();
  simulate->add_option("--hs", hs, "simulation length in steps")->check(CLI::PositiveNumber);
  simulate->add_option("--forecaster", forecaster, "replay or persistence");
  simulate->add_option("--forecast", forecast_file, "separate nominal series for the replay forecaster");
  simulate->add_option("--seed", seed, "seed for forecast noise");
  simulate->add_option("--noise", noise, "relative std-dev of forecast noise")->check(CLI::NonNegativeNumber);
  simulate->add_option("--x0", x0, "initial state JSON array (default: midpoint of x_s and x_max)");
  simulate->add_option("--uprev", uprev, "previous control JSON array (default: zero)");
  simulate->add_option("--out", out, "output directory")->required();
  flags.attach(simulate);

  auto* bench = app.add_subcommand("bench", "time factor step, solve step, prox and a full solve");
  bench->add_option("--network", network, "network JSON")->required();
  bench->add_option("--tree", tree, "scenario tree JSON")->required();
  bench->add_option("--repeat", repeat, "repetitions")->check(CLI::PositiveNumber);
  flags.attach(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    if (*validate) return cmd_validate(network, tree);
    if (*solve_cmd) return cmd_solve(network, tree, forecast, x0, uprev, flags, out);
    if (*simulate) {
      SimulationConfig cfg;
      cfg.network_path = network;
      cfg.tree_path = tree;
      cfg.demands_path = demands;
      cfg.forecast_path = forecast_file;
      cfg.hs = hs;
      cfg.solver = flags.config();
      cfg.out_dir = out;
      cfg.seed = seed;
      cfg.forecast_noise = noise;
      return cmd_simulate(cfg, x0, uprev, forecaster);
    }
    if (*bench) return cmd_bench(network, tree, repeat, flags);
  } catch (const ValidationError& e) {
    std::cerr << "validation error:\n";
    for (const auto& issue : e.issues()) std::cerr << "  - " << issue << "\n";
    return kValidation;
  } catch (const ParseError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kValidation;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kValidation;
  } catch (const std::out_of_range& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
