#include "treesmpc/scenario_tree.hpp"

#include "treesmpc/errors.hpp"
#include "treesmpc/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace treesmpc {

namespace {

constexpr double kProbTol = 1e-9;

std::string node_name(int stage, int index_in_stage) {
  return "(" + std::to_string(stage) + "," + std::to_string(index_in_stage + 1) + ")";
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

ScenarioTree ScenarioTree::from_stages(int horizon, int nd, const std::vector<std::vector<NodeRecord>>& stages) {
  std::vector<std::string> issues;
  if (horizon < 1) issues.emplace_back("horizon N must be at least 1");
  if (static_cast<int>(stages.size()) != horizon + 1) {
    issues.push_back("expected " + std::to_string(horizon + 1) + " stages, got " + std::to_string(stages.size()));
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  if (stages[0].size() != 1) throw ValidationError({"stage 0 must contain exactly one root node"});

  ScenarioTree t;
  t.horizon_ = horizon;
  t.stage_offsets_.push_back(0);
  for (const auto& s : stages) t.stage_offsets_.push_back(t.stage_offsets_.back() + static_cast<int>(s.size()));
  const int total = t.stage_offsets_.back();
  t.stage_.resize(static_cast<std::size_t>(total));
  t.anc_.assign(static_cast<std::size_t>(total), -1);
  t.child_begin_.assign(static_cast<std::size_t>(total), 0);
  t.child_end_.assign(static_cast<std::size_t>(total), 0);
  t.prob_.resize(static_cast<std::size_t>(total));
  t.eps_ = Matrix::Zero(nd, total);

  for (int j = 0; j <= horizon; ++j) {
    const auto& stage = stages[static_cast<std::size_t>(j)];
    if (j > 0 && stage.empty()) issues.push_back("stage " + std::to_string(j) + " has no nodes");
    int prev_anc = -1;
    for (int i = 0; i < static_cast<int>(stage.size()); ++i) {
      const NodeRecord& rec = stage[static_cast<std::size_t>(i)];
      const int n = t.stage_offsets_[static_cast<std::size_t>(j)] + i;
      t.stage_[static_cast<std::size_t>(n)] = j;
      t.prob_[static_cast<std::size_t>(n)] = rec.prob;
      if (!(rec.prob > 0.0) || !std::isfinite(rec.prob)) {
        issues.push_back("node " + node_name(j, i) + " has nonpositive probability " + fmt(rec.prob));
      }
      if (rec.eps.size() != 0) {
        if (rec.eps.size() != nd) {
          issues.push_back("node " + node_name(j, i) + " has eps of length " + std::to_string(rec.eps.size()) +
                           ", expected " + std::to_string(nd));
        } else if (j > 0) {
          t.eps_.col(n) = rec.eps;
        }
      }
      if (j == 0) {
        if (rec.anc.has_value()) issues.emplace_back("root node must not have an ancestor");
        continue;
      }
      if (!rec.anc.has_value()) {
        issues.push_back("orphan node " + node_name(j, i) + ": missing ancestor");
        continue;
      }
      const int a = *rec.anc;
      if (a < 0 || a >= static_cast<int>(stages[static_cast<std::size_t>(j) - 1].size())) {
        issues.push_back("orphan node " + node_name(j, i) + ": ancestor index " + std::to_string(a) +
                         " out of range");
        continue;
      }
      if (a < prev_anc) {
        issues.push_back("node " + node_name(j, i) + ": children of a node must be contiguous (ancestor " +
                         "indices must be nondecreasing within a stage)");
      }
      prev_anc = std::max(prev_anc, a);
      t.anc_[static_cast<std::size_t>(n)] = t.stage_offsets_[static_cast<std::size_t>(j) - 1] + a;
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));

  // Child ranges. Ancestors are sorted within each stage, so children form runs.
  for (int n = 1; n < total; ++n) {
    const int a = t.anc_[static_cast<std::size_t>(n)];
    if (t.child_end_[static_cast<std::size_t>(a)] == 0) t.child_begin_[static_cast<std::size_t>(a)] = n;
    t.child_end_[static_cast<std::size_t>(a)] = n + 1;
  }
  for (int j = 0; j < horizon; ++j) {
    for (int n = t.stage_begin(j); n < t.stage_end(j); ++n) {
      if (t.num_children(n) == 0) {
        issues.push_back("node " + node_name(j, n - t.stage_begin(j)) + " at stage " + std::to_string(j) +
                         " < N has no children");
      }
    }
  }
  for (int n = t.stage_begin(horizon); n < total; ++n) {
    t.child_begin_[static_cast<std::size_t>(n)] = t.child_end_[static_cast<std::size_t>(n)] = total;
  }

  for (int j = 0; j <= horizon; ++j) {
    double sum = 0.0;
    for (int n = t.stage_begin(j); n < t.stage_end(j); ++n) sum += t.prob_[static_cast<std::size_t>(n)];
    if (std::abs(sum - 1.0) > kProbTol) {
      issues.push_back("probabilities of stage " + std::to_string(j) + " sum to " + fmt(sum));
    }
  }
  for (int j = 0; j < horizon; ++j) {
    for (int n = t.stage_begin(j); n < t.stage_end(j); ++n) {
      if (t.num_children(n) == 0) continue;
      double sum = 0.0;
      for (int c = t.child_begin(n); c < t.child_end(n); ++c) sum += t.prob_[static_cast<std::size_t>(c)];
      if (std::abs(sum - t.prob_[static_cast<std::size_t>(n)]) > kProbTol) {
        issues.push_back("children of node " + node_name(j, n - t.stage_begin(j)) + " sum to " + fmt(sum) +
                         ", expected " + fmt(t.prob_[static_cast<std::size_t>(n)]));
      }
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return t;
}

int ScenarioTree::branching_factor(int j) const {
  int b = 0;
  for (int n = stage_begin(j); n < stage_end(j); ++n) b = std::max(b, num_children(n));
  return b;
}

double ScenarioTree::min_scenario_probability() const {
  double p = 1.0;
  for (int n = stage_begin(horizon_); n < stage_end(horizon_); ++n) p = std::min(p, probability(n));
  return p;
}

std::vector<std::vector<NodeRecord>> ScenarioTree::stages() const {
  std::vector<std::vector<NodeRecord>> out(static_cast<std::size_t>(horizon_) + 1);
  for (int j = 0; j <= horizon_; ++j) {
    for (int n = stage_begin(j); n < stage_end(j); ++n) {
      NodeRecord rec;
      if (j > 0) rec.anc = ancestor(n) - stage_begin(j - 1);
      rec.prob = probability(n);
      rec.eps = eps_.col(n);
      out[static_cast<std::size_t>(j)].push_back(std::move(rec));
    }
  }
  return out;
}

std::vector<int> stage_sizes(const std::vector<int>& branching, int horizon) {
  std::vector<int> sizes{1};
  for (int j = 0; j < horizon; ++j) {
    const int b = j < static_cast<int>(branching.size()) ? branching[static_cast<std::size_t>(j)] : 1;
    sizes.push_back(sizes.back() * b);
  }
  return sizes;
}

ScenarioTree build_tree(const std::vector<int>& branching, const Matrix& eps, const std::vector<double>& probs,
                        int horizon) {
  if (static_cast<int>(branching.size()) > horizon) {
    throw ValidationError({"branching list longer than the horizon"});
  }
  for (int b : branching) {
    if (b < 1) throw ValidationError({"branching factors must be at least 1"});
  }
  const std::vector<int> sizes = stage_sizes(branching, horizon);
  int total = 0;
  for (int s : sizes) total += s;
  if (static_cast<int>(probs.size()) != total) {
    throw ValidationError({"expected " + std::to_string(total) + " probabilities, got " +
                           std::to_string(probs.size())});
  }
  if (eps.cols() != total) {
    throw ValidationError({"expected " + std::to_string(total) + " eps columns, got " +
                           std::to_string(eps.cols())});
  }

  std::vector<std::vector<NodeRecord>> stages(static_cast<std::size_t>(horizon) + 1);
  int n = 0;
  for (int j = 0; j <= horizon; ++j) {
    const int b = (j > 0 && j - 1 < static_cast<int>(branching.size()))
                      ? branching[static_cast<std::size_t>(j) - 1]
                      : 1;
    for (int i = 0; i < sizes[static_cast<std::size_t>(j)]; ++i, ++n) {
      NodeRecord rec;
      if (j > 0) rec.anc = i / b;
      rec.prob = probs[static_cast<std::size_t>(n)];
      rec.eps = eps.col(n);
      stages[static_cast<std::size_t>(j)].push_back(std::move(rec));
    }
  }
  return ScenarioTree::from_stages(horizon, static_cast<int>(eps.rows()), stages);
}

ScenarioTree load_tree(std::string_view source) {
  using json_io::json;
  const json doc = json_io::parse(std::string(source), "tree document");
  if (!doc.is_object() || !doc.contains("N") || !doc.contains("stages")) {
    throw ParseError("tree document: expected an object with keys 'N' and 'stages'");
  }
  if (!doc.at("N").is_number_integer()) throw ParseError("tree document: 'N' must be an integer");
  const int horizon = doc.at("N").get<int>();
  const json& jstages = doc.at("stages");
  if (!jstages.is_array()) throw ParseError("tree document: 'stages' must be an array");

  int nd = -1;
  std::vector<std::vector<NodeRecord>> stages;
  for (std::size_t j = 0; j < jstages.size(); ++j) {
    const json& js = jstages[j];
    if (!js.is_object() || !js.contains("nodes") || !js.at("nodes").is_array()) {
      throw ParseError("stage " + std::to_string(j) + ": expected an object with a 'nodes' array");
    }
    std::vector<NodeRecord> nodes;
    for (std::size_t i = 0; i < js.at("nodes").size(); ++i) {
      const json& jn = js.at("nodes")[i];
      const std::string where = "stage " + std::to_string(j) + " node " + std::to_string(i);
      if (!jn.is_object()) throw ParseError(where + ": expected an object");
      NodeRecord rec;
      if (jn.contains("anc") && !jn.at("anc").is_null()) {
        if (!jn.at("anc").is_number_integer()) throw ParseError(where + ": 'anc' must be an integer or null");
        rec.anc = jn.at("anc").get<int>();
      }
      if (!jn.contains("prob") || !jn.at("prob").is_number()) {
        throw ParseError(where + ": 'prob' must be a number");
      }
      rec.prob = jn.at("prob").get<double>();
      if (jn.contains("eps")) {
        rec.eps = json_io::to_vector(jn.at("eps"), where + " eps");
        if (j > 0) {
          if (nd < 0) nd = static_cast<int>(rec.eps.size());
        }
      } else if (j > 0) {
        throw ParseError(where + ": missing 'eps'");
      }
      nodes.push_back(std::move(rec));
    }
    stages.push_back(std::move(nodes));
  }
  if (nd < 0) nd = 0;
  // Root eps is optional; normalise to zero.
  if (!stages.empty() && !stages[0].empty()) {
    const Vector& root_eps = stages[0][0].eps;
    if (root_eps.size() != 0 && root_eps.size() != nd) {
      throw ValidationError({"root eps has length " + std::to_string(root_eps.size()) + ", expected " +
                             std::to_string(nd)});
    }
    stages[0][0].eps = Vector::Zero(nd);
  }
  return ScenarioTree::from_stages(horizon, nd, stages);
}

ScenarioTree load_tree_file(const std::string& path) { return load_tree(json_io::read_text_file(path)); }

std::string tree_to_json(const ScenarioTree& tree) {
  using json_io::json;
  json doc;
  doc["N"] = tree.horizon();
  json jstages = json::array();
  const auto stages = tree.stages();
  for (std::size_t j = 0; j < stages.size(); ++j) {
    json nodes = json::array();
    for (const NodeRecord& rec : stages[j]) {
      json jn;
      jn["anc"] = rec.anc ? json(*rec.anc) : json(nullptr);
      jn["prob"] = rec.prob;
      if (j > 0) jn["eps"] = json_io::from_vector(rec.eps);
      nodes.push_back(std::move(jn));
    }
    jstages.push_back(json{{"nodes", std::move(nodes)}});
  }
  doc["stages"] = std::move(jstages);
  return doc.dump(1);
}

Matrix node_demands(const ScenarioTree& tree, const DemandForecast& forecast) {
  if (forecast.horizon() != tree.horizon()) {
    throw DimensionError("forecast length " + std::to_string(forecast.horizon()) + " does not match tree horizon " +
                         std::to_string(tree.horizon()));
  }
  if (forecast.d_hat.rows() != tree.nd()) {
    throw DimensionError("forecast demand dimension " + std::to_string(forecast.d_hat.rows()) +
                         " does not match tree eps dimension " + std::to_string(tree.nd()));
  }
  Matrix d = Matrix::Zero(tree.nd(), tree.num_nodes());
  for (int n = 1; n < tree.num_nodes(); ++n) {
    d.col(n) = forecast.d_hat.col(tree.stage_of(n) - 1) + tree.eps().col(n);
  }
  return d;
}

std::vector<std::vector<int>> scenario_paths(const ScenarioTree& tree) {
  std::vector<std::vector<int>> paths;
  const int N = tree.horizon();
  for (int leaf = tree.stage_begin(N); leaf < tree.stage_end(N); ++leaf) {
    std::vector<int> path(static_cast<std::size_t>(N) + 1);
    int n = leaf;
    for (int j = N; j >= 0; --j) {
      path[static_cast<std::size_t>(j)] = n;
      n = tree.ancestor(n);
    }
    paths.push_back(std::move(path));
  }
  return paths;
}

}  // namespace treesmpc
