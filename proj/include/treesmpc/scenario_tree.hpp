#pragma once

#include "treesmpc/network_model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace treesmpc {

/// One node as it appears in a stage listing: ancestor index within the
/// previous stage (nullopt for the root), probability and demand error.
struct NodeRecord {
  std::optional<int> anc;
  double prob = 0.0;
  Vector eps;
};

/// Staged scenario tree over stages 0..N.
///
/// Nodes are stored stage-major in flat arrays; the children of every node
/// occupy a contiguous index range of the next stage. States live on nodes.
/// Controls and demands live on the non-root nodes they lead into (one per
/// tree edge), so node n at stage j >= 1 carries u_{j-1} and d_{j-1}.
class ScenarioTree {
 public:
  /// Validates topology and probabilities; throws ValidationError.
  static ScenarioTree from_stages(int horizon, int nd, const std::vector<std::vector<NodeRecord>>& stages);

  int horizon() const { return horizon_; }
  int num_nodes() const { return static_cast<int>(anc_.size()); }
  int nd() const { return static_cast<int>(eps_.rows()); }

  int stage_begin(int j) const { return stage_offsets_[static_cast<std::size_t>(j)]; }
  int stage_end(int j) const { return stage_offsets_[static_cast<std::size_t>(j) + 1]; }
  int stage_size(int j) const { return stage_end(j) - stage_begin(j); }
  int stage_of(int node) const { return stage_[static_cast<std::size_t>(node)]; }

  /// Ancestor node index; -1 for the root.
  int ancestor(int node) const { return anc_[static_cast<std::size_t>(node)]; }
  int child_begin(int node) const { return child_begin_[static_cast<std::size_t>(node)]; }
  int child_end(int node) const { return child_end_[static_cast<std::size_t>(node)]; }
  int num_children(int node) const { return child_end(node) - child_begin(node); }

  double probability(int node) const { return prob_[static_cast<std::size_t>(node)]; }
  std::span<const double> probabilities() const { return prob_; }

  /// Demand error at a node (zero at the root); columns are nodes.
  const Matrix& eps() const { return eps_; }

  int num_scenarios() const { return stage_size(horizon_); }
  /// Maximum number of children among the nodes at stage j (j < N).
  int branching_factor(int j) const;
  /// Smallest leaf probability.
  double min_scenario_probability() const;

  /// Stage listing suitable for from_stages / the tree file.
  std::vector<std::vector<NodeRecord>> stages() const;

 private:
  int horizon_ = 0;
  std::vector<int> stage_offsets_;
  std::vector<int> stage_;
  std::vector<int> anc_;
  std::vector<int> child_begin_;
  std::vector<int> child_end_;
  std::vector<double> prob_;
  Matrix eps_;
};

/// Nominal demand forecast d_hat_{k+j|k}, j = 0..N-1 (columns), issued at k.
struct DemandForecast {
  Matrix d_hat;
  std::int64_t k = 0;

  int horizon() const { return static_cast<int>(d_hat.cols()); }
};

/// Builds a tree from per-stage branching factors. Stages beyond
/// branching.size() branch with factor 1. `eps` holds one column per node
/// (stage-major, root included and ignored); `probs` one entry per node.
ScenarioTree build_tree(const std::vector<int>& branching, const Matrix& eps, const std::vector<double>& probs,
                        int horizon);

/// Number of nodes per stage implied by a branching list.
std::vector<int> stage_sizes(const std::vector<int>& branching, int horizon);

ScenarioTree load_tree(std::string_view source);
ScenarioTree load_tree_file(const std::string& path);
std::string tree_to_json(const ScenarioTree& tree);

/// Per-node demands d = d_hat_{stage-1} + eps (columns are nodes; root column
/// is zero and unused).
Matrix node_demands(const ScenarioTree& tree, const DemandForecast& forecast);

/// Root-to-leaf node index paths, one per scenario, each of length N+1.
std::vector<std::vector<int>> scenario_paths(const ScenarioTree& tree);

}  // namespace treesmpc
