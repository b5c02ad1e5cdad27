#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ulv/graph.hpp"
#include "ulv/model.hpp"

namespace ulv {

/// Per-node saliency indexed by stable node id; absent nodes carry 0 so pre
/// and post maps always share a domain.
using AttributionMap = std::vector<double>;

struct Predicate {
  size_t feature = 0;
  double threshold = 0.0;
  bool greater = false;  // false: x[feature] <= threshold, true: >
  friend bool operator==(const Predicate&, const Predicate&) = default;
};

struct Rule {
  std::vector<Predicate> predicates;  // root-to-leaf order
  int32_t predicted = 0;
  friend bool operator==(const Rule&, const Rule&) = default;
};

struct RuleSet {
  std::vector<Rule> rules;
  int depth = 3;
  friend bool operator==(const RuleSet&, const RuleSet&) = default;
};

struct Snapshot {
  AttributionMap attribution;  // size n
  EdgeSet proxy;
  RuleSet rules;
  std::vector<NodeId> member_nodes;  // ascending
  std::vector<double> member_losses;
  std::vector<NodeId> nonmember_nodes;
  std::vector<double> nonmember_losses;
  std::vector<int32_t> predictions;  // size n, -1 for absent nodes
  std::string digest;                // binds run identity (config, k, forget set, shape)
  bool proxy_degenerate = false;     // no present forget node to center on
};

/// L1 norm of the input gradient of the train-mask cross-entropy, per node.
AttributionMap saliency(const ModelParams& params, const Graph& g, const ModelConfig& config);

/// Depth-limited CART on (features -> model-predicted class) over present
/// nodes. Fully deterministic; tree_seed is recorded by callers but the fit
/// itself never draws from it.
RuleSet fit_surrogate(const ModelParams& params, const Graph& g, const ModelConfig& config,
                      int depth, uint64_t tree_seed);

Snapshot take_snapshot(const ModelParams& params, const Graph& g, const ModelConfig& config,
                       const ForgetSet& f, int k, const std::vector<NodeId>& heldout);

/// True when every artifact matches exactly (digest included).
bool artifacts_equal(const Snapshot& a, const Snapshot& b);

/// One directory per snapshot: attribution.txt, proxy_edges.txt, rules.txt,
/// member_losses.txt, nonmember_losses.txt, predictions.txt, meta.json.
void export_snapshot(const Snapshot& snap, const std::filesystem::path& dir);

std::string format_rule(const Rule& r);

}  // namespace ulv
