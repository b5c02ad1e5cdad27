#pragma once

#include <cstdint>
#include <vector>

#include "ulv/explain.hpp"
#include "ulv/graph.hpp"

namespace ulv {

struct MetricVector {
  double ra_pre_pct = 0.0;
  double ra_post_pct = 0.0;
  double hs = 0.0;
  double esd = 0.0;
  int64_t ged_delta = 0;
  int64_t grs = 0;
  double mi_auc_pre = 0.0;
  double mi_auc_post = 0.0;
  bool ra_pre_degenerate = false;   // all-zero attribution denominator
  bool ra_post_degenerate = false;

  friend bool operator==(const MetricVector&, const MetricVector&) = default;
};

/// 100 * (sum of att over f) / (sum of att over surviving); 0 with the
/// degenerate flag set when the denominator is 0.
double residual_attribution(const AttributionMap& att, const ForgetSet& f,
                            const std::vector<NodeId>& surviving, bool* degenerate = nullptr);

/// Mean absolute attribution change over the shared node-id domain.
double heatmap_shift(const AttributionMap& pre, const AttributionMap& post);

/// Mean absolute attribution change restricted to the forget set.
double esd(const AttributionMap& pre, const AttributionMap& post, const ForgetSet& f);

/// |pre symmetric-difference post| on proxy edge sets.
int64_t ged_delta(const EdgeSet& proxy_pre, const EdgeSet& proxy_post);

/// |rules_pre| - |rules_post|, sign preserved.
int64_t grs(const RuleSet& rules_pre, const RuleSet& rules_post);

/// ROC-AUC of the loss-threshold attack: score -loss, members positive,
/// 0.5 credit per tied pair. Exact rank-statistic computation.
double mi_auc(const std::vector<double>& member_losses, const std::vector<double>& nonmember_losses);

MetricVector compute_all(const Snapshot& pre, const Snapshot& post, const ForgetSet& f,
                         const Graph& graph_post);

}  // namespace ulv
