#include "ulv/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "ulv/errors.hpp"

namespace ulv {

double residual_attribution(const AttributionMap& att, const ForgetSet& f,
                            const std::vector<NodeId>& surviving, bool* degenerate) {
  if (degenerate) *degenerate = false;
  double denom = 0.0;
  for (NodeId v : surviving) {
    if (v < 0 || static_cast<size_t>(v) >= att.size())
      throw ArgumentError("surviving node " + std::to_string(v) + " outside attribution domain");
    denom += att[v];
  }
  if (denom == 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  double num = 0.0;
  for (NodeId v : f.node_ids) {
    if (v < 0 || static_cast<size_t>(v) >= att.size())
      throw ArgumentError("forget node " + std::to_string(v) + " outside attribution domain");
    num += att[v];
  }
  return 100.0 * num / denom;
}

double heatmap_shift(const AttributionMap& pre, const AttributionMap& post) {
  if (pre.size() != post.size())
    throw ArgumentError("attribution domains differ: " + std::to_string(pre.size()) + " vs " +
                        std::to_string(post.size()));
  if (pre.empty()) throw ArgumentError("attribution domain is empty");
  double total = 0.0;
  for (size_t v = 0; v < pre.size(); ++v) total += std::fabs(pre[v] - post[v]);
  return total / static_cast<double>(pre.size());
}

double esd(const AttributionMap& pre, const AttributionMap& post, const ForgetSet& f) {
  if (pre.size() != post.size())
    throw ArgumentError("attribution domains differ: " + std::to_string(pre.size()) + " vs " +
                        std::to_string(post.size()));
  if (f.node_ids.empty()) throw ArgumentError("forget set is empty");
  double total = 0.0;
  for (NodeId v : f.node_ids) {
    if (v < 0 || static_cast<size_t>(v) >= pre.size())
      throw ArgumentError("forget node " + std::to_string(v) + " outside attribution domain");
    total += std::fabs(pre[v] - post[v]);
  }
  return total / static_cast<double>(f.node_ids.size());
}

int64_t ged_delta(const EdgeSet& proxy_pre, const EdgeSet& proxy_post) {
  return static_cast<int64_t>(edge_symmetric_difference(proxy_pre, proxy_post));
}

int64_t grs(const RuleSet& rules_pre, const RuleSet& rules_post) {
  return static_cast<int64_t>(rules_pre.rules.size()) -
         static_cast<int64_t>(rules_post.rules.size());
}

double mi_auc(const std::vector<double>& member_losses, const std::vector<double>& nonmember_losses) {
  if (member_losses.empty() || nonmember_losses.empty())
    throw ArgumentError("mi_auc requires nonempty member and nonmember pools");
  // score = -loss, so a member outranks a nonmember exactly when its loss is
  // strictly smaller. Count (greater, tied) pairs with integers so the result
  // equals the O(n^2) pairwise statistic exactly.
  std::vector<double> m = member_losses, w = nonmember_losses;
  std::sort(m.begin(), m.end());
  std::sort(w.begin(), w.end());
  uint64_t greater = 0, tied = 0;
  size_t lo = 0, hi = 0;  // members strictly below / at the current value
  for (size_t j = 0; j < w.size();) {
    const double v = w[j];
    size_t group = 1;
    while (j + group < w.size() && w[j + group] == v) ++group;
    while (lo < m.size() && m[lo] < v) ++lo;
    if (hi < lo) hi = lo;
    while (hi < m.size() && m[hi] == v) ++hi;
    greater += static_cast<uint64_t>(lo) * group;
    tied += static_cast<uint64_t>(hi - lo) * group;
    j += group;
  }
  const double pairs = static_cast<double>(m.size()) * static_cast<double>(w.size());
  return (2.0 * static_cast<double>(greater) + static_cast<double>(tied)) / (2.0 * pairs);
}

MetricVector compute_all(const Snapshot& pre, const Snapshot& post, const ForgetSet& f,
                         const Graph& graph_post) {
  if (pre.digest != post.digest)
    throw IntegrityError("snapshot digests differ: " + pre.digest + " vs " + post.digest);

  MetricVector m;
  std::vector<NodeId> all_ids(pre.attribution.size());
  for (size_t v = 0; v < all_ids.size(); ++v) all_ids[v] = static_cast<NodeId>(v);
  m.ra_pre_pct = residual_attribution(pre.attribution, f, all_ids, &m.ra_pre_degenerate);
  m.ra_post_pct =
      residual_attribution(post.attribution, f, graph_post.present_nodes(), &m.ra_post_degenerate);
  m.hs = heatmap_shift(pre.attribution, post.attribution);
  m.esd = esd(pre.attribution, post.attribution, f);
  m.ged_delta = ged_delta(pre.proxy, post.proxy);
  m.grs = grs(pre.rules, post.rules);
  m.mi_auc_pre = mi_auc(pre.member_losses, pre.nonmember_losses);
  m.mi_auc_post = mi_auc(post.member_losses, post.nonmember_losses);
  return m;
}

}  // namespace ulv
