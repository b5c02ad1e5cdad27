#include "ulv/explain.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "ulv/errors.hpp"
#include "ulv/kernels.hpp"
#include "ulv/rng.hpp"
#include "ulv/version.hpp"

namespace ulv {

AttributionMap saliency(const ModelParams& params, const Graph& g, const ModelConfig& config) {
  if (params.w1.rows != g.dim)
    throw ArgumentError("params expect feature dimension " + std::to_string(params.w1.rows) +
                        ", graph has " + std::to_string(g.dim));
  if (params.w2.cols != static_cast<size_t>(g.num_classes))
    throw ArgumentError("params expect " + std::to_string(params.w2.cols) + " classes, graph has " +
                        std::to_string(g.num_classes));
  std::vector<NodeId> train_nodes = g.nodes_with_mask(Mask::Train);
  if (train_nodes.empty()) throw ArgumentError("train mask is empty");
  Gradients grads = loss_and_gradients(params, g, config, train_nodes, Wrt::Inputs);
  AttributionMap att(g.n, 0.0);
  const auto& K = kern::active();
  for (NodeId v : g.present_nodes()) att[v] = K.l1_norm(grads.x.row(v), g.dim);
  return att;
}

namespace {

struct TreeNode {
  bool leaf = true;
  size_t feature = 0;
  double threshold = 0.0;
  int32_t predicted = 0;
  int left = -1, right = -1;
};

int32_t majority_class(const std::vector<int32_t>& classes, const std::vector<size_t>& idx,
                       size_t num_classes) {
  std::vector<size_t> count(num_classes, 0);
  for (size_t i : idx) ++count[classes[i]];
  size_t best = 0;
  for (size_t c = 1; c < num_classes; ++c)
    if (count[c] > count[best]) best = c;  // ties keep the lowest class id
  return static_cast<int32_t>(best);
}

double gini_from_counts(const std::vector<size_t>& count, size_t total) {
  if (total == 0) return 0.0;
  double sum_sq = 0.0;
  for (size_t c : count) {
    double p = static_cast<double>(c) / static_cast<double>(total);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

struct Split {
  bool found = false;
  size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

Split best_split(const Mat& x, const std::vector<int32_t>& classes, const std::vector<size_t>& idx,
                 size_t num_classes) {
  const size_t n = idx.size();
  std::vector<size_t> parent_count(num_classes, 0);
  for (size_t i : idx) ++parent_count[classes[i]];
  const double parent_gini = gini_from_counts(parent_count, n);

  Split best;
  std::vector<std::pair<double, int32_t>> vals(n);
  std::vector<size_t> left_count(num_classes);
  for (size_t f = 0; f < x.cols; ++f) {
    for (size_t i = 0; i < n; ++i) vals[i] = {x(idx[i], f), classes[idx[i]]};
    std::sort(vals.begin(), vals.end());
    std::fill(left_count.begin(), left_count.end(), 0);
    std::vector<size_t> right_count = parent_count;
    for (size_t i = 0; i + 1 < n; ++i) {
      ++left_count[vals[i].second];
      --right_count[vals[i].second];
      if (vals[i].first == vals[i + 1].first) continue;
      const double thr = vals[i].first + (vals[i + 1].first - vals[i].first) / 2.0;
      const size_t nl = i + 1, nr = n - nl;
      const double gain = parent_gini -
                          (static_cast<double>(nl) / n) * gini_from_counts(left_count, nl) -
                          (static_cast<double>(nr) / n) * gini_from_counts(right_count, nr);
      // candidates are scanned in ascending (feature, threshold) order, so
      // requiring strict improvement keeps ties at the lowest feature index,
      // then the lowest threshold
      if (gain > best.gain + 1e-12) best = {true, f, thr, gain};
    }
  }
  return best;
}

void collect_rules(const std::vector<TreeNode>& nodes, int at, std::vector<Predicate>& path,
                   std::vector<Rule>& out) {
  const TreeNode& nd = nodes[at];
  if (nd.leaf) {
    out.push_back(Rule{path, nd.predicted});
    return;
  }
  path.push_back(Predicate{nd.feature, nd.threshold, false});
  collect_rules(nodes, nd.left, path, out);
  path.back().greater = true;
  collect_rules(nodes, nd.right, path, out);
  path.pop_back();
}

}  // namespace

RuleSet fit_surrogate(const ModelParams& params, const Graph& g, const ModelConfig& config,
                      int depth, uint64_t tree_seed) {
  (void)tree_seed;  // deterministic scan; accepted so the call site can record it
  if (depth < 0) throw ArgumentError("depth must be >= 0");
  std::vector<NodeId> present = g.present_nodes();
  if (present.empty()) throw ArgumentError("graph has no present nodes");

  Mat logits = forward(params, g, config, Mode::Eval);
  std::vector<int32_t> classes(present.size());
  Mat x(present.size(), g.dim);
  for (size_t i = 0; i < present.size(); ++i) {
    const double* row = logits.row(present[i]);
    size_t arg = 0;
    for (size_t j = 1; j < logits.cols; ++j)
      if (row[j] > row[arg]) arg = j;  // ties keep the lowest class id
    classes[i] = static_cast<int32_t>(arg);
    const double* feat = g.features.row(present[i]);
    std::copy(feat, feat + g.dim, x.row(i));
  }

  std::vector<TreeNode> nodes;
  struct Pending {
    int node;
    std::vector<size_t> idx;
    int depth_left;
  };
  std::vector<Pending> stack;
  nodes.push_back(TreeNode{});
  std::vector<size_t> all(present.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = i;
  stack.push_back({0, std::move(all), depth});

  const size_t num_classes = static_cast<size_t>(g.num_classes);
  while (!stack.empty()) {
    Pending p = std::move(stack.back());
    stack.pop_back();
    TreeNode& nd = nodes[p.node];
    nd.predicted = majority_class(classes, p.idx, num_classes);
    if (p.depth_left == 0 || p.idx.size() < 2) continue;
    Split s = best_split(x, classes, p.idx, num_classes);
    if (!s.found) continue;

    std::vector<size_t> left, right;
    for (size_t i : p.idx) (x(i, s.feature) <= s.threshold ? left : right).push_back(i);
    nd.leaf = false;
    nd.feature = s.feature;
    nd.threshold = s.threshold;
    nd.left = static_cast<int>(nodes.size());
    nd.right = nd.left + 1;
    const int node_id = p.node;
    nodes.push_back(TreeNode{});
    nodes.push_back(TreeNode{});
    stack.push_back({nodes[node_id].right, std::move(right), p.depth_left - 1});
    stack.push_back({nodes[node_id].left, std::move(left), p.depth_left - 1});
  }

  RuleSet rs;
  rs.depth = depth;
  std::vector<Predicate> path;
  collect_rules(nodes, 0, path, rs.rules);
  return rs;
}

Snapshot take_snapshot(const ModelParams& params, const Graph& g, const ModelConfig& config,
                       const ForgetSet& f, int k, const std::vector<NodeId>& heldout) {
  for (NodeId v : heldout)
    if (v >= 0 && static_cast<size_t>(v) < g.n && g.masks[v] == Mask::Train)
      throw ArgumentError("heldout node " + std::to_string(v) + " is in the train mask");

  Snapshot snap;
  snap.attribution = saliency(params, g, config);

  ForgetSet present_centers;
  present_centers.seed = f.seed;
  present_centers.fraction = f.fraction;
  for (NodeId v : f.node_ids)
    if (g.is_present(v)) present_centers.node_ids.push_back(v);
  if (present_centers.node_ids.empty()) {
    snap.proxy_degenerate = true;  // deletion already removed every center
  } else {
    snap.proxy = proxy_graph(g, present_centers, k);
  }

  snap.rules = fit_surrogate(params, g, config, 3, derive_u64(config.seed, "tree"));

  for (NodeId v : g.nodes_with_mask(Mask::Train)) snap.member_nodes.push_back(v);
  for (NodeId v : heldout)
    if (g.is_present(v)) snap.nonmember_nodes.push_back(v);
  std::sort(snap.nonmember_nodes.begin(), snap.nonmember_nodes.end());
  snap.member_losses = per_node_losses(params, g, config, snap.member_nodes);
  snap.nonmember_losses = per_node_losses(params, g, config, snap.nonmember_nodes);

  Mat logits = forward(params, g, config, Mode::Eval);
  snap.predictions.assign(g.n, -1);
  for (NodeId v : g.present_nodes()) {
    const double* row = logits.row(v);
    size_t arg = 0;
    for (size_t j = 1; j < logits.cols; ++j)
      if (row[j] > row[arg]) arg = j;
    snap.predictions[v] = static_cast<int32_t>(arg);
  }

  std::ostringstream bind;
  bind << config.digest_string() << "|k=" << k << "|n=" << g.n << "|d=" << g.dim
       << "|c=" << g.num_classes << "|fseed=" << f.seed << "|ffrac=" << std::setprecision(17)
       << f.fraction << "|f=";
  for (NodeId v : f.node_ids) bind << v << ',';
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(bind.str());
  snap.digest = hex.str();
  return snap;
}

bool artifacts_equal(const Snapshot& a, const Snapshot& b) {
  return a.attribution == b.attribution && a.proxy == b.proxy && a.rules == b.rules &&
         a.member_nodes == b.member_nodes && a.member_losses == b.member_losses &&
         a.nonmember_nodes == b.nonmember_nodes && a.nonmember_losses == b.nonmember_losses &&
         a.predictions == b.predictions && a.digest == b.digest &&
         a.proxy_degenerate == b.proxy_degenerate;
}

std::string format_rule(const Rule& r) {
  std::ostringstream os;
  os << std::setprecision(17);
  if (r.predicates.empty()) {
    os << "true";
  } else {
    for (size_t i = 0; i < r.predicates.size(); ++i) {
      if (i) os << " AND ";
      const Predicate& p = r.predicates[i];
      os << "x[" << p.feature << "] " << (p.greater ? ">" : "<=") << ' ' << p.threshold;
    }
  }
  os << " => class " << r.predicted;
  return os.str();
}

void export_snapshot(const Snapshot& snap, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  auto open = [&](const char* name) {
    std::ofstream os(dir / name);
    if (!os) throw IoError("cannot write " + (dir / name).string());
    os << std::setprecision(17);
    return os;
  };

  {
    auto os = open("attribution.txt");
    for (size_t v = 0; v < snap.attribution.size(); ++v) os << v << ' ' << snap.attribution[v] << '\n';
  }
  {
    auto os = open("proxy_edges.txt");
    for (const Edge& e : snap.proxy) os << e.u << ' ' << e.v << '\n';
  }
  {
    auto os = open("rules.txt");
    for (const Rule& r : snap.rules.rules) os << format_rule(r) << '\n';
  }
  {
    auto os = open("member_losses.txt");
    for (size_t i = 0; i < snap.member_nodes.size(); ++i)
      os << snap.member_nodes[i] << ' ' << snap.member_losses[i] << '\n';
  }
  {
    auto os = open("nonmember_losses.txt");
    for (size_t i = 0; i < snap.nonmember_nodes.size(); ++i)
      os << snap.nonmember_nodes[i] << ' ' << snap.nonmember_losses[i] << '\n';
  }
  {
    auto os = open("predictions.txt");
    for (size_t v = 0; v < snap.predictions.size(); ++v) os << v << ' ' << snap.predictions[v] << '\n';
  }
  {
    nlohmann::ordered_json meta;
    meta["digest"] = snap.digest;
    meta["tool"] = kToolName;
    meta["version"] = kToolVersion;
    meta["nodes"] = snap.attribution.size();
    meta["proxy_edges"] = snap.proxy.size();
    meta["rules"] = snap.rules.rules.size();
    meta["members"] = snap.member_nodes.size();
    meta["nonmembers"] = snap.nonmember_nodes.size();
    meta["proxy_degenerate"] = snap.proxy_degenerate;
    auto os = open("meta.json");
    os << meta.dump(2) << '\n';
  }
}

}  // namespace ulv
