#include "ulv/unlearn.hpp"

#include <chrono>
#include <queue>
#include <sstream>

#include "ulv/errors.hpp"

namespace ulv {

StrategyArgs StrategyArgs::parse(const std::vector<std::string>& pairs) {
  StrategyArgs args;
  for (const std::string& p : pairs) {
    size_t eq = p.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ArgumentError("method-arg '" + p + "' is not of the form key=value");
    args.kv.emplace_back(p.substr(0, eq), p.substr(eq + 1));
  }
  return args;
}

int64_t StrategyArgs::get_int(const std::string& key, int64_t fallback) const {
  int64_t out = fallback;
  for (const auto& [k, v] : kv) {
    if (k != key) continue;
    try {
      size_t used = 0;
      out = std::stoll(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
    } catch (const std::exception&) {
      throw StrategyError("method-arg " + key + "='" + v + "' is not an integer");
    }
  }
  return out;
}

namespace {

// Train-mask nodes of `post` within `radius` hops of f in the original graph.
std::vector<NodeId> local_region(const Graph& original, const Graph& post, const ForgetSet& f,
                                 int radius) {
  auto adj = original.adjacency();
  std::vector<int> dist(original.n, -1);
  std::queue<NodeId> q;
  for (NodeId v : f.node_ids) {
    dist[v] = 0;
    q.push(v);
  }
  while (!q.empty()) {
    NodeId u = q.front();
    q.pop();
    if (dist[u] == radius) continue;
    for (NodeId w : adj[u]) {
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        q.push(w);
      }
    }
  }
  std::vector<NodeId> region;
  for (NodeId v : post.nodes_with_mask(Mask::Train))
    if (dist[v] >= 0) region.push_back(v);
  return region;
}

}  // namespace

UnlearningOutcome retrain(const Graph& g, const ForgetSet& f, const ModelConfig& config,
                          const ModelParams& pre_params, const StrategyArgs& args) {
  (void)pre_params;
  (void)args;
  UnlearningOutcome out;
  out.graph_post = remove_nodes(g, f);
  if (out.graph_post.nodes_with_mask(Mask::Train).empty())
    throw StrategyError("deletion empties the train mask");
  // Fresh init means an independent draw, not a replay of the pre model's
  // stream; still a pure function of config.seed.
  ModelConfig fresh = config;
  fresh.seed = derive_u64(config.seed, "retrain");
  out.params_post = train(out.graph_post, fresh);
  out.metadata.emplace_back("epochs", std::to_string(config.epochs));
  return out;
}

UnlearningOutcome local_finetune(const Graph& g, const ForgetSet& f, const ModelConfig& config,
                                 const ModelParams& pre_params, const StrategyArgs& args) {
  const int epochs = static_cast<int>(args.get_int("finetune_epochs", 10));
  const int radius = static_cast<int>(args.get_int("radius", 2));
  if (epochs < 0) throw StrategyError("finetune_epochs must be >= 0");
  if (radius < 0) throw StrategyError("radius must be >= 0");

  UnlearningOutcome out;
  out.graph_post = remove_nodes(g, f);
  std::vector<NodeId> region = local_region(g, out.graph_post, f, radius);
  out.metadata.emplace_back("finetune_epochs", std::to_string(epochs));
  out.metadata.emplace_back("radius", std::to_string(radius));
  out.metadata.emplace_back("region_size", std::to_string(region.size()));
  if (region.empty()) {
    // nothing labeled survives near f: fall back to zero steps, flagged
    out.params_post = pre_params;
    out.metadata.emplace_back("degenerate_region", "true");
    return out;
  }
  // Reduced step keeps the edit local in function space; full-rate Adam with
  // reset moments drifts further from pre_params than a fresh retrain does.
  ModelConfig tuned = config;
  tuned.lr = config.lr / 10.0;
  out.params_post = finetune(pre_params, out.graph_post, tuned, region, epochs);
  return out;
}

UnlearningOutcome noop_approx(const Graph& g, const ForgetSet& f, const ModelConfig& config,
                              const ModelParams& pre_params, const StrategyArgs& args) {
  const int steps = static_cast<int>(args.get_int("ascent_steps", 1));
  if (steps < 0) throw StrategyError("ascent_steps must be >= 0");

  UnlearningOutcome out;
  out.graph_post = g;
  out.params_post = pre_params;
  out.metadata.emplace_back("ascent_steps", std::to_string(steps));
  const double step_size = config.lr / 10.0;
  for (int s = 0; s < steps; ++s) {
    Gradients grads =
        loss_and_gradients(out.params_post, g, config, f.node_ids, Wrt::Parameters);
    auto ascend = [&](std::vector<double>& p, const std::vector<double>& gr) {
      for (size_t i = 0; i < p.size(); ++i) p[i] += step_size * gr[i];
    };
    ascend(out.params_post.w1.a, grads.w1.a);
    ascend(out.params_post.b1, grads.b1);
    ascend(out.params_post.w2.a, grads.w2.a);
    ascend(out.params_post.b2, grads.b2);
    ascend(out.params_post.a_l1, grads.a_l1);
    ascend(out.params_post.a_r1, grads.a_r1);
    ascend(out.params_post.a_l2, grads.a_l2);
    ascend(out.params_post.a_r2, grads.a_r2);
    if (!out.params_post.finite())
      throw NumericError("ascent step " + std::to_string(s + 1) + " produced non-finite params");
  }
  return out;
}

StrategyRegistry& StrategyRegistry::instance() {
  static StrategyRegistry reg = [] {
    StrategyRegistry r;
    r.register_strategy("retrain", retrain);
    r.register_strategy("local-finetune", local_finetune);
    r.register_strategy("noop", noop_approx);
    return r;
  }();
  return reg;
}

void StrategyRegistry::register_strategy(const std::string& name, StrategyFn fn) {
  strategies_[name] = std::move(fn);
}

std::vector<std::string> StrategyRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, fn] : strategies_) out.push_back(name);
  return out;
}

UnlearningOutcome StrategyRegistry::run(const std::string& name, const Graph& g, const ForgetSet& f,
                                        const ModelConfig& config, const ModelParams& pre_params,
                                        const StrategyArgs& args) const {
  auto it = strategies_.find(name);
  if (it == strategies_.end()) {
    std::ostringstream os;
    os << "unknown strategy '" << name << "'; available:";
    for (const auto& [n, fn] : strategies_) os << ' ' << n;
    throw RegistryError(os.str());
  }
  const auto start = std::chrono::steady_clock::now();
  UnlearningOutcome out = it->second(g, f, config, pre_params, args);
  out.wall_time_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.strategy_name = name;
  if (!out.params_post.finite()) throw NumericError("strategy '" + name + "' returned non-finite params");
  return out;
}

}  // namespace ulv
