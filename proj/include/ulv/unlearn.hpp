#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ulv/graph.hpp"
#include "ulv/model.hpp"

namespace ulv {

struct UnlearningOutcome {
  ModelParams params_post;
  Graph graph_post;
  std::string strategy_name;
  double wall_time_sec = 0.0;  // filled by the registry dispatcher
  std::vector<std::pair<std::string, std::string>> metadata;  // ordered key-value notes
};

/// Hyperparameters from --method-arg key=value pairs. Strategies read the
/// keys they know; unrecognized keys are recorded in the report untouched.
struct StrategyArgs {
  std::vector<std::pair<std::string, std::string>> kv;

  static StrategyArgs parse(const std::vector<std::string>& pairs);  // "key=value" items
  int64_t get_int(const std::string& key, int64_t fallback) const;   // last occurrence wins
};

using StrategyFn =
    std::function<UnlearningOutcome(const Graph& g, const ForgetSet& f, const ModelConfig& config,
                                    const ModelParams& pre_params, const StrategyArgs& args)>;

/// Full retraining on the deletion graph from a fresh seeded init.
UnlearningOutcome retrain(const Graph& g, const ForgetSet& f, const ModelConfig& config,
                          const ModelParams& pre_params, const StrategyArgs& args);

/// Adam fine-tuning of the pre model on train nodes near the forget set
/// (keys: finetune_epochs, radius).
UnlearningOutcome local_finetune(const Graph& g, const ForgetSet& f, const ModelConfig& config,
                                 const ModelParams& pre_params, const StrategyArgs& args);

/// Graph untouched; a few gradient-ascent steps on the forget loss at lr/10
/// (key: ascent_steps; 0 gives the pure no-op).
UnlearningOutcome noop_approx(const Graph& g, const ForgetSet& f, const ModelConfig& config,
                              const ModelParams& pre_params, const StrategyArgs& args);

class StrategyRegistry {
 public:
  /// Global registry preloaded with retrain, local-finetune, noop.
  static StrategyRegistry& instance();

  void register_strategy(const std::string& name, StrategyFn fn);
  bool has(const std::string& name) const { return strategies_.count(name) > 0; }
  std::vector<std::string> names() const;

  /// Dispatches, stamps strategy_name and wall_time_sec.
  UnlearningOutcome run(const std::string& name, const Graph& g, const ForgetSet& f,
                        const ModelConfig& config, const ModelParams& pre_params,
                        const StrategyArgs& args) const;

 private:
  std::map<std::string, StrategyFn> strategies_;
};

}  // namespace ulv
