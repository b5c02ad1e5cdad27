#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ulv/graph.hpp"
#include "ulv/mat.hpp"
#include "ulv/rng.hpp"

namespace ulv {

enum class Backbone { GCN, GAT };
enum class Mode { Train, Eval };
enum class Wrt { Parameters, Inputs };

Backbone backbone_from_string(const std::string& s);
std::string to_string(Backbone b);

struct ModelConfig {
  Backbone backbone = Backbone::GCN;
  int hidden = 64;
  int layers = 2;
  double dropout = 0.5;
  double lr = 0.005;
  int epochs = 100;
  uint64_t seed = 0;
  int gat_heads = 1;
  double leaky_slope = 0.2;

  // epochs = 0 is allowed here (returns the initialization); experiment
  // plans tighten this to >= 1.
  void validate() const;
  std::string digest_string() const;
};

struct ModelParams {
  Backbone backbone = Backbone::GCN;
  uint64_t seed = 0;
  Mat w1, w2;              // d x hidden, hidden x C
  std::vector<double> b1, b2;
  // single-head attention vectors, empty for GCN
  std::vector<double> a_l1, a_r1, a_l2, a_r2;

  bool finite() const;
  bool operator==(const ModelParams&) const = default;
};

struct Gradients {
  double loss = 0.0;
  Mat w1, w2;
  std::vector<double> b1, b2, a_l1, a_r1, a_l2, a_r2;
  Mat x;  // n x d, rows of absent nodes stay zero
};

/// D^{-1/2}(A+I)D^{-1/2} over present nodes in ascending node id order.
Mat normalized_adjacency(const Graph& g);

/// Per-node class logits, n x C with absent rows zero. Train mode requires a
/// dropout stream when config.dropout > 0.
Mat forward(const ModelParams& params, const Graph& g, const ModelConfig& config, Mode mode,
            Rng* dropout_rng = nullptr);

/// Mean cross-entropy over node_set plus reverse-mode gradients. Always
/// evaluates without dropout so results are deterministic.
Gradients loss_and_gradients(const ModelParams& params, const Graph& g, const ModelConfig& config,
                             const std::vector<NodeId>& node_set, Wrt wrt);

/// Glorot-uniform initialization from config.seed. Biases start at zero.
ModelParams init_params(const Graph& g, const ModelConfig& config);

/// Full-batch Adam on the train-mask cross-entropy for config.epochs steps.
ModelParams train(const Graph& g, const ModelConfig& config);

/// Adam fine-tuning of existing params on an explicit node set.
ModelParams finetune(const ModelParams& start, const Graph& g, const ModelConfig& config,
                     const std::vector<NodeId>& node_set, int epochs);

/// Eval-mode cross-entropy per node, aligned with node_set order.
std::vector<double> per_node_losses(const ModelParams& params, const Graph& g,
                                    const ModelConfig& config, const std::vector<NodeId>& node_set);

/// Text checkpoint, layout documented in the README; round-trips exactly.
void save_params(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_params(const std::filesystem::path& path);

}  // namespace ulv
