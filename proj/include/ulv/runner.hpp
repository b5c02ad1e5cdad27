#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ulv/graph.hpp"
#include "ulv/metrics.hpp"
#include "ulv/model.hpp"
#include "ulv/unlearn.hpp"

namespace ulv {

/// Either a dataset directory plus format, or an inline synthetic spec of the
/// form sbm:blocks=100+100,pin=0.1,pout=0.01,d=16,seed=1.
struct DatasetSpec {
  std::string raw;
  std::string format;  // edge-list | planetoid-raw | sbm
  std::string name;    // basename or the sbm spec, used in reports
  std::vector<size_t> blocks;
  double p_in = 0.0, p_out = 0.0;
  size_t feature_dim = 16;
  uint64_t sbm_seed = 1;

  static DatasetSpec parse(const std::string& dataset, const std::string& format);
  Graph load() const;
};

struct ExperimentPlan {
  DatasetSpec dataset;
  std::vector<std::string> backbones;  // "gcn", "gat"
  std::vector<std::string> methods;
  std::vector<uint64_t> seeds = {1001, 1002, 1003};
  double forget_fraction = 0.05;
  int k = 2;
  std::filesystem::path out_dir;
  StrategyArgs method_args;
  bool allow_large = false;
  ModelConfig base_config;  // backbone and seed are overwritten per cell

  /// Normalizes (sorts, dedups) the grid lists and checks every invariant.
  /// Throws ArgumentError: callers map this to exit status 2.
  void validate();
};

inline constexpr std::array<const char*, 8> kMetricKeys = {
    "ra_pre_pct", "ra_post_pct", "hs", "esd", "ged_delta", "grs", "mi_auc_pre", "mi_auc_post"};

std::array<double, 8> metric_values(const MetricVector& m);

struct CellResult {
  std::string backbone;
  std::string method;
  uint64_t seed = 0;
  bool failed = false;
  std::string error;
  MetricVector metrics;
  bool proxy_degenerate_pre = false;
  bool proxy_degenerate_post = false;
  std::vector<std::pair<std::string, std::string>> strategy_metadata;
  double wall_total_sec = 0.0;
  double wall_strategy_sec = 0.0;
};

struct AggregateRow {
  std::string backbone;
  std::string method;
  size_t cells = 0;   // successful cells aggregated
  size_t failed = 0;
  std::array<double, 8> mean{};
  std::array<double, 8> stddev{};  // sample std (n-1), 0 for a single cell
};

struct VerificationReport {
  std::string dataset_name;
  size_t nodes = 0;
  std::vector<CellResult> cells;  // canonical (backbone, method, seed) order
  std::vector<AggregateRow> aggregates;
  double total_wall_sec = 0.0;
};

/// Executes the full grid, writes per-cell artifacts and the report files
/// (records.jsonl, aggregates.jsonl, report.txt, plan.json, timings.json)
/// under plan.out_dir. Cell failures are recorded, not fatal.
VerificationReport run_plan(ExperimentPlan plan);

/// 0 when every cell succeeded, 1 otherwise.
int exit_status(const VerificationReport& report);

}  // namespace ulv
