#include "ulv/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ulv/dataset.hpp"
#include "ulv/errors.hpp"
#include "ulv/explain.hpp"
#include "ulv/version.hpp"

namespace ulv {

namespace {

constexpr size_t kLargeGraphGate = 30000;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  for (;;) {
    size_t p = s.find(sep, start);
    out.push_back(s.substr(start, p == std::string::npos ? std::string::npos : p - start));
    if (p == std::string::npos) break;
    start = p + 1;
  }
  return out;
}

}  // namespace

DatasetSpec DatasetSpec::parse(const std::string& dataset, const std::string& format) {
  DatasetSpec spec;
  spec.raw = dataset;
  if (dataset.rfind("sbm:", 0) == 0) {
    spec.format = "sbm";
    spec.name = dataset;
    bool have_blocks = false, have_pin = false, have_pout = false;
    for (const std::string& item : split(dataset.substr(4), ',')) {
      size_t eq = item.find('=');
      if (eq == std::string::npos)
        throw ArgumentError("sbm spec item '" + item + "' is not key=value");
      const std::string key = item.substr(0, eq);
      const std::string val = item.substr(eq + 1);
      try {
        if (key == "blocks") {
          for (const std::string& b : split(val, '+')) {
            long long size = std::stoll(b);
            if (size < 1) throw ArgumentError("block sizes must be >= 1");
            spec.blocks.push_back(static_cast<size_t>(size));
          }
          have_blocks = !spec.blocks.empty();
        } else if (key == "pin") {
          spec.p_in = std::stod(val);
          have_pin = true;
        } else if (key == "pout") {
          spec.p_out = std::stod(val);
          have_pout = true;
        } else if (key == "d") {
          spec.feature_dim = static_cast<size_t>(std::stoull(val));
        } else if (key == "seed") {
          spec.sbm_seed = std::stoull(val);
        } else {
          throw ArgumentError("unknown sbm spec key '" + key + "'");
        }
      } catch (const ArgumentError&) {
        throw;
      } catch (const std::exception&) {
        throw ArgumentError("sbm spec value '" + item + "' is malformed");
      }
    }
    if (!have_blocks || !have_pin || !have_pout)
      throw ArgumentError("sbm spec requires blocks=, pin= and pout=");
    return spec;
  }
  if (format != "edge-list" && format != "planetoid-raw")
    throw ArgumentError("unknown dataset format '" + format + "' (expected edge-list or planetoid-raw)");
  spec.format = format;
  std::filesystem::path p(dataset);
  spec.name = p.filename().empty() ? p.parent_path().filename().string() : p.filename().string();
  if (spec.name.empty()) spec.name = dataset;
  return spec;
}

Graph DatasetSpec::load() const {
  if (format == "sbm") return generate_sbm(blocks, p_in, p_out, feature_dim, sbm_seed);
  return load_dataset(raw, format);
}

void ExperimentPlan::validate() {
  std::sort(backbones.begin(), backbones.end());
  backbones.erase(std::unique(backbones.begin(), backbones.end()), backbones.end());
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

  if (backbones.empty()) throw ArgumentError("no backbones selected");
  for (const std::string& b : backbones) backbone_from_string(b);  // throws on unknown
  if (methods.empty()) throw ArgumentError("no methods selected");
  for (const std::string& m : methods)
    if (!StrategyRegistry::instance().has(m)) {
      std::ostringstream os;
      os << "unknown method '" << m << "'; available:";
      for (const std::string& n : StrategyRegistry::instance().names()) os << ' ' << n;
      throw ArgumentError(os.str());
    }
  if (seeds.empty()) throw ArgumentError("no seeds given");
  if (!(forget_fraction > 0.0 && forget_fraction < 1.0))
    throw ArgumentError("forget fraction must be in (0, 1)");
  if (k < 1) throw ArgumentError("k must be >= 1");
  if (out_dir.empty()) throw ArgumentError("output directory is required");
  if (base_config.epochs < 1) throw ArgumentError("epochs must be >= 1");
  base_config.validate();
}

std::array<double, 8> metric_values(const MetricVector& m) {
  return {m.ra_pre_pct,
          m.ra_post_pct,
          m.hs,
          m.esd,
          static_cast<double>(m.ged_delta),
          static_cast<double>(m.grs),
          m.mi_auc_pre,
          m.mi_auc_post};
}

namespace {

struct PreState {
  ModelParams params;
  Snapshot snapshot;
};

std::string cell_dir_name(const CellResult& c) {
  return c.backbone + "-" + c.method + "-seed" + std::to_string(c.seed);
}

nlohmann::ordered_json metrics_json(const MetricVector& m) {
  const auto vals = metric_values(m);
  nlohmann::ordered_json j;
  for (size_t i = 0; i < kMetricKeys.size(); ++i) {
    if (std::string_view(kMetricKeys[i]) == "ged_delta")
      j[kMetricKeys[i]] = m.ged_delta;
    else if (std::string_view(kMetricKeys[i]) == "grs")
      j[kMetricKeys[i]] = m.grs;
    else
      j[kMetricKeys[i]] = vals[i];
  }
  return j;
}

void write_records(const VerificationReport& report, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  for (const CellResult& c : report.cells) {
    nlohmann::ordered_json j;
    j["dataset"] = report.dataset_name;
    j["backbone"] = c.backbone;
    j["method"] = c.method;
    j["seed"] = c.seed;
    j["status"] = c.failed ? "failed" : "ok";
    if (c.failed) {
      j["error"] = c.error;
    } else {
      j["metrics"] = metrics_json(c.metrics);
      nlohmann::ordered_json flags;
      flags["ra_pre_degenerate"] = c.metrics.ra_pre_degenerate;
      flags["ra_post_degenerate"] = c.metrics.ra_post_degenerate;
      flags["proxy_degenerate_pre"] = c.proxy_degenerate_pre;
      flags["proxy_degenerate_post"] = c.proxy_degenerate_post;
      j["flags"] = flags;
      nlohmann::ordered_json strat;
      for (const auto& [k, v] : c.strategy_metadata) strat[k] = v;
      j["strategy"] = strat;
    }
    os << j.dump() << '\n';
  }
  if (!os) throw IoError("write failed for " + path.string());
}

void write_aggregates(const VerificationReport& report, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  for (const AggregateRow& a : report.aggregates) {
    nlohmann::ordered_json j;
    j["dataset"] = report.dataset_name;
    j["backbone"] = a.backbone;
    j["method"] = a.method;
    j["cells"] = a.cells;
    j["failed"] = a.failed;
    nlohmann::ordered_json mean, stddev;
    for (size_t i = 0; i < kMetricKeys.size(); ++i) {
      mean[kMetricKeys[i]] = a.mean[i];
      stddev[kMetricKeys[i]] = a.stddev[i];
    }
    j["mean"] = mean;
    j["std"] = stddev;
    os << j.dump() << '\n';
  }
  if (!os) throw IoError("write failed for " + path.string());
}

std::string fmt(const char* format, double a, double b) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, a, b);
  return buf;
}

void write_table(const VerificationReport& report, const ExperimentPlan& plan,
                 const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << "unlearning verification report (" << kToolName << ' ' << kToolVersion << ")\n";
  os << "dataset: " << report.dataset_name << "  nodes: " << report.nodes
     << "  forget fraction: " << plan.forget_fraction << "  k: " << plan.k << "  seeds:";
  for (uint64_t s : plan.seeds) os << ' ' << s;
  os << "\n\n";

  auto pad = [](std::string s, size_t w) {
    // column widths count display characters, not bytes
    size_t chars = 0;
    for (char ch : s)
      if ((ch & 0xC0) != 0x80) ++chars;
    if (chars < w) s.append(w - chars, ' ');
    return s;
  };

  const size_t wb = 9, wm = 16, wc = 17;
  os << pad("backbone", wb) << pad("method", wm) << pad("RA_pre (%)", wc)
     << pad("RA_post (%)", wc) << pad("HS", wc) << pad("ESD", wc) << pad("GED∆", wc)
     << pad("GRS", wc) << '\n';
  for (const AggregateRow& a : report.aggregates) {
    os << pad(a.backbone, wb) << pad(a.method, wm);
    if (a.cells == 0) {
      for (int i = 0; i < 6; ++i) os << pad("-", wc);
      os << '\n';
      continue;
    }
    os << pad(fmt("%.2f ± %.2f", a.mean[0], a.stddev[0]), wc)
       << pad(fmt("%.2f ± %.2f", a.mean[1], a.stddev[1]), wc)
       << pad(fmt("%.4f ± %.4f", a.mean[2], a.stddev[2]), wc)
       << pad(fmt("%.4f ± %.4f", a.mean[3], a.stddev[3]), wc)
       << pad(fmt("%.1f ± %.1f", a.mean[4], a.stddev[4]), wc)
       << pad(fmt("%.1f ± %.1f", a.mean[5], a.stddev[5]), wc) << '\n';
  }

  os << "\nmembership inference (ROC-AUC)\n";
  os << pad("backbone", wb) << pad("method", wm) << pad("MI_pre", wc) << pad("MI_post", wc) << '\n';
  for (const AggregateRow& a : report.aggregates) {
    os << pad(a.backbone, wb) << pad(a.method, wm);
    if (a.cells == 0) {
      os << pad("-", wc) << pad("-", wc) << '\n';
      continue;
    }
    os << pad(fmt("%.3f ± %.3f", a.mean[6], a.stddev[6]), wc)
       << pad(fmt("%.3f ± %.3f", a.mean[7], a.stddev[7]), wc) << '\n';
  }

  size_t failed = 0;
  for (const CellResult& c : report.cells) failed += c.failed ? 1 : 0;
  os << "\nfailed cells: " << failed << '\n';
  for (const CellResult& c : report.cells)
    if (c.failed)
      os << "  " << c.backbone << ' ' << c.method << " seed " << c.seed << ": " << c.error << '\n';
  if (!os) throw IoError("write failed for " + path.string());
}

void write_plan_echo(const ExperimentPlan& plan, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["dataset"] = plan.dataset.raw;
  j["format"] = plan.dataset.format;
  j["backbones"] = plan.backbones;
  j["methods"] = plan.methods;
  j["seeds"] = plan.seeds;
  j["forget_fraction"] = plan.forget_fraction;
  j["k"] = plan.k;
  nlohmann::ordered_json args = nlohmann::ordered_json::array();
  for (const auto& [k, v] : plan.method_args.kv) args.push_back(k + "=" + v);
  j["method_args"] = args;
  j["allow_large"] = plan.allow_large;
  nlohmann::ordered_json cfg;
  cfg["hidden"] = plan.base_config.hidden;
  cfg["layers"] = plan.base_config.layers;
  cfg["dropout"] = plan.base_config.dropout;
  cfg["lr"] = plan.base_config.lr;
  cfg["epochs"] = plan.base_config.epochs;
  cfg["gat_heads"] = plan.base_config.gat_heads;
  cfg["leaky_slope"] = plan.base_config.leaky_slope;
  j["model"] = cfg;
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << j.dump(2) << '\n';
  if (!os) throw IoError("write failed for " + path.string());
}

void write_timings(const VerificationReport& report, const std::filesystem::path& path) {
  // wall times live here, apart from the deterministic report files
  nlohmann::ordered_json j;
  j["total_sec"] = report.total_wall_sec;
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const CellResult& c : report.cells) {
    nlohmann::ordered_json e;
    e["backbone"] = c.backbone;
    e["method"] = c.method;
    e["seed"] = c.seed;
    e["total_sec"] = c.wall_total_sec;
    e["strategy_sec"] = c.wall_strategy_sec;
    cells.push_back(e);
  }
  j["cells"] = cells;
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << j.dump(2) << '\n';
  if (!os) throw IoError("write failed for " + path.string());
}

}  // namespace

VerificationReport run_plan(ExperimentPlan plan) {
  plan.validate();
  const auto t_start = std::chrono::steady_clock::now();

  if (plan.dataset.format == "sbm" && !plan.allow_large) {
    size_t planned = 0;
    for (size_t b : plan.dataset.blocks) planned += b;
    if (planned > kLargeGraphGate)
      throw ArgumentError("dataset would have " + std::to_string(planned) + " nodes (> " +
                          std::to_string(kLargeGraphGate) +
                          "); the dense engine needs --allow-large to proceed");
  }

  Graph g = plan.dataset.load();
  if (g.n > kLargeGraphGate) {
    if (!plan.allow_large)
      throw ArgumentError("dataset has " + std::to_string(g.n) + " nodes (> " +
                          std::to_string(kLargeGraphGate) +
                          "); the dense engine needs --allow-large to proceed");
    std::cerr << "warning: " << g.n << " nodes exceeds the desk-scale gate; expect long runtimes\n";
  }

  std::error_code ec;
  std::filesystem::create_directories(plan.out_dir, ec);
  if (ec) throw IoError("cannot create " + plan.out_dir.string() + ": " + ec.message());

  VerificationReport report;
  report.dataset_name = plan.dataset.name;
  report.nodes = g.n;

  std::map<uint64_t, ForgetSet> forget_by_seed;
  for (uint64_t seed : plan.seeds) forget_by_seed[seed] = sample_forget_set(g, plan.forget_fraction, seed);
  const std::vector<NodeId> heldout = g.nodes_with_mask(Mask::Test);

  std::map<std::pair<std::string, uint64_t>, PreState> pre_cache;

  for (const std::string& backbone : plan.backbones) {
    for (const std::string& method : plan.methods) {
      for (uint64_t seed : plan.seeds) {
        CellResult cell;
        cell.backbone = backbone;
        cell.method = method;
        cell.seed = seed;
        const auto t_cell = std::chrono::steady_clock::now();
        try {
          ModelConfig cfg = plan.base_config;
          cfg.backbone = backbone_from_string(backbone);
          cfg.seed = seed;
          const ForgetSet& f = forget_by_seed.at(seed);

          auto cache_key = std::make_pair(backbone, seed);
          auto it = pre_cache.find(cache_key);
          if (it == pre_cache.end()) {
            PreState st;
            st.params = train(g, cfg);
            st.snapshot = take_snapshot(st.params, g, cfg, f, plan.k, heldout);
            it = pre_cache.emplace(cache_key, std::move(st)).first;
          }
          const PreState& pre = it->second;

          UnlearningOutcome outcome = StrategyRegistry::instance().run(
              method, g, f, cfg, pre.params, plan.method_args);
          Snapshot post =
              take_snapshot(outcome.params_post, outcome.graph_post, cfg, f, plan.k, heldout);
          cell.metrics = compute_all(pre.snapshot, post, f, outcome.graph_post);
          cell.proxy_degenerate_pre = pre.snapshot.proxy_degenerate;
          cell.proxy_degenerate_post = post.proxy_degenerate;
          cell.strategy_metadata = outcome.metadata;
          cell.wall_strategy_sec = outcome.wall_time_sec;

          const auto cell_dir = plan.out_dir / "cells" / cell_dir_name(cell);
          export_snapshot(pre.snapshot, cell_dir / "pre");
          export_snapshot(post, cell_dir / "post");
        } catch (const Error& e) {
          cell.failed = true;
          cell.error = e.what();
        }
        cell.wall_total_sec =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_cell).count();
        report.cells.push_back(std::move(cell));
      }
    }
  }

  // aggregate over seeds per (backbone, method), successful cells only
  for (const std::string& backbone : plan.backbones) {
    for (const std::string& method : plan.methods) {
      AggregateRow row;
      row.backbone = backbone;
      row.method = method;
      std::vector<std::array<double, 8>> vals;
      for (const CellResult& c : report.cells) {
        if (c.backbone != backbone || c.method != method) continue;
        if (c.failed) {
          ++row.failed;
          continue;
        }
        vals.push_back(metric_values(c.metrics));
      }
      row.cells = vals.size();
      if (!vals.empty()) {
        for (size_t i = 0; i < 8; ++i) {
          double sum = 0.0;
          for (const auto& v : vals) sum += v[i];
          row.mean[i] = sum / static_cast<double>(vals.size());
        }
        if (vals.size() > 1) {
          for (size_t i = 0; i < 8; ++i) {
            double ss = 0.0;
            for (const auto& v : vals) ss += (v[i] - row.mean[i]) * (v[i] - row.mean[i]);
            row.stddev[i] = std::sqrt(ss / static_cast<double>(vals.size() - 1));
          }
        }
      }
      report.aggregates.push_back(std::move(row));
    }
  }

  report.total_wall_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  write_records(report, plan.out_dir / "records.jsonl");
  write_aggregates(report, plan.out_dir / "aggregates.jsonl");
  write_table(report, plan, plan.out_dir / "report.txt");
  write_plan_echo(plan, plan.out_dir / "plan.json");
  write_timings(report, plan.out_dir / "timings.json");
  return report;
}

int exit_status(const VerificationReport& report) {
  for (const CellResult& c : report.cells)
    if (c.failed) return 1;
  return 0;
}

}  // namespace ulv
