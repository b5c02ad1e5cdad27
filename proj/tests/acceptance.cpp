// Acceptance suite: one line per criterion, nonzero exit when any fails.
// Run from anywhere; criteria 6 and 7 extend to a real planetoid dataset
// when ULV_CORA_DIR points at its raw files.
#include <unistd.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "oracles.hpp"
#include "ulv/errors.hpp"
#include "ulv/explain.hpp"
#include "ulv/graph.hpp"
#include "ulv/metrics.hpp"
#include "ulv/model.hpp"
#include "ulv/rng.hpp"
#include "ulv/runner.hpp"
#include "ulv/unlearn.hpp"

using namespace ulv;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
  int id;
  std::string title;
  bool pass = true;
  std::string note;

  void fail(const std::string& why) {
    pass = false;
    if (!note.empty()) note += "; ";
    note += why;
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

std::set<std::pair<NodeId, NodeId>> as_set(const EdgeSet& es) {
  std::set<std::pair<NodeId, NodeId>> out;
  for (const Edge& e : es) out.emplace(e.u, e.v);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

// ---- shared 200-node fixture ------------------------------------------------

struct FixtureCell {
  ModelParams pre_params;
  Snapshot pre;
  ForgetSet f;
  MetricVector noop;     // default single ascent step
  MetricVector noop0;    // ascent_steps=0
  MetricVector retrain_m;
  Snapshot retrain_post;
  MetricVector finetune_m;
  Snapshot finetune_post;
};

struct Fixture {
  Graph g;
  std::vector<NodeId> heldout;
  std::map<std::pair<std::string, uint64_t>, FixtureCell> cells;
};

ModelConfig fixture_config(Backbone bb, uint64_t seed) {
  ModelConfig cfg;
  cfg.backbone = bb;
  cfg.hidden = 16;
  cfg.epochs = 100;
  cfg.seed = seed;
  return cfg;
}

Fixture build_fixture() {
  Fixture fx;
  fx.g = generate_sbm({100, 100}, 0.9, 0.05, 16, 1);
  fx.heldout = fx.g.nodes_with_mask(Mask::Test);
  StrategyRegistry& reg = StrategyRegistry::instance();
  StrategyArgs none;
  StrategyArgs zero_steps = StrategyArgs::parse({"ascent_steps=0"});

  for (const std::string& bb : {std::string("gcn"), std::string("gat")}) {
    Backbone backbone = backbone_from_string(bb);
    for (uint64_t seed : {1001u, 1002u, 1003u}) {
      ModelConfig cfg = fixture_config(backbone, seed);
      FixtureCell cell;
      cell.f = sample_forget_set(fx.g, 0.05, seed);
      cell.pre_params = train(fx.g, cfg);
      cell.pre = take_snapshot(cell.pre_params, fx.g, cfg, cell.f, 2, fx.heldout);

      auto score = [&](const char* name, const StrategyArgs& args, Snapshot* keep_post) {
        UnlearningOutcome out = reg.run(name, fx.g, cell.f, cfg, cell.pre_params, args);
        Snapshot post = take_snapshot(out.params_post, out.graph_post, cfg, cell.f, 2, fx.heldout);
        MetricVector m = compute_all(cell.pre, post, cell.f, out.graph_post);
        if (keep_post) *keep_post = std::move(post);
        return m;
      };
      cell.noop = score("noop", none, nullptr);
      cell.noop0 = score("noop", zero_steps, nullptr);
      cell.retrain_m = score("retrain", none, &cell.retrain_post);
      cell.finetune_m = score("local-finetune", none, &cell.finetune_post);
      fx.cells[{bb, seed}] = std::move(cell);
    }
  }
  return fx;
}

// ---- criteria ---------------------------------------------------------------

Criterion check_gradients() {
  Criterion c{1, "gradient correctness"};
  const auto start = Clock::now();
  const double h = 1e-3;
  double worst_any = 0.0;
  for (Backbone bb : {Backbone::GCN, Backbone::GAT}) {
    // fixtures chosen so no relu pre-activation falls inside the fd window
    for (uint64_t seed : {17u, 20u, 21u}) {
      Graph g = generate_sbm({5, 5}, 0.5, 0.2, 4, seed);
      ModelConfig cfg;
      cfg.backbone = bb;
      cfg.hidden = 6;
      cfg.seed = seed + 5;
      ModelParams p = init_params(g, cfg);
      std::vector<NodeId> batch = g.nodes_with_mask(Mask::Train);

      Gradients an = loss_and_gradients(p, g, cfg, batch, Wrt::Parameters);
      ModelParams probe = p;
      auto loss = [&] { return loss_and_gradients(probe, g, cfg, batch, Wrt::Parameters).loss; };
      std::vector<double> fd = oracle::fd_gradient(oracle::param_slots(probe), loss, h);

      ModelParams an_view = p;
      an_view.w1 = an.w1;
      an_view.w2 = an.w2;
      an_view.b1 = an.b1;
      an_view.b2 = an.b2;
      an_view.a_l1 = an.a_l1;
      an_view.a_r1 = an.a_r1;
      an_view.a_l2 = an.a_l2;
      an_view.a_r2 = an.a_r2;
      std::vector<double*> slots = oracle::param_slots(an_view);
      for (size_t i = 0; i < fd.size(); ++i)
        worst_any = std::max(worst_any, oracle::rel_err(*slots[i], fd[i]));

      Gradients anx = loss_and_gradients(p, g, cfg, batch, Wrt::Inputs);
      Graph gx = g;
      auto loss_x = [&] { return loss_and_gradients(p, gx, cfg, batch, Wrt::Inputs).loss; };
      std::vector<double*> xslots;
      for (double& v : gx.features.a) xslots.push_back(&v);
      std::vector<double> fdx = oracle::fd_gradient(xslots, loss_x, h);
      for (size_t i = 0; i < fdx.size(); ++i)
        worst_any = std::max(worst_any, oracle::rel_err(anx.x.a[i], fdx[i]));
    }
  }
  double elapsed = seconds_since(start);
  if (worst_any > 1e-3) c.fail("max relative error " + fmt(worst_any) + " > 1e-3");
  if (elapsed >= 10.0) c.fail("took " + fmt(elapsed) + " s (budget 10 s)");
  if (c.pass) c.note = "max rel err " + fmt(worst_any) + ", " + fmt(elapsed) + " s";
  return c;
}

Criterion check_auc_oracle() {
  Criterion c{2, "auc oracle equivalence"};
  const auto start = Clock::now();
  Rng rng(0xACE);
  int mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    size_t m = 1 + rng.below(100);
    size_t w = 1 + rng.below(100);
    std::vector<double> mem(m), non(w);
    for (double& x : mem) x = static_cast<double>(rng.below(10)) / 4.0;
    for (double& x : non) x = static_cast<double>(rng.below(10)) / 4.0;
    if (mi_auc(mem, non) != oracle::auc_pairwise(mem, non)) ++mismatches;
  }
  double elapsed = seconds_since(start);
  if (mismatches > 0) c.fail(std::to_string(mismatches) + " of 200 pools disagree with the oracle");
  if (elapsed >= 5.0) c.fail("took " + fmt(elapsed) + " s (budget 5 s)");
  if (c.pass) c.note = "200 pools exact, " + fmt(elapsed) + " s";
  return c;
}

Criterion check_metric_algebra() {
  Criterion c{3, "metric algebra"};
  Rng rng(0xA15E);
  int bad = 0;

  for (int trial = 0; trial < 1000; ++trial) {  // HS and ESD axioms
    size_t n = 1 + rng.below(30);
    AttributionMap a(n), b(n);
    for (size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform(-2.0, 2.0);
      b[i] = rng.bernoulli(0.1) ? a[i] : rng.uniform(-2.0, 2.0);
    }
    ForgetSet f;
    f.node_ids = {static_cast<NodeId>(rng.below(n))};
    double hs_ab = heatmap_shift(a, b);
    bool ok = hs_ab >= 0.0 && heatmap_shift(b, a) == hs_ab && heatmap_shift(a, a) == 0.0 &&
              ((a == b) == (hs_ab == 0.0));
    AttributionMap a3 = a, b3 = b;
    for (size_t i = 0; i < n; ++i) {
      a3[i] *= 3.0;
      b3[i] *= 3.0;
    }
    ok = ok && std::abs(heatmap_shift(a3, b3) - 3.0 * hs_ab) <= 1e-12 * (1.0 + 3.0 * hs_ab);
    double esd_ab = esd(a, b, f);
    ok = ok && esd_ab >= 0.0 && esd(b, a, f) == esd_ab && esd(a, a, f) == 0.0;
    if (!ok) ++bad;
  }

  for (int trial = 0; trial < 1000; ++trial) {  // symmetric-difference axioms
    auto draw = [&] {
      std::vector<Edge> pairs;
      size_t m = rng.below(25);
      for (size_t i = 0; i < m; ++i) {
        NodeId u = static_cast<NodeId>(rng.below(10));
        NodeId v = static_cast<NodeId>(rng.below(10));
        if (u != v) pairs.push_back(make_edge(u, v));
      }
      return EdgeSet::from_pairs(std::move(pairs));
    };
    EdgeSet x = draw(), y = draw(), z = draw();
    int64_t xy = ged_delta(x, y);
    bool ok = xy >= 0 && ged_delta(y, x) == xy && ged_delta(x, x) == 0 &&
              ((x == y) == (xy == 0)) && ged_delta(x, z) <= xy + ged_delta(y, z) &&
              xy == static_cast<int64_t>(oracle::sym_diff_count(as_set(x), as_set(y)));
    if (!ok) ++bad;
  }

  for (int trial = 0; trial < 1000; ++trial) {  // uniform-attribution share
    size_t n = 2 + rng.below(50);
    AttributionMap att(n, rng.uniform(0.5, 4.0));
    size_t fcount = 1 + rng.below(n - 1);
    std::vector<NodeId> ids(n);
    for (size_t i = 0; i < n; ++i) ids[i] = static_cast<NodeId>(i);
    for (size_t i = 0; i < fcount; ++i) std::swap(ids[i], ids[i + rng.below(n - i)]);
    ForgetSet f;
    f.node_ids.assign(ids.begin(), ids.begin() + fcount);
    std::sort(f.node_ids.begin(), f.node_ids.end());
    std::vector<NodeId> all(n);
    for (size_t i = 0; i < n; ++i) all[i] = static_cast<NodeId>(i);
    double want = 100.0 * static_cast<double>(fcount) / static_cast<double>(n);
    double got = residual_attribution(att, f, all);
    if (std::abs(got - want) > 1e-9 * (1.0 + want)) ++bad;
  }

  for (int trial = 0; trial < 1000; ++trial) {  // AUC complement and monotone maps
    size_t m = 1 + rng.below(40);
    size_t w = 1 + rng.below(40);
    std::vector<double> mem(m), non(w);
    for (double& x : mem) x = static_cast<double>(rng.below(12)) / 8.0;
    for (double& x : non) x = static_cast<double>(rng.below(12)) / 8.0;
    double auc = mi_auc(mem, non);
    bool ok = std::abs(auc + mi_auc(non, mem) - 1.0) <= 1e-12;
    auto warp = [](std::vector<double> v) {
      for (double& x : v) x = 2.0 * x * x * x + 5.0 * x;  // strictly increasing on [0, inf)
      return v;
    };
    ok = ok && mi_auc(warp(mem), warp(non)) == auc;
    if (!ok) ++bad;
  }

  if (bad > 0) c.fail(std::to_string(bad) + " random cases violated a property");
  if (c.pass) c.note = "4000 random cases";
  return c;
}

Criterion check_null_case(const Fixture& fx) {
  Criterion c{4, "null-case exactness"};
  for (const auto& [key, cell] : fx.cells) {
    const MetricVector& m = cell.noop0;
    if (!(m.hs == 0.0 && m.esd == 0.0 && m.ged_delta == 0 && m.grs == 0 &&
          m.ra_pre_pct == m.ra_post_pct && m.mi_auc_pre == m.mi_auc_post))
      c.fail(key.first + "/seed " + std::to_string(key.second) + " is not exactly null");
  }
  if (c.pass) c.note = "exact zeros across 2 backbones x 3 seeds";
  return c;
}

Criterion check_deletion(const Fixture& fx, double fixture_build_sec) {
  Criterion c{5, "deletion exactness"};
  for (const auto& [key, cell] : fx.cells) {
    const std::string tag = key.first + "/seed " + std::to_string(key.second);
    for (const auto* pair : {&cell.retrain_m, &cell.finetune_m}) {
      if (pair->ra_post_pct != 0.0) c.fail(tag + " ra_post " + fmt(pair->ra_post_pct) + " != 0");
    }
    int64_t brute_rt =
        static_cast<int64_t>(oracle::sym_diff_count(as_set(cell.pre.proxy), as_set(cell.retrain_post.proxy)));
    int64_t brute_ft =
        static_cast<int64_t>(oracle::sym_diff_count(as_set(cell.pre.proxy), as_set(cell.finetune_post.proxy)));
    if (cell.retrain_m.ged_delta != brute_rt) c.fail(tag + " retrain ged mismatch");
    if (cell.finetune_m.ged_delta != brute_ft) c.fail(tag + " finetune ged mismatch");
  }
  if (fixture_build_sec >= 30.0)
    c.fail("fixture grid took " + fmt(fixture_build_sec) + " s (budget 30 s)");
  if (c.pass) c.note = "ra_post = 0.00 and ged matches brute force; grid " + fmt(fixture_build_sec) + " s";
  return c;
}

void check_ordering_rows(Criterion& c, const std::string& tag, int64_t ged_rt, int64_t ged_noop,
                         double hs_rt, double hs_noop, double ra_pre_noop, double ra_post_noop) {
  if (!(ged_rt > 0)) c.fail(tag + " ged(retrain) not > 0");
  if (ged_noop != 0) c.fail(tag + " ged(noop) not 0");
  if (!(hs_rt > hs_noop)) c.fail(tag + " hs(retrain) <= hs(noop)");
  if (std::abs(ra_post_noop - ra_pre_noop) > 1.5)
    c.fail(tag + " |ra_post - ra_pre|(noop) = " + fmt(std::abs(ra_post_noop - ra_pre_noop)) + " > 1.5");
}

Criterion check_spectrum(const Fixture& fx, const std::vector<nlohmann::json>& cora_records) {
  Criterion c{6, "unlearning spectrum ordering"};
  for (const auto& [key, cell] : fx.cells) {
    check_ordering_rows(c, key.first + "/seed " + std::to_string(key.second),
                        cell.retrain_m.ged_delta, cell.noop.ged_delta, cell.retrain_m.hs,
                        cell.noop.hs, cell.noop.ra_pre_pct, cell.noop.ra_post_pct);
  }
  if (!cora_records.empty()) {
    std::map<std::pair<std::string, uint64_t>, const nlohmann::json*> rt, np;
    for (const nlohmann::json& j : cora_records) {
      if (j["status"] != "ok") continue;
      auto key = std::make_pair(j["backbone"].get<std::string>(), j["seed"].get<uint64_t>());
      if (j["method"] == "retrain") rt[key] = &j;
      if (j["method"] == "noop") np[key] = &j;
    }
    for (const auto& [key, r] : rt) {
      auto it = np.find(key);
      if (it == np.end()) continue;
      const nlohmann::json& a = (*r)["metrics"];
      const nlohmann::json& b = (*it->second)["metrics"];
      check_ordering_rows(c, "cora " + key.first + "/seed " + std::to_string(key.second),
                          a["ged_delta"].get<int64_t>(), b["ged_delta"].get<int64_t>(),
                          a["hs"].get<double>(), b["hs"].get<double>(),
                          b["ra_pre_pct"].get<double>(), b["ra_post_pct"].get<double>());
    }
  }
  if (c.pass) {
    c.note = "holds for all seeds and backbones";
    if (!cora_records.empty()) c.note += " (cora included)";
  }
  return c;
}

Criterion check_cora(const char* cora_dir, std::vector<nlohmann::json>* records_out) {
  Criterion c{7, "full-dataset desk run"};
  if (cora_dir == nullptr) {
    c.note = "skipped: set ULV_CORA_DIR to a planetoid raw directory to enable";
    return c;
  }
  const auto start = Clock::now();
  fs::path out = fs::temp_directory_path() / ("ulv_accept_cora_" + std::to_string(::getpid()));
  fs::remove_all(out);
  ExperimentPlan plan;
  plan.dataset = DatasetSpec::parse(cora_dir, "planetoid-raw");
  plan.backbones = {"gcn", "gat"};
  plan.methods = {"retrain", "local-finetune", "noop"};
  plan.out_dir = out;
  VerificationReport report = run_plan(plan);
  double elapsed = seconds_since(start);

  if (exit_status(report) != 0) c.fail("some cells failed");
  if (elapsed >= 1800.0) c.fail("grid took " + fmt(elapsed) + " s (budget 1800 s)");
  for (const CellResult& cell : report.cells) {
    if (cell.failed) continue;
    const std::string tag = cell.backbone + "/" + cell.method + "/" + std::to_string(cell.seed);
    if (cell.metrics.ra_pre_pct < 3.0 || cell.metrics.ra_pre_pct > 7.0)
      c.fail(tag + " ra_pre " + fmt(cell.metrics.ra_pre_pct) + " outside [3, 7]");
    for (double auc : {cell.metrics.mi_auc_pre, cell.metrics.mi_auc_post})
      if (auc < 0.45 || auc > 0.60) c.fail(tag + " mi_auc " + fmt(auc) + " outside [0.45, 0.60]");
  }

  std::ifstream is(out / "records.jsonl");
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) records_out->push_back(nlohmann::json::parse(line));
  fs::remove_all(out);
  if (c.pass) c.note = "18 cells in " + fmt(elapsed) + " s, bands hold";
  return c;
}

Criterion check_determinism() {
  Criterion c{8, "report determinism"};
  fs::path root = fs::temp_directory_path() / ("ulv_accept_det_" + std::to_string(::getpid()));
  fs::remove_all(root);
  auto make_plan = [&](const char* sub) {
    ExperimentPlan plan;
    plan.dataset = DatasetSpec::parse("sbm:blocks=12+12,pin=0.7,pout=0.1,d=6,seed=3", "sbm");
    plan.backbones = {"gcn", "gat"};
    plan.methods = {"retrain", "local-finetune", "noop"};
    plan.out_dir = root / sub;
    plan.forget_fraction = 0.1;
    plan.base_config.hidden = 8;
    plan.base_config.epochs = 15;
    return plan;
  };
  ExperimentPlan p1 = make_plan("a");
  run_plan(p1);
  ExperimentPlan p2 = make_plan("b");
  run_plan(p2);
  ExperimentPlan p3 = make_plan("c");
  p3.backbones = {"gat", "gcn", "gat"};
  p3.methods = {"noop", "retrain", "local-finetune"};
  p3.seeds = {1003, 1002, 1001};
  run_plan(p3);

  for (const char* name : {"records.jsonl", "aggregates.jsonl", "report.txt", "plan.json"}) {
    std::string a = slurp(root / "a" / name);
    if (a.empty()) c.fail(std::string(name) + " is empty");
    if (a != slurp(root / "b" / name)) c.fail(std::string(name) + " differs between reruns");
    if (a != slurp(root / "c" / name)) c.fail(std::string(name) + " differs under shuffled plan lists");
  }
  fs::remove_all(root);
  if (c.pass) c.note = "rerun and shuffled grids byte-identical";
  return c;
}

Criterion check_surrogate(const Fixture& fx) {
  Criterion c{9, "surrogate bounds"};
  Rng rng(0x5EED);
  for (int trial = 0; trial < 50; ++trial) {
    Graph g = generate_sbm({4 + rng.below(8), 4 + rng.below(8)}, rng.uniform(0.2, 0.9),
                           rng.uniform(0.0, 0.3), 3 + rng.below(6), rng.next_u64());
    ModelConfig cfg;
    cfg.backbone = trial % 2 ? Backbone::GAT : Backbone::GCN;
    cfg.hidden = 4;
    cfg.epochs = 0;
    cfg.seed = rng.next_u64();
    ModelParams p = train(g, cfg);
    uint64_t tree_seed = rng.next_u64();
    RuleSet rs = fit_surrogate(p, g, cfg, 3, tree_seed);
    if (rs.rules.size() < 1 || rs.rules.size() > 8)
      c.fail("trial " + std::to_string(trial) + " returned " + std::to_string(rs.rules.size()) + " rules");
    if (!(rs == fit_surrogate(p, g, cfg, 3, tree_seed)))
      c.fail("trial " + std::to_string(trial) + " is not deterministic");
  }

  // Root split on the separable fixture: one shared root predicate that
  // divides the two blocks.
  const FixtureCell& cell = fx.cells.at({"gcn", 1001});
  ModelConfig cfg = fixture_config(Backbone::GCN, 1001);
  RuleSet rs = fit_surrogate(cell.pre_params, fx.g, cfg, 3, 0);
  if (rs.rules.size() < 2 || rs.rules[0].predicates.empty()) {
    c.fail("separable fixture did not produce a split");
  } else {
    size_t root_feature = rs.rules[0].predicates[0].feature;
    double root_threshold = rs.rules[0].predicates[0].threshold;
    for (const Rule& r : rs.rules)
      if (r.predicates.empty() || r.predicates[0].feature != root_feature ||
          r.predicates[0].threshold != root_threshold)
        c.fail("rules do not share a root predicate");
    size_t agree = 0;
    for (NodeId v = 0; v < static_cast<NodeId>(fx.g.n); ++v) {
      bool side = fx.g.features(v, root_feature) > root_threshold;
      agree += (side == (fx.g.labels[v] == 1)) ? 1 : 0;
    }
    size_t majority = std::max(agree, fx.g.n - agree);
    if (majority < fx.g.n * 9 / 10)
      c.fail("root split separates only " + std::to_string(majority) + " of " +
             std::to_string(fx.g.n) + " nodes");
  }
  if (c.pass) c.note = "1-8 rules, deterministic, root split separates blocks";
  return c;
}

}  // namespace

int main() {
  std::vector<Criterion> results;
  try {
    results.push_back(check_gradients());
    results.push_back(check_auc_oracle());
    results.push_back(check_metric_algebra());

    const auto fixture_start = Clock::now();
    Fixture fx = build_fixture();
    double fixture_sec = seconds_since(fixture_start);

    results.push_back(check_null_case(fx));
    results.push_back(check_deletion(fx, fixture_sec));

    std::vector<nlohmann::json> cora_records;
    Criterion cora = check_cora(std::getenv("ULV_CORA_DIR"), &cora_records);
    results.push_back(check_spectrum(fx, cora_records));
    results.push_back(cora);
    results.push_back(check_determinism());
    results.push_back(check_surrogate(fx));
  } catch (const std::exception& e) {
    std::cerr << "acceptance suite aborted: " << e.what() << '\n';
    return 1;
  }

  std::sort(results.begin(), results.end(),
            [](const Criterion& a, const Criterion& b) { return a.id < b.id; });
  bool all_pass = true;
  for (const Criterion& c : results) {
    all_pass = all_pass && c.pass;
    std::cout << "criterion " << c.id << ": " << (c.pass ? "PASS" : "FAIL") << "  " << c.title;
    if (!c.note.empty()) std::cout << " (" << c.note << ")";
    std::cout << '\n';
  }
  return all_pass ? 0 : 1;
}
