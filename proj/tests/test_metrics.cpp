#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "oracles.hpp"
#include "ulv/errors.hpp"
#include "ulv/metrics.hpp"
#include "ulv/rng.hpp"

using namespace ulv;

namespace {

ForgetSet forget(std::vector<NodeId> ids) {
  ForgetSet f;
  f.node_ids = std::move(ids);
  std::sort(f.node_ids.begin(), f.node_ids.end());
  return f;
}

std::vector<NodeId> iota_ids(size_t n) {
  std::vector<NodeId> ids(n);
  for (size_t i = 0; i < n; ++i) ids[i] = static_cast<NodeId>(i);
  return ids;
}

std::set<std::pair<NodeId, NodeId>> as_set(const EdgeSet& es) {
  std::set<std::pair<NodeId, NodeId>> out;
  for (const Edge& e : es) out.emplace(e.u, e.v);
  return out;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("residual attribution hand values") {
  // att = {1:2, 2:3, 3:5}, f = {1}; pre-style survivors include everyone.
  AttributionMap att = {0.0, 2.0, 3.0, 5.0};
  CHECK(residual_attribution(att, forget({1}), iota_ids(4)) == doctest::Approx(20.0).epsilon(1e-12));

  // Uniform attribution: RA equals 100 * |F| / |survivors|.
  AttributionMap uni(20, 0.7);
  CHECK(residual_attribution(uni, forget({0}), iota_ids(20)) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("residual attribution flags an all-zero denominator") {
  AttributionMap att(6, 0.0);
  bool degenerate = false;
  double ra = residual_attribution(att, forget({2}), iota_ids(6), &degenerate);
  CHECK(ra == 0.0);
  CHECK(degenerate);

  degenerate = true;
  AttributionMap live = {1.0, 1.0, 1.0};
  residual_attribution(live, forget({0}), iota_ids(3), &degenerate);
  CHECK(!degenerate);
}

TEST_CASE("residual attribution of uniform maps equals the forget-share") {
  Rng rng(0xA77);
  for (int trial = 0; trial < 1000; ++trial) {
    size_t n = 2 + rng.below(60);
    double level = rng.uniform(0.1, 9.0);
    AttributionMap att(n, level);
    size_t fcount = 1 + rng.below(n - 1);
    std::vector<NodeId> ids = iota_ids(n);
    for (size_t i = 0; i < fcount; ++i) std::swap(ids[i], ids[i + rng.below(n - i)]);
    ForgetSet f = forget(std::vector<NodeId>(ids.begin(), ids.begin() + fcount));
    double expect = 100.0 * static_cast<double>(fcount) / static_cast<double>(n);
    CHECK(residual_attribution(att, f, iota_ids(n)) == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("residual attribution rejects out-of-domain nodes") {
  AttributionMap att = {1.0, 1.0};
  CHECK_THROWS_AS(residual_attribution(att, forget({5}), iota_ids(2)), ArgumentError);
  CHECK_THROWS_AS(residual_attribution(att, forget({0}), {0, 9}), ArgumentError);
}

TEST_CASE("heatmap shift hand values") {
  CHECK(heatmap_shift({0.0, 0.0, 3.0}, {0.0, 1.0, 0.0}) ==
        doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  AttributionMap same = {0.5, 0.25, 0.125};
  CHECK(heatmap_shift(same, same) == 0.0);
}

TEST_CASE("heatmap shift is a metric on attribution maps") {
  Rng rng(0xB33F);
  for (int trial = 0; trial < 1000; ++trial) {
    size_t n = 1 + rng.below(40);
    AttributionMap a(n), b(n);
    for (size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform(-4.0, 4.0);
      b[i] = rng.uniform(-4.0, 4.0);
    }
    double ab = heatmap_shift(a, b);
    CHECK(ab >= 0.0);
    CHECK(heatmap_shift(b, a) == ab);
    CHECK(heatmap_shift(a, a) == 0.0);
    if (a != b) CHECK(ab > 0.0);

    // Scaling both maps scales the shift linearly.
    AttributionMap a2 = a, b2 = b;
    for (size_t i = 0; i < n; ++i) {
      a2[i] *= 2.0;
      b2[i] *= 2.0;
    }
    CHECK(heatmap_shift(a2, b2) == doctest::Approx(2.0 * ab).epsilon(1e-12));
  }
}

TEST_CASE("heatmap shift rejects mismatched domains") {
  CHECK_THROWS_AS(heatmap_shift({1.0}, {1.0, 2.0}), ArgumentError);
  CHECK_THROWS_AS(heatmap_shift({}, {}), ArgumentError);
}

TEST_CASE("esd hand value and deletion behaviour") {
  // pre = {1:0.4, 2:0.6}, post zeroes shift by 0.3 and 0.4: mean 0.35.
  AttributionMap pre = {0.0, 0.4, 0.6};
  AttributionMap post = {0.0, 0.1, 0.2};
  CHECK(esd(pre, post, forget({1, 2})) == doctest::Approx(0.35).epsilon(1e-15));

  // Deletion zeroes post attribution on f, so ESD is the mean of pre over f.
  AttributionMap zeroed = {0.0, 0.0, 0.0};
  CHECK(esd(pre, zeroed, forget({1, 2})) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("esd rejects an empty forget set and bad domains") {
  AttributionMap a = {1.0, 2.0};
  CHECK_THROWS_AS(esd(a, a, forget({})), ArgumentError);
  CHECK_THROWS_AS(esd(a, {1.0}, forget({0})), ArgumentError);
  CHECK_THROWS_AS(esd(a, a, forget({7})), ArgumentError);
}

TEST_CASE("ged delta matches the brute-force symmetric difference") {
  EdgeSet a = EdgeSet::from_pairs({{1, 2}, {2, 3}});
  EdgeSet b = EdgeSet::from_pairs({{2, 3}, {3, 4}});
  CHECK(ged_delta(a, b) == 2);
  CHECK(ged_delta(a, a) == 0);
  CHECK(ged_delta(a, EdgeSet{}) == 2);

  Rng rng(0x6ED);
  for (int trial = 0; trial < 1000; ++trial) {
    auto draw = [&] {
      std::vector<Edge> pairs;
      size_t m = rng.below(30);
      for (size_t i = 0; i < m; ++i) {
        NodeId u = static_cast<NodeId>(rng.below(12));
        NodeId v = static_cast<NodeId>(rng.below(12));
        if (u != v) pairs.push_back(make_edge(u, v));
      }
      return EdgeSet::from_pairs(std::move(pairs));
    };
    EdgeSet x = draw(), y = draw(), z = draw();
    int64_t xy = ged_delta(x, y);
    CHECK(xy == static_cast<int64_t>(oracle::sym_diff_count(as_set(x), as_set(y))));
    CHECK(ged_delta(y, x) == xy);
    CHECK(ged_delta(x, x) == 0);
    CHECK(ged_delta(x, z) <= xy + ged_delta(y, z));
  }
}

TEST_CASE("graph rule shift is the signed rule-count difference") {
  auto rules = [](size_t count) {
    RuleSet rs;
    rs.rules.resize(count);
    return rs;
  };
  CHECK(grs(rules(5), rules(5)) == 0);
  CHECK(grs(rules(7), rules(4)) == 3);
  CHECK(grs(rules(2), rules(6)) == -4);
}

TEST_CASE("mi auc hand values") {
  // Members losing uniformly less than nonmembers: perfect attack.
  CHECK(mi_auc({0.1, 0.2}, {0.9, 0.8, 0.7}) == 1.0);
  // Identical loss multisets: coin flip.
  CHECK(mi_auc({0.3, 0.4}, {0.4, 0.3}) == 0.5);
  // Members with higher loss score below nonmembers.
  CHECK(mi_auc({0.9}, {0.1}) == 0.0);
  // Single tied pair contributes half credit.
  CHECK(mi_auc({0.5}, {0.5}) == 0.5);
}

TEST_CASE("mi auc matches the quadratic pairwise oracle exactly") {
  Rng rng(0xAC);
  for (int trial = 0; trial < 200; ++trial) {
    size_t m = 1 + rng.below(100);
    size_t w = 1 + rng.below(100);
    std::vector<double> mem(m), non(w);
    // Coarse grid forces plenty of ties.
    for (double& x : mem) x = static_cast<double>(rng.below(8)) / 4.0;
    for (double& x : non) x = static_cast<double>(rng.below(8)) / 4.0 + 0.25;
    double got = mi_auc(mem, non);
    double want = oracle::auc_pairwise(mem, non);
    CHECK(got == want);
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);

    // Swapping the pools reflects the statistic around 0.5.
    CHECK(mi_auc(non, mem) == doctest::Approx(1.0 - got).epsilon(1e-12));
  }
}

TEST_CASE("mi auc is invariant under strictly monotone loss transforms") {
  Rng rng(0x717);
  for (int trial = 0; trial < 200; ++trial) {
    size_t m = 1 + rng.below(40);
    size_t w = 1 + rng.below(40);
    std::vector<double> mem(m), non(w);
    for (double& x : mem) x = rng.uniform(0.0, 3.0);
    for (double& x : non) x = rng.uniform(0.0, 3.0);
    double base = mi_auc(mem, non);
    auto warp = [](std::vector<double> v) {
      for (double& x : v) x = std::exp(x) + 2.0 * x;
      return v;
    };
    CHECK(mi_auc(warp(mem), warp(non)) == base);
  }
}

TEST_CASE("mi auc rejects empty pools") {
  CHECK_THROWS_AS(mi_auc({}, {0.5}), ArgumentError);
  CHECK_THROWS_AS(mi_auc({0.5}, {}), ArgumentError);
}

TEST_CASE("compute_all on identical snapshots yields exact zero deltas") {
  Snapshot snap;
  snap.attribution = {0.5, 1.5, 0.0, 2.0};
  snap.proxy = EdgeSet::from_pairs({{0, 1}, {1, 3}});
  snap.rules.rules.resize(3);
  snap.member_nodes = {0, 1};
  snap.member_losses = {0.2, 0.4};
  snap.nonmember_nodes = {3};
  snap.nonmember_losses = {0.9};
  snap.predictions = {0, 1, -1, 0};
  snap.digest = "feedc0de";

  Graph g;
  g.n = 4;
  g.dim = 1;
  g.num_classes = 2;
  g.features = Mat(4, 1);
  g.labels = {0, 1, 0, 0};
  g.masks = {Mask::Train, Mask::Train, Mask::None, Mask::Test};
  g.present = {1, 1, 1, 1};

  ForgetSet f = forget({1});
  MetricVector m = compute_all(snap, snap, f, g);
  CHECK(m.hs == 0.0);
  CHECK(m.esd == 0.0);
  CHECK(m.ged_delta == 0);
  CHECK(m.grs == 0);
  CHECK(m.ra_pre_pct == m.ra_post_pct);
  CHECK(m.mi_auc_pre == m.mi_auc_post);
  CHECK(!m.ra_pre_degenerate);
  CHECK(m.mi_auc_pre == 1.0);  // member losses all below the nonmember loss

  Snapshot other = snap;
  other.digest = "0ddba11";
  CHECK_THROWS_AS(compute_all(snap, other, f, g), IntegrityError);
}

}  // TEST_SUITE
