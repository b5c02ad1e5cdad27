#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "ulv/errors.hpp"
#include "ulv/graph.hpp"
#include "ulv/rng.hpp"

using namespace ulv;

namespace {

Graph make_graph(size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges) {
  Graph g;
  g.n = n;
  g.dim = 1;
  g.num_classes = 2;
  g.features = Mat(n, 1);
  g.labels.assign(n, 0);
  g.masks.assign(n, Mask::Train);
  g.present.assign(n, 1);
  std::vector<Edge> pairs;
  for (auto [u, v] : edges) pairs.push_back(make_edge(u, v));
  g.edges = EdgeSet::from_pairs(std::move(pairs));
  return g;
}

ForgetSet forget(std::vector<NodeId> ids) {
  ForgetSet f;
  f.node_ids = std::move(ids);
  return f;
}

std::set<std::pair<NodeId, NodeId>> as_set(const EdgeSet& es) {
  std::set<std::pair<NodeId, NodeId>> out;
  for (const Edge& e : es) out.insert({e.u, e.v});
  return out;
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("edge set normalizes, deduplicates and compares") {
  EdgeSet a = EdgeSet::from_pairs({{1, 2}, {2, 3}, {2, 1}});
  CHECK(a.size() == 2);
  CHECK(a.contains(make_edge(2, 1)));

  EdgeSet b = EdgeSet::from_pairs({{2, 3}, {3, 4}});
  CHECK(edge_symmetric_difference(a, b) == 2);
  CHECK(edge_symmetric_difference(a, a) == 0);
  CHECK(edge_symmetric_difference(a, EdgeSet{}) == a.size());
  CHECK(edge_symmetric_difference(a, b) == edge_symmetric_difference(b, a));
}

TEST_CASE("edge symmetric difference satisfies the metric axioms") {
  Rng rng(77);
  for (int trial = 0; trial < 400; ++trial) {
    auto random_set = [&] {
      std::vector<Edge> pairs;
      const size_t cnt = rng.below(20);
      for (size_t i = 0; i < cnt; ++i) {
        NodeId u = static_cast<NodeId>(rng.below(12));
        NodeId v = static_cast<NodeId>(rng.below(12));
        if (u != v) pairs.push_back(make_edge(u, v));
      }
      return EdgeSet::from_pairs(std::move(pairs));
    };
    EdgeSet x = random_set(), y = random_set(), z = random_set();
    const auto dxy = edge_symmetric_difference(x, y);
    const auto dyz = edge_symmetric_difference(y, z);
    const auto dxz = edge_symmetric_difference(x, z);
    CHECK(dxy == edge_symmetric_difference(y, x));
    CHECK((dxy == 0) == (x == y));
    CHECK(dxz <= dxy + dyz);
  }
}

TEST_CASE("sbm generator hits the closed-form cases") {
  Graph cliques = generate_sbm({5, 5}, 1.0, 0.0, 4, 1);
  CHECK(cliques.n == 10);
  CHECK(cliques.edges.size() == 20);  // two complete blocks of 5
  CHECK(cliques.num_classes == 2);

  Graph isolated = generate_sbm({4}, 0.0, 0.0, 2, 1);
  CHECK(isolated.edges.empty());
  CHECK(isolated.num_classes == 1);

  CHECK_THROWS_AS(generate_sbm({}, 0.5, 0.1, 4, 1), ArgumentError);
}

TEST_CASE("sbm generator is deterministic in the seed") {
  Graph a = generate_sbm({10, 10}, 0.5, 0.05, 6, 1001);
  Graph b = generate_sbm({10, 10}, 0.5, 0.05, 6, 1001);
  CHECK(a.edges == b.edges);
  CHECK(a.features == b.features);
  Graph c = generate_sbm({10, 10}, 0.5, 0.05, 6, 1002);
  CHECK(a.edges != c.edges);
}

TEST_CASE("sbm features carry the block indicator") {
  Graph g = generate_sbm({6, 6}, 0.9, 0.05, 4, 3);
  for (NodeId v = 0; v < 12; ++v) {
    const size_t hot = static_cast<size_t>(g.labels[v]);
    // indicator 1.0 plus 0.1 gaussian noise stays well above the other dims
    CHECK(g.features(v, hot) > 0.5);
  }
}

TEST_CASE("forget set sampling sizes and determinism") {
  Graph g = generate_sbm({50, 50}, 0.2, 0.02, 4, 9);
  ForgetSet f = sample_forget_set(g, 0.05, 1001);
  CHECK(f.node_ids.size() == 5);  // round(0.05 * 100)
  CHECK(std::is_sorted(f.node_ids.begin(), f.node_ids.end()));

  ForgetSet again = sample_forget_set(g, 0.05, 1001);
  CHECK(f.node_ids == again.node_ids);
  ForgetSet other = sample_forget_set(g, 0.05, 1002);
  CHECK(f.node_ids != other.node_ids);

  Graph tiny = generate_sbm({10, 10}, 0.2, 0.02, 4, 9);
  ForgetSet one = sample_forget_set(tiny, 0.05, 7);
  CHECK(one.node_ids.size() == 1);
  CHECK(one.node_ids[0] < 20);

  CHECK_THROWS_AS(sample_forget_set(g, 0.0, 1), ArgumentError);
  CHECK_THROWS_AS(sample_forget_set(g, 1.0, 1), ArgumentError);
}

TEST_CASE("forget set sampling covers every node across seeds") {
  Graph g = generate_sbm({50, 50}, 0.2, 0.02, 4, 9);
  std::vector<bool> seen(g.n, false);
  for (uint64_t seed = 0; seed < 1000; ++seed) {
    for (NodeId v : sample_forget_set(g, 0.05, seed).node_ids) seen[v] = true;
  }
  CHECK(std::count(seen.begin(), seen.end(), false) == 0);
}

TEST_CASE("remove_nodes drops incident edges and keeps ids stable") {
  Graph path = make_graph(3, {{0, 1}, {1, 2}});
  Graph cut = remove_nodes(path, forget({1}));
  CHECK(cut.edges.empty());
  CHECK(cut.present_nodes() == std::vector<NodeId>{0, 2});
  CHECK(cut.n == 3);
  // input untouched
  CHECK(path.edges.size() == 2);
  CHECK(path.present_count() == 3);

  Graph same = remove_nodes(path, forget({}));
  CHECK(same.edges == path.edges);
  CHECK(same.present_count() == 3);

  CHECK_THROWS_AS(remove_nodes(cut, forget({1})), ArgumentError);
}

TEST_CASE("removing the star center isolates the leaves") {
  Graph star = make_graph(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  Graph rest = remove_nodes(star, forget({0}));
  CHECK(rest.edges.empty());
  CHECK(rest.present_count() == 4);
  CHECK(edge_symmetric_difference(star.edges, rest.edges) == 4);
}

TEST_CASE("ego network on a path") {
  Graph path = make_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  CHECK(ego_network(path, 2, 2).size() == 4);
  CHECK(as_set(ego_network(path, 0, 1)) ==
        std::set<std::pair<NodeId, NodeId>>{{0, 1}});
  CHECK(ego_network(path, 2, 0).empty());
  CHECK_THROWS_AS(ego_network(remove_nodes(path, forget({2})), 2, 1), ArgumentError);
}

TEST_CASE("ego network with k >= n covers the whole component") {
  Graph g = generate_sbm({12, 12}, 0.4, 0.0, 4, 5);  // no cross-block edges
  const EdgeSet all0 = ego_network(g, 0, static_cast<int>(g.n));
  std::vector<int> dist = oracle::bfs_dist(g, 0);
  std::set<std::pair<NodeId, NodeId>> expect;
  for (const Edge& e : g.edges) {
    if (dist[e.u] >= 0 && dist[e.v] >= 0) expect.insert({e.u, e.v});
  }
  CHECK(!expect.empty());
  CHECK(as_set(all0) == expect);
}

TEST_CASE("ego and proxy match the brute-force BFS oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    Graph g = generate_sbm({15, 15}, 0.15, 0.05, 4, 100 + trial);
    NodeId center = static_cast<NodeId>(rng.below(g.n));
    for (int k = 0; k <= 3; ++k) {
      CHECK(as_set(ego_network(g, center, k)) == oracle::ego_edges(g, center, k));
    }
    ForgetSet f = sample_forget_set(g, 0.1, 500 + trial);
    CHECK(as_set(proxy_graph(g, f, 2)) == oracle::proxy_edges(g, f.node_ids, 2));
  }
}

TEST_CASE("proxy over all nodes saturates to the full edge set") {
  Graph g = generate_sbm({8, 8}, 0.6, 0.2, 4, 2);
  ForgetSet all;
  for (NodeId v = 0; v < static_cast<NodeId>(g.n); ++v) all.node_ids.push_back(v);
  CHECK(proxy_graph(g, all, static_cast<int>(g.n)) == g.edges);
}

TEST_CASE("proxy of disjoint balls is the disjoint union") {
  // two separate paths: 0-1-2 and 3-4-5
  Graph g = make_graph(6, {{0, 1}, {1, 2}, {3, 4}, {4, 5}});
  EdgeSet p = proxy_graph(g, forget({0, 3}), 1);
  CHECK(as_set(p) == std::set<std::pair<NodeId, NodeId>>{{0, 1}, {3, 4}});
  CHECK(p.size() == ego_network(g, 0, 1).size() + ego_network(g, 3, 1).size());
}

TEST_CASE("graph validate accepts the generator output") {
  Graph g = generate_sbm({10, 10}, 0.3, 0.05, 4, 8);
  CHECK_NOTHROW(g.validate());
}

}  // TEST_SUITE
