#include "ulv/graph.hpp"

#include <algorithm>
#include <queue>
#include <string>

#include "ulv/errors.hpp"
#include "ulv/rng.hpp"

namespace ulv {

EdgeSet EdgeSet::from_pairs(std::vector<Edge> pairs) {
  for (Edge& e : pairs) {
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  EdgeSet s;
  s.edges_ = std::move(pairs);
  return s;
}

bool EdgeSet::contains(Edge e) const {
  if (e.u > e.v) std::swap(e.u, e.v);
  return std::binary_search(edges_.begin(), edges_.end(), e);
}

size_t edge_symmetric_difference(const EdgeSet& e1, const EdgeSet& e2) {
  auto it1 = e1.begin(), it2 = e2.begin();
  size_t count = 0;
  while (it1 != e1.end() && it2 != e2.end()) {
    if (*it1 < *it2) {
      ++count;
      ++it1;
    } else if (*it2 < *it1) {
      ++count;
      ++it2;
    } else {
      ++it1;
      ++it2;
    }
  }
  count += static_cast<size_t>(e1.end() - it1);
  count += static_cast<size_t>(e2.end() - it2);
  return count;
}

EdgeSet edge_union(const EdgeSet& e1, const EdgeSet& e2) {
  std::vector<Edge> out;
  out.reserve(e1.size() + e2.size());
  std::set_union(e1.begin(), e1.end(), e2.begin(), e2.end(), std::back_inserter(out));
  return EdgeSet::from_pairs(std::move(out));
}

size_t Graph::present_count() const {
  size_t c = 0;
  for (uint8_t p : present) c += p ? 1 : 0;
  return c;
}

std::vector<NodeId> Graph::present_nodes() const {
  std::vector<NodeId> out;
  out.reserve(n);
  for (size_t v = 0; v < n; ++v) {
    if (present[v]) out.push_back(static_cast<NodeId>(v));
  }
  return out;
}

std::vector<NodeId> Graph::nodes_with_mask(Mask m) const {
  std::vector<NodeId> out;
  for (size_t v = 0; v < n; ++v) {
    if (present[v] && masks[v] == m) out.push_back(static_cast<NodeId>(v));
  }
  return out;
}

std::vector<std::vector<NodeId>> Graph::adjacency() const {
  std::vector<std::vector<NodeId>> adj(n);
  for (const Edge& e : edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());
  return adj;
}

void Graph::validate() const {
  if (features.rows != n || labels.size() != n || masks.size() != n || present.size() != n) {
    throw IntegrityError("graph: per-node array sizes disagree with n=" + std::to_string(n));
  }
  if (features.cols != dim) {
    throw IntegrityError("graph: feature matrix width disagrees with dim");
  }
  for (size_t v = 0; v < n; ++v) {
    if (present[v] && labels[v] >= 0 && labels[v] >= num_classes) {
      throw IntegrityError("graph: label out of range at node " + std::to_string(v));
    }
  }
  NodeId prev_u = -1, prev_v = -1;
  for (const Edge& e : edges) {
    if (e.u >= e.v) throw IntegrityError("graph: edge not normalized or self-loop");
    if (e.v < 0 || static_cast<size_t>(e.v) >= n) {
      throw IntegrityError("graph: edge endpoint out of range");
    }
    if (!present[e.u] || !present[e.v]) {
      throw IntegrityError("graph: edge incident to absent node");
    }
    if (e.u == prev_u && e.v == prev_v) throw IntegrityError("graph: duplicate edge");
    prev_u = e.u;
    prev_v = e.v;
  }
}

Graph generate_sbm(const std::vector<size_t>& blocks, double p_in, double p_out, size_t d,
                   uint64_t seed) {
  if (blocks.empty()) throw ArgumentError("generate_sbm: empty block list");
  for (size_t b : blocks) {
    if (b < 1) throw ArgumentError("generate_sbm: block sizes must be >= 1");
  }
  if (p_in < 0 || p_in > 1 || p_out < 0 || p_out > 1) {
    throw ArgumentError("generate_sbm: probabilities must lie in [0,1]");
  }
  if (d < 1) throw ArgumentError("generate_sbm: feature dimension must be >= 1");

  size_t n = 0;
  for (size_t b : blocks) n += b;

  Graph g;
  g.n = n;
  g.dim = d;
  g.num_classes = static_cast<int32_t>(blocks.size());
  g.features = Mat(n, d);
  g.labels.assign(n, 0);
  g.masks.assign(n, Mask::None);
  g.present.assign(n, 1);

  std::vector<int32_t> block_of(n);
  size_t at = 0;
  for (size_t b = 0; b < blocks.size(); ++b) {
    for (size_t i = 0; i < blocks[b]; ++i) block_of[at++] = static_cast<int32_t>(b);
  }

  Rng feat_rng = derive_stream(seed, "sbm:features");
  for (size_t v = 0; v < n; ++v) {
    g.labels[v] = block_of[v];
    g.features(v, static_cast<size_t>(block_of[v]) % d) = 1.0;
    for (size_t j = 0; j < d; ++j) g.features(v, j) += 0.1 * feat_rng.normal();
    switch (v % 5) {
      case 3:
        g.masks[v] = Mask::Val;
        break;
      case 4:
        g.masks[v] = Mask::Test;
        break;
      default:
        g.masks[v] = Mask::Train;
    }
  }

  Rng edge_rng = derive_stream(seed, "sbm:edges");
  std::vector<Edge> pairs;
  for (size_t u = 0; u < n; ++u) {
    for (size_t v = u + 1; v < n; ++v) {
      const double p = block_of[u] == block_of[v] ? p_in : p_out;
      if (edge_rng.bernoulli(p)) {
        pairs.push_back(Edge{static_cast<NodeId>(u), static_cast<NodeId>(v)});
      }
    }
  }
  g.edges = EdgeSet::from_pairs(std::move(pairs));
  g.validate();
  return g;
}

ForgetSet sample_forget_set(const Graph& g, double fraction, uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ArgumentError("sample_forget_set: fraction must lie in (0,1)");
  }
  std::vector<NodeId> pool = g.present_nodes();
  const size_t m = static_cast<size_t>(std::llround(fraction * static_cast<double>(pool.size())));
  if (m == 0 || m > pool.size()) {
    throw ArgumentError("sample_forget_set: graph too small for requested fraction");
  }
  Rng rng = derive_stream(seed, "forget");
  // partial Fisher-Yates over the present pool
  for (size_t i = 0; i < m; ++i) {
    const size_t j = i + static_cast<size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  ForgetSet f;
  f.node_ids.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
  std::sort(f.node_ids.begin(), f.node_ids.end());
  f.seed = seed;
  f.fraction = fraction;
  return f;
}

Graph remove_nodes(const Graph& g, const ForgetSet& f) {
  for (NodeId v : f.node_ids) {
    if (!g.is_present(v)) {
      throw ArgumentError("remove_nodes: node " + std::to_string(v) + " is not present");
    }
  }
  Graph out = g;
  for (NodeId v : f.node_ids) out.present[v] = 0;
  std::vector<Edge> kept;
  kept.reserve(g.edges.size());
  for (const Edge& e : g.edges) {
    if (out.present[e.u] && out.present[e.v]) kept.push_back(e);
  }
  out.edges = EdgeSet::from_pairs(std::move(kept));
  return out;
}

namespace {

// BFS ball of radius k around center, over the prebuilt adjacency.
std::vector<NodeId> khop_ball(const std::vector<std::vector<NodeId>>& adj, NodeId center, int k) {
  std::vector<int> dist(adj.size(), -1);
  std::queue<NodeId> q;
  dist[center] = 0;
  q.push(center);
  std::vector<NodeId> ball{center};
  while (!q.empty()) {
    const NodeId u = q.front();
    q.pop();
    if (dist[u] >= k) continue;
    for (NodeId w : adj[u]) {
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        ball.push_back(w);
        q.push(w);
      }
    }
  }
  return ball;
}

// Edges induced on the ball, collected via adjacency so repeated centers stay
// cheap. `stamp`/`mark` avoid clearing an n-sized flag array per center.
void induced_edges_into(const std::vector<std::vector<NodeId>>& adj,
                        const std::vector<NodeId>& ball, std::vector<uint32_t>& mark,
                        uint32_t stamp, std::vector<Edge>& out) {
  for (NodeId v : ball) mark[v] = stamp;
  for (NodeId u : ball) {
    for (NodeId w : adj[u]) {
      if (w > u && mark[w] == stamp) out.push_back(Edge{u, w});
    }
  }
}

}  // namespace

EdgeSet ego_network(const Graph& g, NodeId center, int k) {
  if (!g.is_present(center)) {
    throw ArgumentError("ego_network: center " + std::to_string(center) + " is not present");
  }
  if (k < 0) throw ArgumentError("ego_network: k must be >= 0");
  if (k == 0) return EdgeSet{};
  const auto adj = g.adjacency();
  std::vector<uint32_t> mark(g.n, 0);
  std::vector<Edge> out;
  induced_edges_into(adj, khop_ball(adj, center, k), mark, 1, out);
  return EdgeSet::from_pairs(std::move(out));
}

// Union of the per-center ego edge sets. Note this is not the same as the
// subgraph induced on the union of balls: an edge bridging two balls belongs
// to the proxy only if one ball contains both endpoints.
EdgeSet proxy_graph(const Graph& g, const ForgetSet& f, int k) {
  if (k < 1) throw ArgumentError("proxy_graph: k must be >= 1");
  const auto adj = g.adjacency();
  std::vector<uint32_t> mark(g.n, 0);
  std::vector<Edge> out;
  uint32_t stamp = 0;
  for (NodeId v : f.node_ids) {
    if (!g.is_present(v)) {
      throw ArgumentError("proxy_graph: forget node " + std::to_string(v) + " is not present");
    }
    induced_edges_into(adj, khop_ball(adj, v, k), mark, ++stamp, out);
  }
  return EdgeSet::from_pairs(std::move(out));
}

}  // namespace ulv
