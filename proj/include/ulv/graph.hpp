#pragma once

#include <compare>
#include <cstdint>
#include <vector>

#include "ulv/mat.hpp"

namespace ulv {

using NodeId = int32_t;

/// Undirected edge, stored normalized with u < v.
struct Edge {
  NodeId u;
  NodeId v;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline Edge make_edge(NodeId a, NodeId b) { return a < b ? Edge{a, b} : Edge{b, a}; }

/// Deduplicated set of normalized undirected edges, kept sorted.
class EdgeSet {
 public:
  EdgeSet() = default;

  /// Normalizes, sorts and deduplicates. Self-loops are rejected upstream.
  static EdgeSet from_pairs(std::vector<Edge> pairs);

  size_t size() const { return edges_.size(); }
  bool empty() const { return edges_.empty(); }
  bool contains(Edge e) const;

  auto begin() const { return edges_.begin(); }
  auto end() const { return edges_.end(); }
  const std::vector<Edge>& edges() const { return edges_; }

  friend bool operator==(const EdgeSet&, const EdgeSet&) = default;

 private:
  std::vector<Edge> edges_;
};

/// |e1 symmetric-difference e2|.
size_t edge_symmetric_difference(const EdgeSet& e1, const EdgeSet& e2);

EdgeSet edge_union(const EdgeSet& e1, const EdgeSet& e2);

enum class Mask : uint8_t { None = 0, Train, Val, Test };

/// Attributed undirected graph over stable node ids 0..n-1. Deletion flips
/// `present` flags and drops incident edges; ids are never reindexed, so
/// per-node artifacts stay aligned across pre/post snapshots.
struct Graph {
  size_t n = 0;
  size_t dim = 0;
  int32_t num_classes = 0;
  Mat features;                 // n x dim (rows of absent nodes retained)
  std::vector<int32_t> labels;  // class id in [0, num_classes)
  std::vector<Mask> masks;
  std::vector<uint8_t> present;
  EdgeSet edges;                // only between present nodes

  size_t present_count() const;
  bool is_present(NodeId v) const { return v >= 0 && static_cast<size_t>(v) < n && present[v]; }
  std::vector<NodeId> present_nodes() const;
  std::vector<NodeId> nodes_with_mask(Mask m) const;  // present only

  /// Neighbor lists over present nodes, ascending. Absent nodes get empty rows.
  std::vector<std::vector<NodeId>> adjacency() const;

  /// Throws IntegrityError when an invariant is violated.
  void validate() const;
};

struct ForgetSet {
  std::vector<NodeId> node_ids;  // sorted ascending
  uint64_t seed = 0;
  double fraction = 0.0;
};

/// Stochastic block model fixture. Labels are block ids, features are a block
/// indicator (dimension block_id mod d) plus 0.1 * gaussian noise, and masks
/// cycle train,train,train,val,test by node index.
Graph generate_sbm(const std::vector<size_t>& blocks, double p_in, double p_out, size_t d,
                   uint64_t seed);

/// round(fraction * n) present nodes, uniform without replacement.
/// Depends only on (graph, fraction, seed).
ForgetSet sample_forget_set(const Graph& g, double fraction, uint64_t seed);

/// Copy of g with f's nodes marked absent and their incident edges dropped.
Graph remove_nodes(const Graph& g, const ForgetSet& f);

/// Edges of the subgraph induced on nodes within BFS distance k of center.
EdgeSet ego_network(const Graph& g, NodeId center, int k);

/// Union of ego_network(g, v, k) over v in f. All of f must be present.
EdgeSet proxy_graph(const Graph& g, const ForgetSet& f, int k);

}  // namespace ulv
