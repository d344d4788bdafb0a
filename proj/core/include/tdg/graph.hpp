#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tdg {

using NodeId = std::int64_t;

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Undirected, unweighted sparse graph in compressed row form.
/// Symmetric by construction: (u,v) stored iff (v,u) stored.
/// No self-loops, no duplicate edges; column indices sorted per row.
class Graph {
 public:
  Graph() = default;

  /// Builds from an edge list. Symmetrizes directed input and
  /// removes duplicates and self-loops.
  static Graph from_edges(NodeId n, const std::vector<std::pair<NodeId, NodeId>>& edges);

  NodeId num_nodes() const { return n_; }
  std::int64_t num_undirected_edges() const {
    return static_cast<std::int64_t>(cols_.size()) / 2;
  }

  const std::vector<std::int64_t>& row_offsets() const { return offsets_; }
  const std::vector<NodeId>& col_indices() const { return cols_; }

  std::int64_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
  std::vector<std::int64_t> degrees() const;

  bool has_edge(NodeId u, NodeId v) const;

  /// Neighbors of v as a contiguous sorted range.
  std::pair<const NodeId*, const NodeId*> neighbors(NodeId v) const {
    return {cols_.data() + offsets_[v], cols_.data() + offsets_[v + 1]};
  }

  /// Unique undirected edges, u < v, lexicographically sorted.
  std::vector<std::pair<NodeId, NodeId>> edge_list() const;

  bool operator==(const Graph& other) const = default;

 private:
  NodeId n_ = 0;
  std::vector<std::int64_t> offsets_{0};
  std::vector<NodeId> cols_;
};

enum class NormScheme { gcn_symmetric, mean };

/// Row-indexed weighted neighbor lists produced by adjacency normalization.
/// Both schemes add a self-loop to every node; weights are strictly positive.
struct NormalizedAdjacency {
  NodeId n = 0;
  std::vector<std::int64_t> offsets;
  std::vector<NodeId> cols;
  std::vector<double> weights;

  double weight(NodeId u, NodeId v) const;
};

/// gcn_symmetric: w(u,v) = 1/sqrt((deg(u)+1)(deg(v)+1)), self-loops included.
/// mean: w(u,v) = 1/(deg(v)+1) for each in-neighbor u of v plus v itself.
NormalizedAdjacency normalize_adjacency(const Graph& g, NormScheme scheme);

}  // namespace tdg
