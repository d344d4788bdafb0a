#include "tdg/graph.hpp"

#include <algorithm>
#include <cmath>

namespace tdg {

Graph Graph::from_edges(NodeId n, const std::vector<std::pair<NodeId, NodeId>>& edges) {
  if (n < 0) throw GraphError("node count must be nonnegative");
  std::vector<std::pair<NodeId, NodeId>> sym;
  sym.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) {
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw GraphError("edge endpoint out of range: (" + std::to_string(u) + "," +
                       std::to_string(v) + ") with n=" + std::to_string(n));
    if (u == v) continue;
    sym.emplace_back(u, v);
    sym.emplace_back(v, u);
  }
  std::sort(sym.begin(), sym.end());
  sym.erase(std::unique(sym.begin(), sym.end()), sym.end());

  Graph g;
  g.n_ = n;
  g.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  g.cols_.reserve(sym.size());
  for (const auto& [u, v] : sym) {
    g.offsets_[u + 1]++;
    g.cols_.push_back(v);
  }
  for (NodeId v = 0; v < n; ++v) g.offsets_[v + 1] += g.offsets_[v];
  return g;
}

std::vector<std::int64_t> Graph::degrees() const {
  std::vector<std::int64_t> d(static_cast<std::size_t>(n_));
  for (NodeId v = 0; v < n_; ++v) d[v] = degree(v);
  return d;
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  auto begin = cols_.begin() + offsets_[u];
  auto end = cols_.begin() + offsets_[u + 1];
  return std::binary_search(begin, end, v);
}

std::vector<std::pair<NodeId, NodeId>> Graph::edge_list() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(cols_.size() / 2);
  for (NodeId u = 0; u < n_; ++u)
    for (std::int64_t i = offsets_[u]; i < offsets_[u + 1]; ++i)
      if (u < cols_[i]) out.emplace_back(u, cols_[i]);
  return out;
}

double NormalizedAdjacency::weight(NodeId u, NodeId v) const {
  for (std::int64_t i = offsets[v]; i < offsets[v + 1]; ++i)
    if (cols[i] == u) return weights[i];
  return 0.0;
}

NormalizedAdjacency normalize_adjacency(const Graph& g, NormScheme scheme) {
  const NodeId n = g.num_nodes();
  NormalizedAdjacency a;
  a.n = n;
  a.offsets.assign(static_cast<std::size_t>(n) + 1, 0);

  const auto deg = g.degrees();
  for (NodeId v = 0; v < n; ++v) a.offsets[v + 1] = a.offsets[v] + deg[v] + 1;
  a.cols.resize(a.offsets[n]);
  a.weights.resize(a.offsets[n]);

  for (NodeId v = 0; v < n; ++v) {
    std::int64_t pos = a.offsets[v];
    auto [nb, ne] = g.neighbors(v);
    bool self_done = false;
    auto emit = [&](NodeId u) {
      double w;
      if (scheme == NormScheme::gcn_symmetric) {
        w = 1.0 / std::sqrt(static_cast<double>(deg[u] + 1) * static_cast<double>(deg[v] + 1));
      } else {
        w = 1.0 / static_cast<double>(deg[v] + 1);
      }
      a.cols[pos] = u;
      a.weights[pos] = w;
      ++pos;
    };
    for (const NodeId* it = nb; it != ne; ++it) {
      if (!self_done && *it > v) {
        emit(v);
        self_done = true;
      }
      emit(*it);
    }
    if (!self_done) emit(v);
  }
  return a;
}

}  // namespace tdg
