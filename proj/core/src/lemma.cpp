#include "tdg/lemma.hpp"

#include <algorithm>

namespace tdg {
namespace {

// id remap for one input graph: shared -> 0, others -> base + rank
std::vector<NodeId> remap(NodeId n, NodeId shared, NodeId base) {
  std::vector<NodeId> map(static_cast<std::size_t>(n));
  NodeId next = base;
  for (NodeId v = 0; v < n; ++v) map[v] = (v == shared) ? 0 : next++;
  return map;
}

Dataset combine(const Dataset& first, const Dataset& second, NodeId shared) {
  const NodeId n1 = first.num_nodes();
  const NodeId n2 = second.num_nodes();
  const NodeId n = n1 + n2 - 1;

  auto map1 = remap(n1, shared, 1);
  auto map2 = remap(n2, shared, n1);

  std::vector<std::pair<NodeId, NodeId>> edges;
  for (const auto& [u, v] : first.graph.edge_list()) edges.emplace_back(map1[u], map1[v]);
  for (const auto& [u, v] : second.graph.edge_list()) edges.emplace_back(map2[u], map2[v]);

  Dataset out;
  out.graph = Graph::from_edges(n, edges);
  out.features.resize(n, first.features.cols());
  out.labels.resize(static_cast<std::size_t>(n));
  for (NodeId v = 0; v < n1; ++v) {
    out.features.row(map1[v]) = first.features.row(v);
    out.labels[map1[v]] = first.labels[v];
  }
  for (NodeId v = 0; v < n2; ++v) {
    if (v == shared) continue;
    out.features.row(map2[v]) = second.features.row(v);
    out.labels[map2[v]] = second.labels[v];
  }
  out.num_classes = std::max(first.num_classes, second.num_classes);
  out.feature_range = {std::min(first.feature_range.first, second.feature_range.first),
                       std::max(first.feature_range.second, second.feature_range.second)};
  return out;
}

}  // namespace

std::pair<Dataset, Dataset> build_lemma_graphs(const Dataset& g1, const Dataset& g2,
                                               NodeId shared_node) {
  if (g1.features.cols() != g2.features.cols())
    throw DatasetError("lemma construction: feature dimension mismatch");
  if (shared_node < 0 || shared_node >= g1.num_nodes() || shared_node >= g2.num_nodes())
    throw DatasetError("lemma construction: shared node out of range");
  if ((g1.features.row(shared_node) - g2.features.row(shared_node)).cwiseAbs().maxCoeff() > 0)
    throw DatasetError("lemma construction: shared node features differ");

  return {combine(g1, g2, shared_node), combine(g2, g1, shared_node)};
}

std::vector<NodeId> lemma_swap_permutation(NodeId n1, NodeId n2) {
  const NodeId n = n1 + n2 - 1;
  std::vector<NodeId> perm(static_cast<std::size_t>(n));
  perm[0] = 0;
  // g1 block of G1* sits after the g2 block in G2*
  for (NodeId i = 1; i < n1; ++i) perm[i] = n2 - 1 + i;
  for (NodeId i = n1; i < n; ++i) perm[i] = i - n1 + 1;
  return perm;
}

}  // namespace tdg
