#pragma once

#include "tdg/dataset.hpp"

namespace tdg {

/// Combines two graphs that agree on the features of one shared node into
/// the pair (G1*, G2*) whose block adjacencies are
///   [[0, B1, B2], [C1, S1, 0], [C2, 0, S2]]   and its block swap,
/// where (B_i, C_i, S_i) split graph i at the shared node. The two outputs
/// are isomorphic under the permutation that exchanges the non-shared
/// blocks, so a permutation-invariant model that predicts differently on
/// them demonstrates susceptibility to node injection.
///
/// Node layout of each output: 0 = shared node, then g1's other nodes in
/// order, then g2's other nodes in order.
std::pair<Dataset, Dataset> build_lemma_graphs(const Dataset& g1, const Dataset& g2,
                                               NodeId shared_node);

/// The permutation mapping node ids of the first output onto the second
/// (block swap). result[i] is the id in G2* corresponding to id i in G1*.
std::vector<NodeId> lemma_swap_permutation(NodeId n1, NodeId n2);

}  // namespace tdg
