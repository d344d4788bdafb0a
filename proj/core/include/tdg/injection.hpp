#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tdg/dataset.hpp"

namespace tdg {

/// Attack budget: node count cap, per-injected-node degree cap, and the
/// admissible feature interval for injected rows.
struct Budget {
  NodeId max_nodes = 0;                       // b
  std::int64_t max_degree = 1;                // d
  std::pair<double, double> feature_bounds{-1.0, 1.0};

  void validate() const {
    if (max_nodes < 0) throw DatasetError("budget: max_nodes must be >= 0");
    if (max_degree < 1) throw DatasetError("budget: max_degree must be >= 1");
    if (feature_bounds.first >= feature_bounds.second)
      throw DatasetError("budget: feature bounds min must be < max");
  }
};

/// The attack artifact: cross edges to the original graph, adjacency among
/// injected nodes, and the injected feature rows.
struct Injection {
  NodeId n_injected = 0;
  std::vector<std::pair<NodeId, NodeId>> cross_edges;     // (original id, injected index)
  std::vector<std::pair<NodeId, NodeId>> injected_edges;  // (injected, injected), i < j
  Matrix injected_features;                               // n_injected x D

  bool empty() const { return n_injected == 0; }
};

struct Violation {
  enum class Kind { count, degree, feature_range, index };
  Kind kind;
  NodeId offender;  // injected index, or original id for index violations
  std::string message;
};

/// Checks all budget constraint families; an empty result means admissible.
std::vector<Violation> validate_injection(const Injection& inj, const Budget& budget,
                                          NodeId n_original);

/// Builds the attacked dataset with block adjacency [[A, V_I],[V_I^T, A_I]]
/// and stacked features [F; F_I]. Original rows are copied unchanged and
/// injected nodes join no split. Never mutates its input.
Dataset apply_injection(const Dataset& ds, const Injection& inj);

void save_injection(const Injection& inj, const Budget& budget,
                    const std::filesystem::path& file);
std::pair<Injection, Budget> load_injection(const std::filesystem::path& file);

}  // namespace tdg
