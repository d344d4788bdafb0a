#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tdg/graph.hpp"

namespace tdg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Immutable attributed graph with features, labels, splits and the
/// observed feature range.
struct Dataset {
  Graph graph;
  Matrix features;               // n x D
  std::vector<int> labels;       // class index per node, in {0..C-1}
  std::vector<NodeId> train_idx;
  std::vector<NodeId> val_idx;
  std::vector<NodeId> test_idx;
  int num_classes = 0;
  std::pair<double, double> feature_range{0.0, 0.0};

  NodeId num_nodes() const { return graph.num_nodes(); }
  Eigen::Index feature_dim() const { return features.cols(); }

  /// Checks the structural invariants; throws DatasetError on violation.
  void validate() const;
};

/// Reads edges.csv, features.csv, labels.csv, split_{train,val,test}.csv
/// from `dir`. Directed edge lists are symmetrized and deduplicated.
/// feature_range is the (min, max) over all feature entries.
Dataset load_dataset(const std::filesystem::path& dir);

/// Writes the dataset in the same format. Edges are emitted once per
/// undirected pair, u < v.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

struct SbmParams {
  int blocks = 4;
  std::vector<NodeId> sizes;      // defaults to even split of `nodes`
  NodeId nodes = 500;
  double p_in = 0.05;
  double p_out = 0.005;
  Eigen::Index feature_dim = 16;
  double class_signal_strength = 1.0;
  double noise = 0.5;
  double train_frac = 0.6;
  double val_frac = 0.2;
};

/// Stochastic-block-model dataset: labels are block memberships, features
/// are the class-mean vector scaled by class_signal_strength plus uniform
/// noise, globally rescaled into a symmetric range. Deterministic per seed.
Dataset synth_sbm(const SbmParams& params, std::uint64_t seed);

}  // namespace tdg
