#include <random>

#include "doctest.h"
#include "tdg/train.hpp"

using namespace tdg;

namespace {

// two well-separated clusters, linearly separable features
Dataset separable_dataset(std::uint64_t seed) {
  const NodeId n = 40;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-0.1, 0.1);
  Dataset ds;
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId v = 0; v + 1 < n / 2; ++v) edges.emplace_back(v, v + 1);
  for (NodeId v = n / 2; v + 1 < n; ++v) edges.emplace_back(v, v + 1);
  ds.graph = Graph::from_edges(n, edges);
  ds.features.resize(n, 4);
  ds.labels.resize(n);
  for (NodeId v = 0; v < n; ++v) {
    const int y = v < n / 2 ? 0 : 1;
    ds.labels[v] = y;
    for (Eigen::Index j = 0; j < 4; ++j)
      ds.features(v, j) = (y == 0 ? 0.8 : -0.8) * (j % 2 ? 1.0 : -1.0) + noise(rng);
  }
  ds.num_classes = 2;
  for (NodeId v = 0; v < n; ++v) {
    if (v % 4 == 3)
      ds.val_idx.push_back(v);
    else if (v % 4 == 2)
      ds.test_idx.push_back(v);
    else
      ds.train_idx.push_back(v);
  }
  ds.feature_range = {-1.0, 1.0};
  return ds;
}

double train_accuracy(const Model& m, const Dataset& ds) {
  auto pred = predict_labels(m, ds);
  std::int64_t ok = 0;
  for (NodeId v : ds.train_idx)
    if (pred.labels[static_cast<std::size_t>(v)] == ds.labels[static_cast<std::size_t>(v)]) ++ok;
  return static_cast<double>(ok) / static_cast<double>(ds.train_idx.size());
}

}  // namespace

TEST_CASE("separable data trains to >= 0.99 within 200 epochs") {
  auto ds = separable_dataset(3);
  ModelSpec spec;
  spec.hidden_dims = {8};
  spec.dropout_rate = 0.0;
  TrainConfig tc;
  tc.epochs = 200;
  tc.adam.lr = 0.01;
  tc.seed = 1;
  auto result = train(spec, ds, tc);
  CHECK(train_accuracy(result.model, ds) >= 0.99);
}

TEST_CASE("epochs=0 rejected") {
  auto ds = separable_dataset(4);
  TrainConfig tc;
  tc.epochs = 0;
  CHECK_THROWS_AS(train(ModelSpec{}, ds, tc), ModelError);
}

TEST_CASE("training is deterministic per seed") {
  auto ds = separable_dataset(5);
  ModelSpec spec;
  spec.hidden_dims = {6};
  TrainConfig tc;
  tc.epochs = 60;
  tc.seed = 9;
  auto a = train(spec, ds, tc);
  auto b = train(spec, ds, tc);
  REQUIRE(a.model.layers.size() == b.model.layers.size());
  for (std::size_t i = 0; i < a.model.layers.size(); ++i)
    CHECK((a.model.layers[i].weight - b.model.layers[i].weight).cwiseAbs().maxCoeff() == 0.0);
  tc.seed = 10;
  auto c = train(spec, ds, tc);
  CHECK((a.model.layers[0].weight - c.model.layers[0].weight).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("trained model beats chance on its train split") {
  auto ds = separable_dataset(6);
  ModelSpec spec;
  spec.hidden_dims = {6};
  TrainConfig tc;
  tc.epochs = 100;
  tc.adam.lr = 0.01;
  auto result = train(spec, ds, tc);
  CHECK(train_accuracy(result.model, ds) > 1.0 / ds.num_classes);
}

TEST_CASE("empty splits rejected") {
  auto ds = separable_dataset(7);
  ds.val_idx.clear();
  CHECK_THROWS_AS(train(ModelSpec{}, ds, TrainConfig{}), ModelError);
}
