#include <map>
#include <set>

#include "doctest.h"
#include "tdg/baselines.hpp"
#include "tdg/train.hpp"

using namespace tdg;

namespace {

Dataset small_sbm(std::uint64_t seed) {
  SbmParams p;
  p.nodes = 60;
  p.blocks = 3;
  p.p_in = 0.25;
  p.p_out = 0.02;
  p.feature_dim = 6;
  return synth_sbm(p, seed);
}

Model quick_surrogate(const Dataset& ds, std::uint64_t seed) {
  ModelSpec spec;
  spec.hidden_dims = {8};
  TrainConfig tc;
  tc.epochs = 80;
  tc.adam.lr = 0.01;
  tc.seed = seed;
  return train(spec, ds, tc).model;
}

AttackConfig fast_config(std::uint64_t seed) {
  AttackConfig c;
  c.opt_epochs = 10;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("fgsm with b=0 returns empty injection") {
  auto ds = small_sbm(1);
  auto m = quick_surrogate(ds, 1);
  Budget b{.max_nodes = 0, .max_degree = 2, .feature_bounds = {-1.0, 1.0}};
  auto r = fgsm_attack(m, ds, b, fast_config(0));
  CHECK(r.injection.empty());
}

TEST_CASE("fgsm injects everything in one shot and is admissible") {
  auto ds = small_sbm(2);
  auto m = quick_surrogate(ds, 2);
  Budget b{.max_nodes = 6, .max_degree = 3, .feature_bounds = {-1.0, 1.0}};
  auto r = fgsm_attack(m, ds, b, fast_config(1));
  CHECK(r.log.size() == 1);
  CHECK(r.injection.n_injected == 6);
  CHECK(validate_injection(r.injection, b, ds.num_nodes()).empty());
  // no duplicate (target, injected) pairs
  std::set<std::pair<NodeId, NodeId>> unique(r.injection.cross_edges.begin(),
                                             r.injection.cross_edges.end());
  CHECK(unique.size() == r.injection.cross_edges.size());
}

TEST_CASE("fgsm edge endpoints are uniform over targets (chi-square)") {
  auto ds = small_sbm(3);
  auto m = quick_surrogate(ds, 3);
  Budget b{.max_nodes = 50, .max_degree = 5, .feature_bounds = {-1.0, 1.0}};
  std::map<NodeId, double> counts;
  double total = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    AttackConfig c = fast_config(seed);
    c.opt_epochs = 0;
    auto r = fgsm_attack(m, ds, b, c);
    for (auto [t, i] : r.injection.cross_edges) {
      counts[t] += 1;
      total += 1;
    }
  }
  CHECK(total >= 10000);
  const double k = static_cast<double>(ds.test_idx.size());
  const double expected = total / k;
  double chi2 = 0;
  for (NodeId t : ds.test_idx) {
    const double diff = counts[t] - expected;
    chi2 += diff * diff / expected;
  }
  // dof = |targets|-1; for dof around 11 the alpha=0.01 critical value is
  // about dof + 3.04*sqrt(2*dof)
  const double dof = k - 1;
  CHECK(chi2 < dof + 3.1 * std::sqrt(2 * dof));
}

TEST_CASE("afgsm with batch_fraction=1 matches fgsm topology policy (one batch)") {
  auto ds = small_sbm(4);
  auto m = quick_surrogate(ds, 4);
  Budget b{.max_nodes = 5, .max_degree = 2, .feature_bounds = {-1.0, 1.0}};
  AttackConfig c = fast_config(5);
  c.batch_fraction = 1.0;
  c.opt_epochs = 0;
  auto r = afgsm_attack(m, ds, b, c);
  CHECK(r.log.size() == 1);
  CHECK(r.injection.n_injected == 5);
}

TEST_CASE("afgsm batches exclude already-broken targets") {
  auto ds = small_sbm(5);
  auto m = quick_surrogate(ds, 5);
  Budget b{.max_nodes = 10, .max_degree = 4, .feature_bounds = {-1.0, 1.0}};
  AttackConfig c = fast_config(6);
  c.opt_epochs = 40;
  auto r = afgsm_attack(m, ds, b, c);
  CHECK(r.log.size() == 5);
  CHECK(validate_injection(r.injection, b, ds.num_nodes()).empty());

  // second batch can only wire to targets still correctly classified after
  // batch one; reconstruct that set and check containment
  Injection first_batch;
  first_batch.n_injected = 2;
  const auto clean_labels = predict_labels(m, ds).labels;
  for (auto [t, i] : r.injection.cross_edges)
    if (i < 2) first_batch.cross_edges.emplace_back(t, i);
  first_batch.injected_features = r.injection.injected_features.topRows(2);
  auto after_first = apply_injection(ds, first_batch);
  auto pred = predict_labels(m, after_first);
  std::set<NodeId> alive;
  for (NodeId v : ds.test_idx)
    if (pred.labels[static_cast<std::size_t>(v)] == clean_labels[static_cast<std::size_t>(v)])
      alive.insert(v);
  if (!alive.empty())
    for (auto [t, i] : r.injection.cross_edges)
      if (i >= 2 && i < 4) CHECK(alive.count(t) == 1);
}

TEST_CASE("uniform policy gives equal target degree increments when divisible") {
  auto ds = small_sbm(6);
  auto m = quick_surrogate(ds, 6);
  const auto n_targets = static_cast<NodeId>(ds.test_idx.size());
  // pick b*d = a multiple of |targets|
  Budget b{.max_nodes = n_targets, .max_degree = 2, .feature_bounds = {-1.0, 1.0}};
  AttackConfig c = fast_config(7);
  c.opt_epochs = 0;
  c.batch_fraction = 1.0;
  auto r = edge_policy_ablation(EdgePolicy::uniform, m, ds, b, c);
  std::map<NodeId, int> hits;
  for (auto [t, i] : r.injection.cross_edges) hits[t]++;
  REQUIRE(hits.size() == static_cast<std::size_t>(n_targets));
  for (auto [t, h] : hits) CHECK(h == 2);
}

TEST_CASE("random policy is reproducible per seed") {
  auto ds = small_sbm(7);
  auto m = quick_surrogate(ds, 7);
  Budget b{.max_nodes = 4, .max_degree = 3, .feature_bounds = {-1.0, 1.0}};
  auto r1 = edge_policy_ablation(EdgePolicy::random, m, ds, b, fast_config(9));
  auto r2 = edge_policy_ablation(EdgePolicy::random, m, ds, b, fast_config(9));
  CHECK(r1.injection.cross_edges == r2.injection.cross_edges);
  CHECK((r1.injection.injected_features - r2.injection.injected_features)
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("loss mode changes features only, never topology") {
  auto ds = small_sbm(8);
  auto m = quick_surrogate(ds, 8);
  Budget b{.max_nodes = 4, .max_degree = 3, .feature_bounds = {-1.0, 1.0}};
  AttackConfig c = fast_config(11);
  c.loss_mode = LossMode::smooth;
  auto smooth = fgsm_attack(m, ds, b, c);
  c.loss_mode = LossMode::inverse_kl;
  auto ikl = fgsm_attack(m, ds, b, c);
  CHECK(smooth.injection.cross_edges == ikl.injection.cross_edges);
}

TEST_CASE("all baselines pass validation under the shared budget") {
  auto ds = small_sbm(9);
  auto m = quick_surrogate(ds, 9);
  Budget b{.max_nodes = 5, .max_degree = 3, .feature_bounds = {-1.0, 1.0}};
  auto c = fast_config(13);
  std::vector<AttackResult> results;
  results.push_back(fgsm_attack(m, ds, b, c));
  results.push_back(afgsm_attack(m, ds, b, c));
  results.push_back(edge_policy_ablation(EdgePolicy::uniform, m, ds, b, c));
  results.push_back(edge_policy_ablation(EdgePolicy::random, m, ds, b, c));
  for (const auto& r : results)
    CHECK(validate_injection(r.injection, b, ds.num_nodes()).empty());
}
