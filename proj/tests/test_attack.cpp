#include <cmath>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "support/oracles.hpp"
#include "tdg/attack.hpp"
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
  c.opt_epochs = 30;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("defective factor formula") {
  SUBCASE("deg=4, d=100, k1=0.9, k2=0.1 -> 0.07") {
    auto l = defective_factor({4}, 100, 0.9, 0.1);
    CHECK(l[0] == doctest::Approx(0.07).epsilon(1e-12));
  }
  SUBCASE("k1=0, k2=1, deg=5 -> 0.2") {
    auto l = defective_factor({5}, 100, 0.0, 1.0);
    CHECK(l[0] == doctest::Approx(0.2).epsilon(1e-12));
  }
  SUBCASE("strictly decreasing in degree") {
    auto l = defective_factor({1, 2, 3, 4, 10, 50}, 10, 0.9, 0.1);
    for (std::size_t i = 1; i < l.size(); ++i) CHECK(l[i] < l[i - 1]);
  }
  SUBCASE("deg=0 treated as deg=1") {
    auto l = defective_factor({0}, 10, 0.9, 0.1);
    auto l1 = defective_factor({1}, 10, 0.9, 0.1);
    CHECK(l[0] == l1[0]);
  }
}

TEST_CASE("defective score formula") {
  SUBCASE("alpha=0.33, p=1, lambda=0.07 -> 0.07") {
    auto mu = defective_score({1.0}, {0.07}, 0.33);
    CHECK(mu[0] == doctest::Approx(0.07).epsilon(1e-12));
  }
  SUBCASE("alpha=0 ignores p") {
    auto a = defective_score({0.1}, {0.5}, 0.0);
    auto b = defective_score({0.9}, {0.5}, 0.0);
    CHECK(a[0] == b[0]);
    CHECK(a[0] == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("alpha=1, p=0 -> 0") {
    auto mu = defective_score({0.0}, {0.3}, 1.0);
    CHECK(mu[0] == 0.0);
  }
}

TEST_CASE("smooth loss values and flat region") {
  SUBCASE("p=1, r=4 -> 16") {
    auto [l, g] = smooth_loss_value_grad(1.0, 4.0);
    CHECK(l == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(g == doctest::Approx(8.0).epsilon(1e-12));
  }
  SUBCASE("p=e^{-4}, r=4 -> 0 (boundary)") {
    auto [l, g] = smooth_loss_value_grad(std::exp(-4.0), 4.0);
    CHECK(l == 0.0);
    CHECK(g == 0.0);
  }
  SUBCASE("p=e^{-5}, r=4 -> 0 with zero gradient") {
    auto [l, g] = smooth_loss_value_grad(std::exp(-5.0), 4.0);
    CHECK(l == 0.0);
    CHECK(g == 0.0);
  }
  SUBCASE("p=0 handled exactly") {
    auto [l, g] = smooth_loss_value_grad(0.0, 4.0);
    CHECK(l == 0.0);
    CHECK(g == 0.0);
  }
  SUBCASE("continuity at the boundary") {
    const double p = std::exp(-4.0);
    auto [l, g] = smooth_loss_value_grad(p * (1 + 1e-9), 4.0);
    CHECK(l < 1e-15);
    CHECK(g < 1e-6);
  }
}

TEST_CASE("inverse KL loss") {
  CHECK(inverse_kl_value_grad(1.0).first == 0.0);
  CHECK(inverse_kl_value_grad(std::exp(-2.0)).first == doctest::Approx(-2.0).epsilon(1e-12));
  // gradient 1/p grows as p -> 0
  CHECK(inverse_kl_value_grad(1e-3).second == doctest::Approx(1e3).epsilon(1e-9));
  CHECK(inverse_kl_value_grad(1e-6).second > inverse_kl_value_grad(1e-3).second);
  // floored below 1e-12
  CHECK(std::isfinite(inverse_kl_value_grad(0.0).first));
}

TEST_CASE("smoothmap and clamp") {
  CHECK(smoothmap(0.0, -1.0, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(smoothmap(M_PI / 2, -1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(clamp_map(2.0, -1.0, 1.0) == 1.0);
  CHECK(clamp_map(0.3, -1.0, 1.0) == 0.3);
  CHECK(clamp_map(-5.0, -1.0, 1.0) == -1.0);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000000; ++i) {
    const double x = u(rng);
    const double s = smoothmap(x, -0.5, 2.0);
    CHECK(s >= -0.5);
    CHECK(s <= 2.0);
  }
  // gradient magnitude bound
  for (int i = 0; i < 1000; ++i)
    CHECK(std::abs(smoothmap_derivative(u(rng), -0.5, 2.0)) <= 1.25 + 1e-15);
}

TEST_CASE("select_defective_edges") {
  SUBCASE("round-robin assignment of top targets") {
    auto edges = select_defective_edges({0.4, 0.3, 0.2, 0.1}, {10, 11, 12, 13}, 2, 2);
    REQUIRE(edges.size() == 4);
    CHECK(edges[0] == std::pair<NodeId, NodeId>{10, 0});
    CHECK(edges[1] == std::pair<NodeId, NodeId>{11, 1});
    CHECK(edges[2] == std::pair<NodeId, NodeId>{12, 0});
    CHECK(edges[3] == std::pair<NodeId, NodeId>{13, 1});
  }
  SUBCASE("equal mu selects smallest node ids") {
    auto edges = select_defective_edges({0.5, 0.5, 0.5, 0.5, 0.5}, {7, 3, 9, 1, 5}, 1, 2);
    REQUIRE(edges.size() == 2);
    CHECK(edges[0].first == 1);
    CHECK(edges[1].first == 3);
  }
  SUBCASE("d_eff=1 gives each injected node exactly one top target") {
    auto edges = select_defective_edges({0.1, 0.9, 0.5}, {0, 1, 2}, 2, 1);
    REQUIRE(edges.size() == 2);
    CHECK(edges[0] == std::pair<NodeId, NodeId>{1, 0});
    CHECK(edges[1] == std::pair<NodeId, NodeId>{2, 1});
  }
  SUBCASE("b_seq=0 gives empty list") {
    CHECK(select_defective_edges({0.5}, {0}, 0, 3).empty());
  }
  SUBCASE("target exhaustion shares targets without duplicate pairs") {
    auto edges = select_defective_edges({0.9, 0.1}, {4, 5}, 3, 2);
    std::set<std::pair<NodeId, NodeId>> unique(edges.begin(), edges.end());
    CHECK(unique.size() == edges.size());
    CHECK(edges.size() == 6);  // 2 targets x 3 injected nodes
    std::map<NodeId, int> load;
    for (auto [t, i] : edges) load[i]++;
    for (auto [i, c] : load) CHECK(c <= 2);
  }
  SUBCASE("scaling all lambda leaves the selected target set unchanged") {
    std::vector<double> mu{0.4, 0.1, 0.3, 0.2, 0.05};
    std::vector<NodeId> targets{0, 1, 2, 3, 4};
    auto a = select_defective_edges(mu, targets, 2, 2);
    for (auto& m : mu) m *= 17.5;
    auto b = select_defective_edges(mu, targets, 2, 2);
    std::set<NodeId> sa, sb;
    for (auto [t, i] : a) sa.insert(t);
    for (auto [t, i] : b) sb.insert(t);
    CHECK(sa == sb);
  }
}

TEST_CASE("correct_probability on a uniform model") {
  auto ds = small_sbm(1);
  ModelSpec spec;
  spec.architecture = Architecture::sgc;
  spec.hidden_dims = {};
  auto m = init_model(spec, ds.feature_dim(), ds.num_classes, 0);
  m.layers[0].weight.setZero();
  m.layers[0].bias.setZero();
  std::vector<int> labels(static_cast<std::size_t>(ds.num_nodes()), 1);
  auto p = correct_probability(m, ds, labels, ds.test_idx);
  for (double x : p) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("correct probability of correctly classified nodes exceeds chance") {
  auto ds = small_sbm(2);
  auto m = quick_surrogate(ds, 2);
  auto pred = predict_labels(m, ds);
  auto p = correct_probability(m, ds, pred.labels, ds.test_idx);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] > 1.0 / ds.num_classes);
}

TEST_CASE("optimize_features with opt_epochs=0 returns mapped init") {
  auto ds = small_sbm(3);
  auto m = quick_surrogate(ds, 3);
  auto labels = predict_labels(m, ds).labels;

  Injection inj;
  inj.n_injected = 2;
  inj.cross_edges = {{ds.test_idx[0], 0}, {ds.test_idx[1], 1}};
  Matrix raw = Matrix::Random(2, ds.feature_dim());
  Matrix raw_copy = raw;
  inj.injected_features = apply_feature_map(raw, FeatureMap::smoothmap, -1.0, 1.0);
  auto attacked = apply_injection(ds, inj);

  AttackConfig c = fast_config(0);
  c.opt_epochs = 0;
  auto [before, after] =
      optimize_features(m, attacked, ds.num_nodes(), ds.test_idx, labels, c, {-1.0, 1.0}, raw);
  CHECK((raw - raw_copy).cwiseAbs().maxCoeff() == 0.0);
  CHECK(before == after);
}

TEST_CASE("optimization does not increase the smooth loss (5 seeds)") {
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto ds = small_sbm(seed + 10);
    auto m = quick_surrogate(ds, seed);
    auto labels = predict_labels(m, ds).labels;
    Injection inj;
    inj.n_injected = 3;
    for (NodeId i = 0; i < 3; ++i)
      inj.cross_edges.emplace_back(ds.test_idx[static_cast<std::size_t>(i) * 2], i);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix raw(3, ds.feature_dim());
    for (Eigen::Index i = 0; i < raw.rows(); ++i)
      for (Eigen::Index j = 0; j < raw.cols(); ++j) raw(i, j) = g(rng);
    inj.injected_features = apply_feature_map(raw, FeatureMap::smoothmap, -1.0, 1.0);
    auto attacked = apply_injection(ds, inj);
    auto [before, after] = optimize_features(m, attacked, ds.num_nodes(), ds.test_idx, labels,
                                             fast_config(seed), {-1.0, 1.0}, raw);
    if (after <= before) ++improved;
  }
  CHECK(improved == 5);
}

TEST_CASE("tdgia with b=0 returns an empty injection") {
  auto ds = small_sbm(4);
  auto m = quick_surrogate(ds, 4);
  Budget b{.max_nodes = 0, .max_degree = 3, .feature_bounds = {-1.0, 1.0}};
  auto result = tdgia_attack(m, ds, b, fast_config(0));
  CHECK(result.injection.empty());
  CHECK(result.injection.cross_edges.empty());
}

TEST_CASE("tdgia batch count is ceil(1/batch_fraction) at default 0.2") {
  auto ds = small_sbm(5);
  auto m = quick_surrogate(ds, 5);
  Budget b{.max_nodes = 10, .max_degree = 2, .feature_bounds = {-1.0, 1.0}};
  AttackConfig c = fast_config(1);
  c.opt_epochs = 5;
  auto result = tdgia_attack(m, ds, b, c);
  CHECK(result.log.size() == 5);
  CHECK(result.injection.n_injected == 10);
}

TEST_CASE("tdgia output is admissible and deterministic per seed") {
  auto ds = small_sbm(6);
  auto m = quick_surrogate(ds, 6);
  Budget b{.max_nodes = 6, .max_degree = 3, .feature_bounds = {-1.0, 1.0}};
  AttackConfig c = fast_config(21);
  c.opt_epochs = 10;
  auto r1 = tdgia_attack(m, ds, b, c);
  auto r2 = tdgia_attack(m, ds, b, c);
  CHECK(validate_injection(r1.injection, b, ds.num_nodes()).empty());
  CHECK(r1.injection.cross_edges == r2.injection.cross_edges);
  CHECK((r1.injection.injected_features - r2.injection.injected_features)
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("alpha=0 selection depends only on degrees") {
  auto ds = small_sbm(7);
  auto m1 = quick_surrogate(ds, 7);
  auto m2 = quick_surrogate(ds, 77);  // different predictions, same degrees
  Budget b{.max_nodes = 4, .max_degree = 2, .feature_bounds = {-1.0, 1.0}};
  AttackConfig c = fast_config(3);
  c.alpha = 0.0;
  c.opt_epochs = 0;
  auto r1 = tdgia_attack(m1, ds, b, c);
  auto r2 = tdgia_attack(m2, ds, b, c);
  std::set<NodeId> t1, t2;
  for (auto [t, i] : r1.injection.cross_edges) t1.insert(t);
  for (auto [t, i] : r2.injection.cross_edges) t2.insert(t);
  CHECK(t1 == t2);
}

TEST_CASE("effective degree cap below budget is honored") {
  auto ds = small_sbm(8);
  auto m = quick_surrogate(ds, 8);
  Budget b{.max_nodes = 4, .max_degree = 5, .feature_bounds = {-1.0, 1.0}};
  AttackConfig c = fast_config(2);
  c.opt_epochs = 0;
  c.effective_degree_cap = 2;
  auto r = tdgia_attack(m, ds, b, c);
  std::map<NodeId, int> deg;
  for (auto [t, i] : r.injection.cross_edges) deg[i]++;
  for (auto [i, d] : deg) CHECK(d <= 2);
}
