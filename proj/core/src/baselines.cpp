#include "tdg/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <set>

namespace tdg {

namespace {

// b_seq injected nodes, each wired to d_eff targets drawn uniformly without
// replacement; duplicate (target, injected) pairs are never produced.
std::vector<std::pair<NodeId, NodeId>> random_edges(const std::vector<NodeId>& pool,
                                                    NodeId b_seq, std::int64_t d_eff,
                                                    std::mt19937_64& rng) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<NodeId> scratch = pool;
  for (NodeId i = 0; i < b_seq; ++i) {
    std::shuffle(scratch.begin(), scratch.end(), rng);
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(d_eff), scratch.size());
    for (std::size_t k = 0; k < take; ++k) edges.emplace_back(scratch[k], i);
  }
  return edges;
}

struct SequentialPlan {
  // returns (target, local injected index) pairs for a batch of b_seq nodes
  std::function<std::vector<std::pair<NodeId, NodeId>>(const Dataset& current, NodeId b_seq)>
      choose_edges;
  LossMode loss_mode;
  bool single_shot = false;
};

AttackResult run_sequential(const Model& surrogate, const Dataset& ds, const Budget& budget,
                            const AttackConfig& config, const SequentialPlan& plan) {
  budget.validate();
  config.validate(budget);
  if (ds.test_idx.empty()) throw ModelError("attack: empty target set (test split)");

  const auto surrogate_labels = predict_labels(surrogate, ds).labels;
  const NodeId n = ds.num_nodes();
  const NodeId batch_quota =
      plan.single_shot
          ? budget.max_nodes
          : static_cast<NodeId>(
                std::ceil(config.batch_fraction * static_cast<double>(budget.max_nodes)));

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, config.init_sigma);

  AttackConfig opt_config = config;
  opt_config.loss_mode = plan.loss_mode;

  AttackResult result;
  Injection& inj = result.injection;
  inj.injected_features.resize(0, ds.feature_dim());
  Matrix raw_vars(0, ds.feature_dim());

  Dataset current = ds;
  NodeId remaining = budget.max_nodes;
  int batch_idx = 0;
  while (remaining > 0) {
    const auto t0 = std::chrono::steady_clock::now();
    const NodeId b_seq = std::min(batch_quota, remaining);

    auto p = correct_probability(surrogate, current, surrogate_labels, ds.test_idx);

    auto batch_edges = plan.choose_edges(current, b_seq);
    const NodeId base = inj.n_injected;
    for (auto& [t, local] : batch_edges) inj.cross_edges.emplace_back(t, base + local);
    inj.n_injected += b_seq;

    raw_vars.conservativeResize(inj.n_injected, Eigen::NoChange);
    for (Eigen::Index i = base; i < inj.n_injected; ++i)
      for (Eigen::Index j = 0; j < raw_vars.cols(); ++j) raw_vars(i, j) = gauss(rng);

    inj.injected_features =
        apply_feature_map(raw_vars, config.feature_map, budget.feature_bounds.first,
                          budget.feature_bounds.second);
    Dataset attacked = apply_injection(ds, inj);
    auto [before, after] =
        optimize_features(surrogate, attacked, n, ds.test_idx, surrogate_labels, opt_config,
                          budget.feature_bounds, raw_vars);
    inj.injected_features =
        apply_feature_map(raw_vars, config.feature_map, budget.feature_bounds.first,
                          budget.feature_bounds.second);
    current = apply_injection(ds, inj);

    remaining -= b_seq;
    const auto t1 = std::chrono::steady_clock::now();
    result.log.push_back({batch_idx++,
                          std::accumulate(p.begin(), p.end(), 0.0) /
                              static_cast<double>(p.size()),
                          before, after, inj.n_injected,
                          std::chrono::duration<double>(t1 - t0).count()});
  }

  auto violations = validate_injection(inj, budget, n);
  if (!violations.empty())
    throw ModelError("internal error: attack emitted inadmissible injection: " +
                     violations.front().message);
  return result;
}

}  // namespace

AttackResult fgsm_attack(const Model& surrogate, const Dataset& ds, const Budget& budget,
                         const AttackConfig& config) {
  std::mt19937_64 edge_rng(config.seed ^ 0x9e3779b97f4a7c15ull);
  const std::int64_t d_eff = config.degree_cap(budget);
  SequentialPlan plan;
  plan.single_shot = true;
  plan.loss_mode = config.loss_mode;
  plan.choose_edges = [&ds, d_eff, &edge_rng](const Dataset&, NodeId b_seq) {
    return random_edges(ds.test_idx, b_seq, d_eff, edge_rng);
  };
  return run_sequential(surrogate, ds, budget, config, plan);
}

AttackResult afgsm_attack(const Model& surrogate, const Dataset& ds, const Budget& budget,
                          const AttackConfig& config) {
  std::mt19937_64 edge_rng(config.seed ^ 0x9e3779b97f4a7c15ull);
  const std::int64_t d_eff = config.degree_cap(budget);
  SequentialPlan plan;
  plan.loss_mode = config.loss_mode;
  plan.choose_edges = [&, d_eff](const Dataset& current, NodeId b_seq) {
    // only targets the surrogate still gets right remain eligible
    auto pred = predict_labels(surrogate, current);
    const auto clean_labels = predict_labels(surrogate, ds).labels;
    std::vector<NodeId> alive;
    for (NodeId v : ds.test_idx)
      if (pred.labels[static_cast<std::size_t>(v)] ==
          clean_labels[static_cast<std::size_t>(v)])
        alive.push_back(v);
    if (alive.empty()) alive = ds.test_idx;
    return random_edges(alive, b_seq, d_eff, edge_rng);
  };
  return run_sequential(surrogate, ds, budget, config, plan);
}

EdgePolicy edge_policy_from_name(const std::string& name) {
  if (name == "defective") return EdgePolicy::defective;
  if (name == "uniform") return EdgePolicy::uniform;
  if (name == "random") return EdgePolicy::random;
  throw ModelError("unknown edge policy '" + name + "'");
}

std::string edge_policy_name(EdgePolicy p) {
  switch (p) {
    case EdgePolicy::defective: return "defective";
    case EdgePolicy::uniform: return "uniform";
    case EdgePolicy::random: return "random";
  }
  throw ModelError("unknown edge policy");
}

AttackResult edge_policy_ablation(EdgePolicy policy, const Model& surrogate,
                                  const Dataset& ds, const Budget& budget,
                                  const AttackConfig& config) {
  AttackConfig smooth_config = config;
  smooth_config.loss_mode = LossMode::smooth;
  if (policy == EdgePolicy::defective) return tdgia_attack(surrogate, ds, budget, smooth_config);

  const std::int64_t d_eff = config.degree_cap(budget);
  SequentialPlan plan;
  plan.loss_mode = LossMode::smooth;

  if (policy == EdgePolicy::uniform) {
    // round-robin over targets sorted by node id, cursor persists across batches
    auto sorted = ds.test_idx;
    std::sort(sorted.begin(), sorted.end());
    auto cursor = std::make_shared<std::size_t>(0);
    plan.choose_edges = [sorted, d_eff, cursor](const Dataset&, NodeId b_seq) {
      std::vector<std::pair<NodeId, NodeId>> edges;
      std::set<std::pair<NodeId, NodeId>> seen;
      for (NodeId i = 0; i < b_seq; ++i)
        for (std::int64_t k = 0; k < d_eff; ++k) {
          const NodeId t = sorted[*cursor % sorted.size()];
          ++*cursor;
          if (seen.insert({t, i}).second) edges.emplace_back(t, i);
        }
      return edges;
    };
  } else {
    auto edge_rng = std::make_shared<std::mt19937_64>(config.seed ^ 0x9e3779b97f4a7c15ull);
    plan.choose_edges = [&ds, d_eff, edge_rng](const Dataset&, NodeId b_seq) {
      std::vector<std::pair<NodeId, NodeId>> edges;
      std::set<std::pair<NodeId, NodeId>> seen;
      std::uniform_int_distribution<std::size_t> pick(0, ds.test_idx.size() - 1);
      for (NodeId i = 0; i < b_seq; ++i) {
        std::int64_t placed = 0;
        std::size_t attempts = 0;
        const std::size_t max_attempts = 50 * static_cast<std::size_t>(d_eff) + 100;
        while (placed < d_eff && attempts++ < max_attempts) {
          const NodeId t = ds.test_idx[pick(*edge_rng)];
          if (seen.insert({t, i}).second) {
            edges.emplace_back(t, i);
            ++placed;
          }
        }
      }
      return edges;
    };
  }
  return run_sequential(surrogate, ds, budget, smooth_config, plan);
}

}  // namespace tdg
