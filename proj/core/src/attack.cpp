#include "tdg/attack.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "tdg/train.hpp"

namespace tdg {

void AttackConfig::validate(const Budget& budget) const {
  for (double x : {k1, k2, alpha, r, batch_fraction, opt_lr, init_sigma})
    if (!std::isfinite(x)) throw ModelError("attack config: non-finite parameter");
  if (batch_fraction <= 0 || batch_fraction > 1)
    throw ModelError("attack config: batch_fraction must lie in (0,1]");
  if (r <= 0) throw ModelError("attack config: r must be positive");
  if (opt_epochs < 0) throw ModelError("attack config: opt_epochs must be >= 0");
  if (effective_degree_cap && *effective_degree_cap > budget.max_degree)
    throw ModelError("attack config: effective_degree_cap exceeds budget degree");
}

std::vector<double> defective_factor(const std::vector<std::int64_t>& target_degrees,
                                     std::int64_t d, double k1, double k2) {
  if (d < 1) throw ModelError("degree budget must be >= 1");
  std::vector<double> lambda(target_degrees.size());
  for (std::size_t i = 0; i < target_degrees.size(); ++i) {
    const double deg = static_cast<double>(std::max<std::int64_t>(target_degrees[i], 1));
    lambda[i] = k1 / std::sqrt(deg * static_cast<double>(d)) + k2 / deg;
  }
  return lambda;
}

std::vector<double> correct_probability(const Model& model, const Dataset& current,
                                        const std::vector<int>& surrogate_labels,
                                        const std::vector<NodeId>& targets) {
  auto pred = forward(model, current, ForwardMode{});
  std::vector<double> p(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i)
    p[i] = pred.probabilities(targets[i], surrogate_labels[static_cast<std::size_t>(targets[i])]);
  return p;
}

std::vector<double> defective_score(const std::vector<double>& p,
                                    const std::vector<double>& lambda, double alpha) {
  if (p.size() != lambda.size()) throw ModelError("score vector length mismatch");
  std::vector<double> mu(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    mu[i] = (alpha * p[i] + (1.0 - alpha)) * lambda[i];
  return mu;
}

std::vector<std::pair<NodeId, NodeId>> select_defective_edges(
    const std::vector<double>& mu, const std::vector<NodeId>& targets, NodeId b_seq,
    std::int64_t d_eff) {
  if (targets.empty()) throw ModelError("select_defective_edges: no targets");
  if (mu.size() != targets.size()) throw ModelError("mu length mismatch");
  if (b_seq <= 0) return {};

  // descending mu, ties toward the smaller node id
  std::vector<std::size_t> order(targets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (mu[a] != mu[b]) return mu[a] > mu[b];
    return targets[a] < targets[b];
  });

  const std::int64_t want = static_cast<std::int64_t>(b_seq) * d_eff;
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<std::int64_t> load(static_cast<std::size_t>(b_seq), 0);
  std::set<std::pair<NodeId, NodeId>> seen;

  NodeId inj = 0;
  std::int64_t assigned = 0;
  // cycle over targets in descending-mu order until the quota is met or no
  // admissible (target, injected) pair remains
  bool progress = true;
  while (assigned < want && progress) {
    progress = false;
    for (std::size_t k = 0; k < order.size() && assigned < want; ++k) {
      const NodeId t = targets[order[k]];
      // find the next injected node with spare capacity
      NodeId tries = 0;
      while (tries < b_seq &&
             (load[inj] >= d_eff || seen.count({t, inj}))) {
        inj = (inj + 1) % b_seq;
        ++tries;
      }
      if (tries == b_seq) continue;
      edges.emplace_back(t, inj);
      seen.insert({t, inj});
      load[inj]++;
      inj = (inj + 1) % b_seq;
      ++assigned;
      progress = true;
    }
  }
  return edges;
}

std::pair<double, double> optimize_features(const Model& model, const Dataset& attacked,
                                            NodeId n_original,
                                            const std::vector<NodeId>& targets,
                                            const std::vector<int>& surrogate_labels,
                                            const AttackConfig& config,
                                            std::pair<double, double> bounds,
                                            Matrix& raw_vars) {
  auto adj = normalize_adjacency(attacked.graph, model.spec.norm_scheme());
  LossSpec loss{config.loss_mode, config.r};

  auto eval = [&](const Matrix& rv) {
    return grad_injected_features_adj(model, adj, attacked.features, n_original, targets,
                                      surrogate_labels, loss, config.feature_map, bounds, rv);
  };

  const double loss_before = eval(raw_vars).loss;
  Adam opt(AdamConfig{.lr = config.opt_lr});
  double last = loss_before;
  for (int epoch = 0; epoch < config.opt_epochs; ++epoch) {
    auto fg = eval(raw_vars);
    if (!std::isfinite(fg.loss))
      throw NumericalError("non-finite attack loss at optimization epoch " + std::to_string(epoch));
    last = fg.loss;
    opt.begin_step();
    opt.step(0, raw_vars, fg.grad);
  }
  if (config.opt_epochs > 0) last = eval(raw_vars).loss;
  return {loss_before, last};
}

AttackResult tdgia_attack(const Model& surrogate, const Dataset& ds, const Budget& budget,
                          const AttackConfig& config) {
  budget.validate();
  config.validate(budget);
  const std::vector<NodeId>& targets = ds.test_idx;
  if (targets.empty()) throw ModelError("tdgia_attack: empty target set (test split)");

  // surrogate labels fixed once on the clean graph
  const auto surrogate_labels = predict_labels(surrogate, ds).labels;

  const NodeId n = ds.num_nodes();
  const std::int64_t d_eff = config.degree_cap(budget);
  const NodeId batch_quota =
      static_cast<NodeId>(std::ceil(config.batch_fraction * static_cast<double>(budget.max_nodes)));

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, config.init_sigma);

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

    std::vector<std::int64_t> target_degrees(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i)
      target_degrees[i] = current.graph.degree(targets[i]);

    auto p = correct_probability(surrogate, current, surrogate_labels, targets);
    auto lambda = defective_factor(target_degrees, d_eff, config.k1, config.k2);
    auto mu = defective_score(p, lambda, config.alpha);

    auto batch_edges = select_defective_edges(mu, targets, b_seq, d_eff);
    const NodeId base = inj.n_injected;
    for (auto& [t, local] : batch_edges) inj.cross_edges.emplace_back(t, base + local);
    inj.n_injected += b_seq;

    Matrix new_raw(b_seq, ds.feature_dim());
    for (Eigen::Index i = 0; i < new_raw.rows(); ++i)
      for (Eigen::Index j = 0; j < new_raw.cols(); ++j) new_raw(i, j) = gauss(rng);
    raw_vars.conservativeResize(inj.n_injected, Eigen::NoChange);
    raw_vars.bottomRows(b_seq) = new_raw;

    // topology for this round; features below are re-optimized for all
    // injected nodes so far
    inj.injected_features =
        apply_feature_map(raw_vars, config.feature_map, budget.feature_bounds.first,
                          budget.feature_bounds.second);
    Dataset attacked = apply_injection(ds, inj);
    auto [before, after] =
        optimize_features(surrogate, attacked, n, targets, surrogate_labels, config,
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

void write_attack_log(const std::vector<BatchLogEntry>& log, const std::string& method,
                      const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw ModelError("cannot write " + file.string());
  out << "method,batch,mean_p,loss_before,loss_after,nodes_injected,wall_seconds\n";
  char buf[256];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%.17g,%.17g,%.17g,%" PRId64 ",%.3f\n",
                  method.c_str(), e.batch, e.mean_p, e.loss_before, e.loss_after,
                  static_cast<std::int64_t>(e.nodes_injected), e.wall_seconds);
    out << buf;
  }
}

}  // namespace tdg
