#pragma once

#include <functional>
#include <optional>

#include "tdg/grad.hpp"
#include "tdg/injection.hpp"
#include "tdg/model.hpp"

namespace tdg {

struct AttackConfig {
  double k1 = 0.9;
  double k2 = 0.1;
  double alpha = 0.33;
  double r = 4.0;
  double batch_fraction = 0.2;
  double opt_lr = 1.0;
  int opt_epochs = 2000;
  FeatureMap feature_map = FeatureMap::smoothmap;
  LossMode loss_mode = LossMode::smooth;
  double init_sigma = 1.0;
  std::uint64_t seed = 0;
  std::optional<std::int64_t> effective_degree_cap;  // defaults to Budget.max_degree

  void validate(const Budget& budget) const;
  std::int64_t degree_cap(const Budget& budget) const {
    return effective_degree_cap.value_or(budget.max_degree);
  }
};

struct NodeScores {
  std::vector<double> p;       // correct probability per target
  std::vector<double> lambda;  // defective factor
  std::vector<double> mu;      // defective score
};

/// lambda_v = k1 / sqrt(deg(v) * d) + k2 / deg(v); isolated targets are
/// treated as degree 1.
std::vector<double> defective_factor(const std::vector<std::int64_t>& target_degrees,
                                     std::int64_t d, double k1, double k2);

/// Softmax probability the surrogate assigns to each target's surrogate
/// label on the current (possibly partially attacked) graph.
std::vector<double> correct_probability(const Model& model, const Dataset& current,
                                        const std::vector<int>& surrogate_labels,
                                        const std::vector<NodeId>& targets);

/// mu_v = (alpha * p_v + (1 - alpha)) * lambda_v
std::vector<double> defective_score(const std::vector<double>& p,
                                    const std::vector<double>& lambda, double alpha);

/// Picks the b_seq * d_eff targets with highest mu (ties toward the smaller
/// node id) and assigns them round-robin in descending-mu order, so each
/// injected node receives at most d_eff distinct targets and target loads
/// differ by at most one. When targets run short, injected nodes may share
/// a target but a (target, injected) pair never repeats.
std::vector<std::pair<NodeId, NodeId>> select_defective_edges(
    const std::vector<double>& mu, const std::vector<NodeId>& targets, NodeId b_seq,
    std::int64_t d_eff);

struct BatchLogEntry {
  int batch = 0;
  double mean_p = 0.0;
  double loss_before = 0.0;
  double loss_after = 0.0;
  NodeId nodes_injected = 0;
  double wall_seconds = 0.0;
};

struct AttackResult {
  Injection injection;
  std::vector<BatchLogEntry> log;
};

/// Adam descent on the raw feature variables of all injected nodes so far;
/// features seen by the model each step are feature_map(raw_vars). Returns
/// final (loss_before, loss_after); raw_vars is updated in place.
std::pair<double, double> optimize_features(const Model& model, const Dataset& attacked,
                                            NodeId n_original,
                                            const std::vector<NodeId>& targets,
                                            const std::vector<int>& surrogate_labels,
                                            const AttackConfig& config,
                                            std::pair<double, double> bounds,
                                            Matrix& raw_vars);

/// Sequential topological-defective injection: per batch, recompute p, lambda
/// and mu on the current attacked graph, connect a batch of injected nodes to
/// the highest-mu targets, then re-optimize the features of every injected
/// node so far. Targets are the test split. Deterministic per seed.
AttackResult tdgia_attack(const Model& surrogate, const Dataset& ds, const Budget& budget,
                          const AttackConfig& config);

void write_attack_log(const std::vector<BatchLogEntry>& log, const std::string& method,
                      const std::filesystem::path& file);

}  // namespace tdg
