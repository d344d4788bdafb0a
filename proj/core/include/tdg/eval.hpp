#pragma once

#include <functional>
#include <map>
#include <string>

#include "tdg/injection.hpp"
#include "tdg/model.hpp"

namespace tdg {

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Descending nonnegative weights summing to 1, highest weight for the most
/// robust (highest-accuracy) defense.
struct MetricWeights {
  std::vector<double> w;

  void validate() const;
  static MetricWeights default7();   // 7-model vector
  static MetricWeights default12();  // 12-model vector
};

struct AggregateScores {
  double s_avg = 0.0;
  double s_top3 = 0.0;
  double s_weighted = 0.0;
};

/// Fraction of targets whose argmax prediction equals the true label.
double accuracy(const Prediction& pred, const std::vector<int>& true_labels,
                const std::vector<NodeId>& targets);

/// Scores are sorted descending internally before weighting. s_top3 is the
/// mean of the three largest by default; `top3_over_n` divides the top-3 sum
/// by n instead.
AggregateScores aggregate(const std::vector<double>& scores, const MetricWeights& weights,
                          bool top3_over_n = false);

struct NamedModel {
  std::string name;
  Model model;
};

struct EvalReport {
  std::string method;
  std::uint64_t seed = 0;
  NodeId budget_nodes = 0;
  std::int64_t budget_degree = 0;
  std::vector<std::string> model_names;
  std::vector<double> clean_accuracy;
  std::vector<double> attacked_accuracy;
  AggregateScores clean;
  AggregateScores attacked;
  double reduction = 0.0;  // clean s_weighted - attacked s_weighted
};

/// Applies the injection once and evaluates every fixed defense in eval
/// mode (evasion setting: defenses are never retrained).
EvalReport evaluate_attack(const std::vector<NamedModel>& defenses, const Dataset& clean,
                           const Injection& injection, const MetricWeights& weights,
                           bool top3_over_n = false);

using AttackFn = std::function<Injection(const Model& surrogate, const Dataset&,
                                         const Budget&, std::uint64_t seed)>;

struct TransferMatrix {
  std::vector<std::string> surrogate_names;
  std::vector<std::string> defense_names;
  Matrix reductions;  // rows = surrogates, cols = defenses; per-defense accuracy drop
};

TransferMatrix transfer_matrix(const std::vector<NamedModel>& surrogates,
                               const std::vector<NamedModel>& defenses,
                               const AttackFn& attack, const Dataset& ds,
                               const Budget& budget, std::uint64_t seed);

void emit_report(const EvalReport& report, const std::filesystem::path& dir);
void emit_reports_csv(const std::vector<EvalReport>& reports,
                      const std::filesystem::path& file);  // metrics.csv
void emit_transfer_matrix(const TransferMatrix& m, const std::filesystem::path& file);

struct CurvePoint {
  NodeId budget_nodes = 0;
  double weighted_accuracy = 0.0;
  double reduction = 0.0;
};
void emit_curve(const std::vector<CurvePoint>& curve, const std::filesystem::path& file);

EvalReport load_report(const std::filesystem::path& file);

}  // namespace tdg
