#include "tdg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "json.hpp"

namespace tdg {

namespace {
std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

void MetricWeights::validate() const {
  if (w.empty()) throw EvalError("weights must be non-empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] < 0) throw EvalError("weights must be nonnegative");
    if (i && w[i] > w[i - 1]) throw EvalError("weights must be descending");
    sum += w[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) throw EvalError("weights must sum to 1");
}

MetricWeights MetricWeights::default7() {
  return {{0.3, 0.24, 0.18, 0.12, 0.08, 0.05, 0.03}};
}

MetricWeights MetricWeights::default12() {
  return {{0.24, 0.18, 0.12, 0.1, 0.08, 0.07, 0.06, 0.05, 0.04, 0.03, 0.02, 0.01}};
}

double accuracy(const Prediction& pred, const std::vector<int>& true_labels,
                const std::vector<NodeId>& targets) {
  if (targets.empty()) throw EvalError("accuracy: empty target set");
  std::int64_t correct = 0;
  for (NodeId v : targets)
    if (pred.labels[static_cast<std::size_t>(v)] == true_labels[static_cast<std::size_t>(v)])
      ++correct;
  return static_cast<double>(correct) / static_cast<double>(targets.size());
}

AggregateScores aggregate(const std::vector<double>& scores, const MetricWeights& weights,
                          bool top3_over_n) {
  weights.validate();
  if (scores.size() != weights.w.size())
    throw EvalError("score count " + std::to_string(scores.size()) +
                    " does not match weight count " + std::to_string(weights.w.size()));
  if (scores.size() < 3) throw EvalError("aggregate needs at least 3 scores for s_top3");

  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  AggregateScores out;
  out.s_avg = std::accumulate(sorted.begin(), sorted.end(), 0.0) /
              static_cast<double>(sorted.size());
  const double top3 = sorted[0] + sorted[1] + sorted[2];
  out.s_top3 = top3 / (top3_over_n ? static_cast<double>(sorted.size()) : 3.0);
  for (std::size_t i = 0; i < sorted.size(); ++i) out.s_weighted += weights.w[i] * sorted[i];
  return out;
}

EvalReport evaluate_attack(const std::vector<NamedModel>& defenses, const Dataset& clean,
                           const Injection& injection, const MetricWeights& weights,
                           bool top3_over_n) {
  EvalReport report;
  Dataset attacked = apply_injection(clean, injection);
  for (const auto& [name, model] : defenses) {
    report.model_names.push_back(name);
    report.clean_accuracy.push_back(
        accuracy(predict_labels(model, clean), clean.labels, clean.test_idx));
    report.attacked_accuracy.push_back(
        accuracy(predict_labels(model, attacked), clean.labels, clean.test_idx));
  }
  report.clean = aggregate(report.clean_accuracy, weights, top3_over_n);
  report.attacked = aggregate(report.attacked_accuracy, weights, top3_over_n);
  report.reduction = report.clean.s_weighted - report.attacked.s_weighted;
  report.budget_nodes = injection.n_injected;
  return report;
}

TransferMatrix transfer_matrix(const std::vector<NamedModel>& surrogates,
                               const std::vector<NamedModel>& defenses,
                               const AttackFn& attack, const Dataset& ds,
                               const Budget& budget, std::uint64_t seed) {
  TransferMatrix m;
  for (const auto& s : surrogates) m.surrogate_names.push_back(s.name);
  for (const auto& d : defenses) m.defense_names.push_back(d.name);
  m.reductions.resize(static_cast<Eigen::Index>(surrogates.size()),
                      static_cast<Eigen::Index>(defenses.size()));

  for (std::size_t i = 0; i < surrogates.size(); ++i) {
    Injection inj = attack(surrogates[i].model, ds, budget, seed);
    Dataset attacked = apply_injection(ds, inj);
    for (std::size_t j = 0; j < defenses.size(); ++j) {
      const auto& model = defenses[j].model;
      const double clean_acc = accuracy(predict_labels(model, ds), ds.labels, ds.test_idx);
      const double atk_acc =
          accuracy(predict_labels(model, attacked), ds.labels, ds.test_idx);
      m.reductions(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          clean_acc - atk_acc;
    }
  }
  return m;
}

namespace {

nlohmann::json scores_json(const AggregateScores& s) {
  return {{"s_avg", s.s_avg}, {"s_top3", s.s_top3}, {"s_weighted", s.s_weighted}};
}

AggregateScores scores_from_json(const nlohmann::json& j) {
  return {j.at("s_avg").get<double>(), j.at("s_top3").get<double>(),
          j.at("s_weighted").get<double>()};
}

}  // namespace

void emit_report(const EvalReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["method"] = report.method;
  j["seed"] = report.seed;
  j["budget_nodes"] = report.budget_nodes;
  j["budget_degree"] = report.budget_degree;
  j["model_names"] = report.model_names;
  j["clean_accuracy"] = report.clean_accuracy;
  j["attacked_accuracy"] = report.attacked_accuracy;
  j["clean"] = scores_json(report.clean);
  j["attacked"] = scores_json(report.attacked);
  j["reduction"] = report.reduction;
  std::ofstream out(dir / "report.json");
  if (!out) throw EvalError("cannot write report.json in " + dir.string());
  out << j.dump(2) << "\n";
}

EvalReport load_report(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw EvalError("missing file: " + file.string());
  nlohmann::json j = nlohmann::json::parse(in);
  EvalReport r;
  r.method = j.at("method").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.budget_nodes = j.at("budget_nodes").get<NodeId>();
  r.budget_degree = j.at("budget_degree").get<std::int64_t>();
  r.model_names = j.at("model_names").get<std::vector<std::string>>();
  r.clean_accuracy = j.at("clean_accuracy").get<std::vector<double>>();
  r.attacked_accuracy = j.at("attacked_accuracy").get<std::vector<double>>();
  r.clean = scores_from_json(j.at("clean"));
  r.attacked = scores_from_json(j.at("attacked"));
  r.reduction = j.at("reduction").get<double>();
  return r;
}

void emit_reports_csv(const std::vector<EvalReport>& reports,
                      const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw EvalError("cannot write " + file.string());
  out << "method,seed,model,clean_accuracy,attacked_accuracy,s_avg,s_top3,s_weighted,"
         "reduction\n";
  for (const auto& r : reports)
    for (std::size_t i = 0; i < r.model_names.size(); ++i)
      out << r.method << "," << r.seed << "," << r.model_names[i] << ","
          << fmt(r.clean_accuracy[i]) << "," << fmt(r.attacked_accuracy[i]) << ","
          << fmt(r.attacked.s_avg) << "," << fmt(r.attacked.s_top3) << ","
          << fmt(r.attacked.s_weighted) << "," << fmt(r.reduction) << "\n";
}

void emit_transfer_matrix(const TransferMatrix& m, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw EvalError("cannot write " + file.string());
  out << "surrogate";
  for (const auto& d : m.defense_names) out << "," << d;
  out << "\n";
  for (std::size_t i = 0; i < m.surrogate_names.size(); ++i) {
    out << m.surrogate_names[i];
    for (Eigen::Index j = 0; j < m.reductions.cols(); ++j)
      out << "," << fmt(m.reductions(static_cast<Eigen::Index>(i), j));
    out << "\n";
  }
}

void emit_curve(const std::vector<CurvePoint>& curve, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw EvalError("cannot write " + file.string());
  out << "budget_nodes,weighted_accuracy,reduction\n";
  for (const auto& pt : curve)
    out << pt.budget_nodes << "," << fmt(pt.weighted_accuracy) << "," << fmt(pt.reduction)
        << "\n";
}

}  // namespace tdg
