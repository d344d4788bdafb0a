#include "tdg/grad.hpp"

#include <cmath>

#include "tdg/backward.hpp"

namespace tdg {

std::pair<double, double> smooth_loss_value_grad(double p, double r) {
  if (p <= 0.0) return {0.0, 0.0};  // ln p -> -inf, exactly in the flat region
  const double t = r + std::log(p);
  if (t <= 0.0) return {0.0, 0.0};
  return {t * t, 2.0 * t / p};
}

std::pair<double, double> inverse_kl_value_grad(double p) {
  const double pf = std::max(p, 1e-12);
  return {std::log(pf), p > 1e-12 ? 1.0 / pf : 0.0};
}

double smoothmap(double x, double lo, double hi) {
  return 0.5 * (hi + lo) + 0.5 * (hi - lo) * std::sin(x);
}

double smoothmap_derivative(double x, double lo, double hi) {
  return 0.5 * (hi - lo) * std::cos(x);
}

double clamp_map(double x, double lo, double hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}

double clamp_derivative(double x, double lo, double hi) {
  return (x < lo || x > hi) ? 0.0 : 1.0;
}

Matrix apply_feature_map(const Matrix& raw, FeatureMap map, double lo, double hi) {
  Matrix out(raw.rows(), raw.cols());
  for (Eigen::Index i = 0; i < raw.rows(); ++i)
    for (Eigen::Index j = 0; j < raw.cols(); ++j)
      out(i, j) = map == FeatureMap::smoothmap ? smoothmap(raw(i, j), lo, hi)
                                               : clamp_map(raw(i, j), lo, hi);
  return out;
}

FeatureGradient grad_injected_features_adj(const Model& model,
                                           const NormalizedAdjacency& adj,
                                           const Matrix& base_features, NodeId n_original,
                                           const std::vector<NodeId>& targets,
                                           const std::vector<int>& surrogate_labels,
                                           const LossSpec& loss, FeatureMap map,
                                           std::pair<double, double> bounds,
                                           const Matrix& raw_vars) {
  if (targets.empty()) throw ModelError("attack target set is empty");
  const NodeId n_injected = base_features.rows() - n_original;
  if (raw_vars.rows() != n_injected || raw_vars.cols() != base_features.cols())
    throw ModelError("raw variable shape mismatch");

  Matrix features = base_features;
  features.bottomRows(n_injected) =
      apply_feature_map(raw_vars, map, bounds.first, bounds.second);

  auto trace = forward_trace(model, adj, features, ForwardMode{});

  const double inv_t = 1.0 / static_cast<double>(targets.size());
  double total = 0.0;
  Matrix dlogits = Matrix::Zero(trace.logits.rows(), trace.logits.cols());
  for (NodeId v : targets) {
    const int y = surrogate_labels[static_cast<std::size_t>(v)];
    const double p = trace.probabilities(v, y);
    auto [lv, dldp] = loss.mode == LossMode::smooth ? smooth_loss_value_grad(p, loss.r)
                                                    : inverse_kl_value_grad(p);
    total += lv * inv_t;
    if (dldp != 0.0) {
      // d p / d logit_j = p (delta_{j,y} - p_j)
      const double scale = dldp * inv_t * p;
      dlogits.row(v) -= scale * trace.probabilities.row(v);
      dlogits(v, y) += scale;
    }
  }

  auto back = backward(model, adj, trace, dlogits, /*need_input_grad=*/true);

  FeatureGradient out;
  out.loss = total;
  out.grad.resize(n_injected, raw_vars.cols());
  for (Eigen::Index i = 0; i < n_injected; ++i)
    for (Eigen::Index j = 0; j < raw_vars.cols(); ++j) {
      const double dmap = map == FeatureMap::smoothmap
                              ? smoothmap_derivative(raw_vars(i, j), bounds.first, bounds.second)
                              : clamp_derivative(raw_vars(i, j), bounds.first, bounds.second);
      out.grad(i, j) = back.input_grad(n_original + i, j) * dmap;
    }
  if (!out.grad.allFinite())
    throw NumericalError("non-finite gradient in injected-feature backward pass");
  return out;
}

FeatureGradient grad_injected_features(const Model& model, const Dataset& attacked,
                                       NodeId n_original,
                                       const std::vector<NodeId>& targets,
                                       const std::vector<int>& surrogate_labels,
                                       const LossSpec& loss, FeatureMap map,
                                       std::pair<double, double> bounds,
                                       const Matrix& raw_vars) {
  auto adj = normalize_adjacency(attacked.graph, model.spec.norm_scheme());
  return grad_injected_features_adj(model, adj, attacked.features, n_original, targets,
                                    surrogate_labels, loss, map, bounds, raw_vars);
}

}  // namespace tdg
