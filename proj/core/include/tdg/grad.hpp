#pragma once

#include "tdg/injection.hpp"
#include "tdg/model.hpp"

namespace tdg {

enum class LossMode { smooth, inverse_kl };
enum class FeatureMap { smoothmap, clamp };

/// Smooth attack loss max(r + ln p, 0)^2 with an exact flat region for
/// p <= e^{-r}. Returns {loss, d loss / d p}.
std::pair<double, double> smooth_loss_value_grad(double p, double r);

/// ln p floored at 1e-12; minimized directly.
std::pair<double, double> inverse_kl_value_grad(double p);

/// (max+min)/2 + (max-min)/2 * sin(x); derivative bounded by (max-min)/2.
double smoothmap(double x, double lo, double hi);
double smoothmap_derivative(double x, double lo, double hi);

/// Saturating identity; subgradient 1 inside the interval and at the
/// boundary, 0 outside.
double clamp_map(double x, double lo, double hi);
double clamp_derivative(double x, double lo, double hi);

Matrix apply_feature_map(const Matrix& raw, FeatureMap map, double lo, double hi);

struct LossSpec {
  LossMode mode = LossMode::smooth;
  double r = 4.0;
};

struct FeatureGradient {
  double loss = 0.0;
  Matrix grad;  // n_injected x D, w.r.t. the raw variables
};

/// Loss and exact gradient of the mean per-target attack loss with respect
/// to the raw injected-feature variables. The attacked dataset's injected
/// rows are overwritten by feature_map(raw_vars) before the forward pass.
/// Only injected rows receive gradient; deterministic.
FeatureGradient grad_injected_features(const Model& model, const Dataset& attacked,
                                       NodeId n_original,
                                       const std::vector<NodeId>& targets,
                                       const std::vector<int>& surrogate_labels,
                                       const LossSpec& loss, FeatureMap map,
                                       std::pair<double, double> bounds,
                                       const Matrix& raw_vars);

/// Same quantities evaluated on a prebuilt normalized adjacency, so the
/// optimizer does not renormalize the unchanged topology every step.
FeatureGradient grad_injected_features_adj(const Model& model,
                                           const NormalizedAdjacency& adj,
                                           const Matrix& base_features, NodeId n_original,
                                           const std::vector<NodeId>& targets,
                                           const std::vector<int>& surrogate_labels,
                                           const LossSpec& loss, FeatureMap map,
                                           std::pair<double, double> bounds,
                                           const Matrix& raw_vars);

}  // namespace tdg
