#pragma once

// Independent reference implementations used only by tests. These must not
// share code paths with the library internals they check.

#include <cmath>
#include <set>
#include <vector>

#include "tdg/grad.hpp"
#include "tdg/injection.hpp"
#include "tdg/model.hpp"

namespace tdg::oracle {

// Dense normalized adjacency built from first principles, self-loops added
// before degree computation.
inline Matrix dense_normalized(const Graph& g, NormScheme scheme) {
  const auto n = g.num_nodes();
  Matrix a = Matrix::Zero(n, n);
  for (const auto& [u, v] : g.edge_list()) {
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  for (NodeId v = 0; v < n; ++v) a(v, v) = 1.0;
  Vector deg = a.rowwise().sum();
  Matrix out = Matrix::Zero(n, n);
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = 0; j < n; ++j)
      if (a(i, j) != 0.0)
        out(i, j) = scheme == NormScheme::gcn_symmetric
                        ? 1.0 / std::sqrt(deg(i) * deg(j))
                        : 1.0 / deg(i);
  return out;
}

// Dense-matrix forward pass for gcn/sage/sgc, eval mode only.
inline Matrix dense_forward_logits(const Model& m, const Graph& g, const Matrix& x) {
  Matrix a = dense_normalized(g, m.spec.norm_scheme());
  if (m.spec.architecture == Architecture::sgc) {
    Matrix p = x;
    for (int i = 0; i < m.spec.sgc_k; ++i) p = a * p;
    return (p * m.layers.front().weight).rowwise() + m.layers.front().bias.transpose();
  }
  Matrix h = x;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const auto& layer = m.layers[i];
    Matrix z = (a * h * layer.weight).rowwise() + layer.bias.transpose();
    if (layer.ln_gain.size()) {
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const double mu = z.row(r).mean();
        const double var = (z.row(r).array() - mu).square().mean();
        z.row(r) = ((z.row(r).array() - mu) / std::sqrt(var + 1e-5)) *
                       layer.ln_gain.transpose().array() +
                   layer.ln_offset.transpose().array();
      }
    }
    if (i + 1 < m.layers.size())
      h = z.cwiseMax(0.0);
    else
      h = z;
  }
  return h;
}

// Central finite differences of a scalar function over a matrix argument.
template <typename F>
Matrix finite_difference(F&& f, Matrix x, double step = 1e-4) {
  Matrix grad(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double orig = x(i, j);
      x(i, j) = orig + step;
      const double hi = f(x);
      x(i, j) = orig - step;
      const double lo = f(x);
      x(i, j) = orig;
      grad(i, j) = (hi - lo) / (2.0 * step);
    }
  return grad;
}

// Brute-force admissibility check, written against the budget definition
// rather than the library's validator.
inline bool injection_admissible(const Injection& inj, const Budget& b, NodeId n_original) {
  if (inj.n_injected > b.max_nodes) return false;
  if (inj.injected_features.rows() != inj.n_injected) return false;
  std::vector<std::int64_t> deg(static_cast<std::size_t>(inj.n_injected), 0);
  std::set<std::pair<NodeId, NodeId>> cross;
  for (auto [orig, idx] : inj.cross_edges) {
    if (orig < 0 || orig >= n_original || idx < 0 || idx >= inj.n_injected) return false;
    if (!cross.insert({orig, idx}).second) return false;
    deg[static_cast<std::size_t>(idx)]++;
  }
  for (auto [i, j] : inj.injected_edges) {
    if (i < 0 || i >= inj.n_injected || j < 0 || j >= inj.n_injected || i == j) return false;
    deg[static_cast<std::size_t>(i)]++;
    deg[static_cast<std::size_t>(j)]++;
  }
  for (auto d : deg)
    if (d > b.max_degree) return false;
  for (Eigen::Index i = 0; i < inj.injected_features.rows(); ++i)
    for (Eigen::Index j = 0; j < inj.injected_features.cols(); ++j) {
      const double x = inj.injected_features(i, j);
      if (!(x >= b.feature_bounds.first && x <= b.feature_bounds.second)) return false;
    }
  return true;
}

}  // namespace tdg::oracle
