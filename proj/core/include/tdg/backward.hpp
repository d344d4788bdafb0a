#pragma once

#include "tdg/model.hpp"

namespace tdg {

struct BackwardResult {
  std::vector<Layer> param_grads;  // same shapes as model.layers
  Matrix input_grad;               // d loss / d features, empty unless requested
};

/// Exact reverse-mode pass through the cached forward trace, seeded with
/// d loss / d logits. Dropout masks in the trace are replayed.
BackwardResult backward(const Model& model, const NormalizedAdjacency& adj,
                        const ForwardTrace& trace, const Matrix& dlogits,
                        bool need_input_grad);

}  // namespace tdg
