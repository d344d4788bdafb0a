#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "tdg/dataset.hpp"

namespace tdg {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when training or attack optimization produces NaN/Inf values.
struct NumericalError : ModelError {
  using ModelError::ModelError;
};

enum class Architecture { gcn, sgc, sage_mean };

std::string architecture_name(Architecture a);
Architecture architecture_from_name(const std::string& name);

struct ModelSpec {
  Architecture architecture = Architecture::gcn;
  std::vector<Eigen::Index> hidden_dims{32, 16};
  bool use_layernorm = true;
  int sgc_k = 2;                 // propagation steps, sgc only
  double dropout_rate = 0.1;     // applied to layer inputs during training

  void validate() const;
  NormScheme norm_scheme() const {
    return architecture == Architecture::sage_mean ? NormScheme::mean
                                                   : NormScheme::gcn_symmetric;
  }
};

/// One dense layer: weight (in x out) and bias, plus layernorm affine
/// parameters when enabled on that layer.
struct Layer {
  Matrix weight;
  Vector bias;
  Vector ln_gain;    // empty when layernorm disabled for this layer
  Vector ln_offset;
};

/// A trained GNN. Immutable once built; forward and gradient calls are safe
/// to share across threads.
struct Model {
  ModelSpec spec;
  std::vector<Layer> layers;
  int num_classes = 0;

  Eigen::Index input_dim() const {
    return layers.empty() ? 0 : layers.front().weight.rows();
  }
};

/// Glorot-uniform initialized model with the dimension chain
/// D -> hidden_dims... -> num_classes (sgc: D -> num_classes).
Model init_model(const ModelSpec& spec, Eigen::Index input_dim, int num_classes,
                 std::uint64_t seed);

struct Prediction {
  Matrix probabilities;       // n x C, rows sum to 1
  std::vector<int> labels;    // argmax, ties toward the smallest class index
};

struct ForwardMode {
  bool training = false;
  std::uint64_t dropout_seed = 0;
};

/// Intermediate activations kept for backpropagation.
struct ForwardTrace {
  Matrix input;                       // features after dropout (input to layer 0)
  std::vector<Matrix> layer_inputs;   // H_i fed to each layer (post-dropout)
  std::vector<Matrix> aggregated;     // A_hat * H_i (or A_hat^k X for sgc)
  std::vector<Matrix> pre_norm;       // aggregated * W + b
  std::vector<Matrix> normalized;     // after layernorm (== pre_norm when disabled)
  std::vector<Matrix> dropout_masks;  // empty in eval mode
  Matrix logits;
  Matrix probabilities;
};

/// Full forward pass. Eval mode is deterministic.
ForwardTrace forward_trace(const Model& model, const NormalizedAdjacency& adj,
                           const Matrix& features, const ForwardMode& mode);

Prediction forward(const Model& model, const Dataset& ds, const ForwardMode& mode = {});
Prediction predict_labels(const Model& model, const Dataset& ds);

/// Y = A_hat * X and the transpose product used in backprop.
Matrix spmm(const NormalizedAdjacency& a, const Matrix& x);
Matrix spmm_transpose(const NormalizedAdjacency& a, const Matrix& x);

Matrix softmax_rows(const Matrix& logits);

void save_model(const Model& model, const std::filesystem::path& file);
Model load_model(const std::filesystem::path& file);

}  // namespace tdg
