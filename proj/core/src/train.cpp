#include "tdg/train.hpp"

#include <cmath>

#include "tdg/backward.hpp"

namespace tdg {

void Adam::step(std::size_t slot, Matrix& param, const Matrix& grad) {
  if (slot >= m_.size()) {
    m_.resize(slot + 1);
    v_.resize(slot + 1);
  }
  if (m_[slot].size() == 0) {
    m_[slot] = Matrix::Zero(param.rows(), param.cols());
    v_[slot] = Matrix::Zero(param.rows(), param.cols());
  }
  m_[slot] = cfg_.beta1 * m_[slot] + (1.0 - cfg_.beta1) * grad;
  v_[slot] = cfg_.beta2 * v_[slot].array().matrix() +
             (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  param.array() -= cfg_.lr * (m_[slot].array() / bc1) /
                   ((v_[slot].array() / bc2).sqrt() + cfg_.eps);
}

namespace {

double accuracy_on(const Matrix& probs, const std::vector<int>& labels,
                   const std::vector<NodeId>& idx) {
  if (idx.empty()) return 0.0;
  std::int64_t correct = 0;
  for (NodeId v : idx) {
    Eigen::Index best = 0;
    probs.row(v).maxCoeff(&best);
    // re-scan for the tie-break toward the smallest class index
    for (Eigen::Index c = 0; c < probs.cols(); ++c)
      if (probs(v, c) == probs(v, best)) {
        best = c;
        break;
      }
    if (static_cast<int>(best) == labels[static_cast<std::size_t>(v)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(idx.size());
}

}  // namespace

TrainResult train(const ModelSpec& spec, const Dataset& ds, const TrainConfig& config) {
  config.validate();
  if (ds.train_idx.empty() || ds.val_idx.empty())
    throw ModelError("train and val splits must be non-empty");

  Model model = init_model(spec, ds.feature_dim(), ds.num_classes, config.seed);
  auto adj = normalize_adjacency(ds.graph, spec.norm_scheme());
  Adam opt(config.adam);

  const double inv_train = 1.0 / static_cast<double>(ds.train_idx.size());
  TrainResult result;
  result.best_val_accuracy = -1.0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    ForwardMode mode{.training = true,
                     .dropout_seed = config.seed * 1000003ull + static_cast<std::uint64_t>(epoch)};
    auto trace = forward_trace(model, adj, ds.features, mode);

    double loss = 0.0;
    Matrix dlogits = Matrix::Zero(trace.logits.rows(), trace.logits.cols());
    for (NodeId v : ds.train_idx) {
      const int y = ds.labels[static_cast<std::size_t>(v)];
      loss -= std::log(std::max(trace.probabilities(v, y), 1e-300)) * inv_train;
      dlogits.row(v) = trace.probabilities.row(v) * inv_train;
      dlogits(v, y) -= inv_train;
    }
    if (!std::isfinite(loss))
      throw NumericalError("NaN loss at epoch " + std::to_string(epoch) +
                       " (lr=" + std::to_string(config.adam.lr) + ")");
    result.final_train_loss = loss;

    auto grads = backward(model, adj, trace, dlogits, /*need_input_grad=*/false);
    opt.begin_step();
    std::size_t slot = 0;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
      auto& layer = model.layers[i];
      auto& g = grads.param_grads[i];
      opt.step(slot++, layer.weight, g.weight);
      Matrix bias = layer.bias, gb = g.bias;
      opt.step(slot++, bias, gb);
      layer.bias = bias;
      if (layer.ln_gain.size()) {
        Matrix gain = layer.ln_gain, gg = g.ln_gain;
        opt.step(slot++, gain, gg);
        layer.ln_gain = gain;
        Matrix offset = layer.ln_offset, go = g.ln_offset;
        opt.step(slot++, offset, go);
        layer.ln_offset = offset;
      }
    }

    if (epoch % config.eval_interval == 0 || epoch == config.epochs) {
      auto eval = forward_trace(model, adj, ds.features, ForwardMode{});
      const double val_acc = accuracy_on(eval.probabilities, ds.labels, ds.val_idx);
      if (val_acc > result.best_val_accuracy) {
        result.best_val_accuracy = val_acc;
        result.best_epoch = epoch;
        result.model = model;
      }
    }
  }
  return result;
}

}  // namespace tdg
