#pragma once

#include "tdg/model.hpp"

namespace tdg {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction over an arbitrary set of dense parameters.
class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  /// Applies one update to `param` in place. `slot` identifies the
  /// parameter across steps; slots must be registered in a fixed order.
  void step(std::size_t slot, Matrix& param, const Matrix& grad);
  void begin_step() { ++t_; }

 private:
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<Matrix> m_, v_;
};

struct TrainConfig {
  AdamConfig adam;
  int epochs = 500;
  int eval_interval = 20;
  std::uint64_t seed = 0;

  void validate() const {
    if (adam.lr <= 0) throw ModelError("learning rate must be positive");
    if (epochs < 1) throw ModelError("epochs must be >= 1");
    if (eval_interval < 1) throw ModelError("eval_interval must be >= 1");
  }
};

struct TrainResult {
  Model model;           // snapshot with the best validation accuracy
  double best_val_accuracy = 0.0;
  int best_epoch = 0;
  double final_train_loss = 0.0;
};

/// Full-batch cross-entropy training on the train split with periodic
/// validation; returns the parameter snapshot with the highest validation
/// accuracy. Deterministic for a fixed seed. Aborts on NaN loss.
TrainResult train(const ModelSpec& spec, const Dataset& ds, const TrainConfig& config);

}  // namespace tdg
