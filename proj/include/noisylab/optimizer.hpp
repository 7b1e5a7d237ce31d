#pragma once

#include <vector>

#include "noisylab/mlp.hpp"

namespace noisylab {

struct SgdConfig {
  double momentum = 0.9;
  double weight_decay = 1e-4;
};

/// SGD with heavy-ball momentum and L2 weight decay:
///   v <- momentum * v + grad + weight_decay * theta
///   theta <- theta - lr * v
/// Gradients are cleared after each step.
class SgdMomentum {
 public:
  explicit SgdMomentum(SgdConfig config = {});

  void step(Mlp& model, double lr);
  const SgdConfig& config() const { return config_; }

 private:
  SgdConfig config_;
  std::vector<std::vector<double>> velocity_;
};

}  // namespace noisylab
