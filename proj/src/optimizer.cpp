#include "noisylab/optimizer.hpp"

#include <stdexcept>

namespace noisylab {

SgdMomentum::SgdMomentum(SgdConfig config) : config_(config) {
  if (!(config_.momentum >= 0.0 && config_.momentum < 1.0)) {
    throw std::invalid_argument("momentum must lie in [0, 1)");
  }
  if (!(config_.weight_decay >= 0.0)) {
    throw std::invalid_argument("weight decay must be nonnegative");
  }
}

void SgdMomentum::step(Mlp& model, double lr) {
  if (!(lr >= 0.0)) throw std::invalid_argument("learning rate must be nonnegative");
  auto params = model.parameters();
  for (const Tensor* p : params) {
    if (!p->has_grad()) throw std::logic_error("sgd step without populated gradients");
  }
  if (velocity_.empty()) {
    for (const Tensor* p : params) velocity_.emplace_back(p->size(), 0.0);
  }
  if (velocity_.size() != params.size()) {
    throw std::logic_error("optimizer state does not match model parameters");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    auto theta = p.data();
    auto grad = p.grad();
    auto& v = velocity_[k];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      v[i] = config_.momentum * v[i] + grad[i] + config_.weight_decay * theta[i];
      theta[i] -= lr * v[i];
    }
    p.clear_grad();
  }
}

}  // namespace noisylab
