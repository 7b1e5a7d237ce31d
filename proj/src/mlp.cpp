#include "noisylab/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "noisylab/kernels.hpp"

namespace noisylab {

Mlp::Mlp(const std::vector<std::size_t>& widths, std::uint64_t seed, Activation activation)
    : activation_(activation) {
  if (widths.size() < 2) throw std::invalid_argument("Mlp needs at least input and output widths");
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const std::size_t in = widths[k], out = widths[k + 1];
    if (in == 0 || out == 0) throw std::invalid_argument("Mlp layer widths must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{Tensor({out, in}), Tensor({out})};
    for (double& w : layer.weight.data()) w = dist(rng);
    for (double& b : layer.bias.data()) b = dist(rng);
    layers_.push_back(std::move(layer));
  }
  validate();
}

Mlp::Mlp(std::vector<DenseLayer> layers, Activation activation)
    : layers_(std::move(layers)), activation_(activation) {
  validate();
}

void Mlp::validate() const {
  if (layers_.empty()) throw std::invalid_argument("Mlp has no layers");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& l = layers_[k];
    if (l.weight.rank() != 2 || l.bias.rank() != 1 || l.bias.size() != l.weight.rows()) {
      throw std::invalid_argument(fmt::format("layer {}: weight {} and bias {} disagree", k,
                                              shape_string(l.weight.shape()),
                                              shape_string(l.bias.shape())));
    }
    if (k > 0 && layers_[k - 1].weight.rows() != l.weight.cols()) {
      throw std::invalid_argument(fmt::format("layer {} expects {} inputs but layer {} emits {}", k,
                                              l.weight.cols(), k - 1,
                                              layers_[k - 1].weight.rows()));
    }
  }
}

std::size_t Mlp::input_size() const { return layers_.front().weight.cols(); }
std::size_t Mlp::class_count() const { return layers_.back().weight.rows(); }

std::vector<Tensor*> Mlp::parameters() {
  std::vector<Tensor*> out;
  for (auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Tensor*> Mlp::parameters() const {
  std::vector<const Tensor*> out;
  for (const auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

void Mlp::zero_grad() {
  for (Tensor* p : parameters()) p->clear_grad();
}

namespace {

void check_batch(const Mlp& model, const Tensor& batch) {
  if (batch.rank() != 2 || batch.cols() != model.input_size()) {
    throw std::invalid_argument(fmt::format("batch shape {} does not match model input size {}",
                                            shape_string(batch.shape()), model.input_size()));
  }
}

}  // namespace

Tensor forward(const Mlp& model, const Tensor& batch) {
  // Goes through a throwaway graph of constants so the arithmetic is the
  // exact same code path as the recorded forward.
  check_batch(model, batch);
  Graph g;
  Var h = g.constant(batch);
  const auto& layers = model.layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    h = g.linear(h, g.constant(layers[k].weight), g.constant(layers[k].bias));
    if (k + 1 < layers.size()) h = g.relu(h);
  }
  return g.value(h);
}

Var forward(Graph& graph, Mlp& model, const Tensor& batch) {
  check_batch(model, batch);
  Var h = graph.constant(batch);
  auto& layers = model.layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    h = graph.linear(h, graph.parameter(layers[k].weight), graph.parameter(layers[k].bias));
    if (k + 1 < layers.size()) h = graph.relu(h);
  }
  return h;
}

Tensor softmax(const Tensor& scores, double temperature) {
  return kernels::softmax_rows(scores, temperature);
}

std::vector<int> argmax_rows(const Tensor& scores) {
  std::vector<int> out(scores.rows());
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    auto row = scores.row(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
      if (row[c] > row[best]) best = c;
    out[r] = static_cast<int>(best);
  }
  return out;
}

}  // namespace noisylab
