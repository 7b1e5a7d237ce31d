#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "noisylab/autodiff.hpp"
#include "noisylab/tensor.hpp"

namespace noisylab {

enum class Activation { relu };

struct DenseLayer {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]
};

/// Fully connected classifier: hidden layers use the activation, the final
/// layer produces raw class scores.
class Mlp {
 public:
  /// widths = {input, hidden..., classes}. Weights and biases are drawn from
  /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Mlp(const std::vector<std::size_t>& widths, std::uint64_t seed,
      Activation activation = Activation::relu);
  /// Takes explicit layers; throws if consecutive dimensions do not chain.
  explicit Mlp(std::vector<DenseLayer> layers, Activation activation = Activation::relu);

  std::size_t input_size() const;
  std::size_t class_count() const;
  Activation activation() const { return activation_; }

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  /// Weight and bias tensors in layer order.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  void zero_grad();

 private:
  void validate() const;

  std::vector<DenseLayer> layers_;
  Activation activation_;
};

/// Scores without recording anything for differentiation.
Tensor forward(const Mlp& model, const Tensor& batch);

/// Records the forward computation on `graph` and returns the scores node.
Var forward(Graph& graph, Mlp& model, const Tensor& batch);

/// Row-wise softmax(scores / temperature).
Tensor softmax(const Tensor& scores, double temperature = 1.0);

/// Index of the largest entry in each row; ties go to the lowest index.
std::vector<int> argmax_rows(const Tensor& scores);

}  // namespace noisylab
