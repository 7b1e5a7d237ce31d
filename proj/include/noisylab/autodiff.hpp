#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "noisylab/tensor.hpp"

namespace noisylab {

/// Handle to a value recorded on a Graph.
struct Var {
  std::size_t id = 0;
};

/// Dynamic reverse-mode tape. Every op appends a node whose inputs were
/// recorded earlier, so node ids are already a topological order and backward
/// is a single reverse sweep.
///
/// A graph is built for one mini-batch and differentiated once. Parameter
/// leaves are bound to model tensors and accumulate into Tensor::grad().
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  Var constant(Tensor value);
  /// Leaf bound to a model parameter; the tensor must outlive the graph.
  Var parameter(Tensor& param);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  double scalar(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  /// x[B x in] * w[out x in]^T + b[out]
  Var linear(Var x, Var w, Var b);
  Var relu(Var x);
  /// Row-wise softmax(x / temperature).
  Var softmax(Var scores, double temperature = 1.0);
  /// Per-row cross-entropy against constant (soft) targets; returns a [B] vector.
  Var soft_target_nll(Var probs, const Tensor& targets);
  /// coef[i]*a[i] + (1-coef[i])*b[i] for [B] vectors.
  Var convex_combine(Var a, Var b, std::span<const double> coef);
  Var mean(Var v);
  Var add(Var a, Var b);
  Var scale(Var a, double factor);
  /// KL(uniform || column mean of probs): the class-prior regularizer.
  Var uniform_prior_kl(Var probs);
  /// sum((pred - target)^2) over all elements.
  Var sum_squared_error(Var pred, const Tensor& target);

  /// Seeds d(loss)/d(loss) = 1 and propagates. A graph may be differentiated
  /// only once.
  void backward(Var loss);

 private:
  using BackwardFn = std::function<void(Graph&, std::size_t)>;

  struct Node {
    Tensor value;
    std::vector<double> grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Tensor* bound = nullptr;
    bool requires_grad = false;
  };

  Var push(Tensor value, std::vector<std::size_t> inputs, BackwardFn fn);
  std::span<double> grad_of(std::size_t id);
  bool wants_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  void check_open() const;

  std::vector<Node> nodes_;
  bool differentiated_ = false;
};

}  // namespace noisylab
