#include "noisylab/autodiff.hpp"

#include <algorithm>
#include <stdexcept>

#include "noisylab/kernels.hpp"

namespace noisylab {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

Var Graph::push(Tensor value, std::vector<std::size_t> inputs, BackwardFn fn) {
  check_open();
  Node node;
  node.value = std::move(value);
  node.inputs = std::move(inputs);
  node.requires_grad = std::any_of(node.inputs.begin(), node.inputs.end(),
                                   [this](std::size_t i) { return nodes_[i].requires_grad; });
  if (node.requires_grad) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

void Graph::check_open() const {
  if (differentiated_) {
    throw std::logic_error("graph already differentiated; record a new one");
  }
}

std::span<double> Graph::grad_of(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

double Graph::scalar(Var v) const {
  const Tensor& t = value(v);
  if (t.size() != 1) {
    throw std::invalid_argument("expected scalar, got shape " + shape_string(t.shape()));
  }
  return t[0];
}

Var Graph::constant(Tensor value) {
  check_open();
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Graph::parameter(Tensor& param) {
  check_open();
  Node node;
  node.value = param;
  node.value.clear_grad();
  node.bound = &param;
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Graph::linear(Var x, Var w, Var b) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  const Tensor& bv = value(b);
  if (xv.rank() != 2 || wv.rank() != 2 || bv.rank() != 1 || xv.cols() != wv.cols() ||
      bv.size() != wv.rows()) {
    throw std::invalid_argument("linear: input " + shape_string(xv.shape()) + ", weight " +
                                shape_string(wv.shape()) + ", bias " +
                                shape_string(bv.shape()));
  }
  const std::size_t batch = xv.rows();
  const std::size_t in = wv.cols();
  const std::size_t out = wv.rows();

  // Transposed weight copy keeps the inner loop contiguous in both operands.
  std::vector<double> wt(in * out);
  for (std::size_t o = 0; o < out; ++o)
    for (std::size_t i = 0; i < in; ++i) wt[i * out + o] = wv.at(o, i);

  Tensor y({batch, out});
  for (std::size_t r = 0; r < batch; ++r) {
    auto yr = y.row(r);
    std::copy(bv.data().begin(), bv.data().end(), yr.begin());
    auto xr = xv.row(r);
    for (std::size_t i = 0; i < in; ++i) {
      const double xi = xr[i];
      const double* wrow = &wt[i * out];
      for (std::size_t o = 0; o < out; ++o) yr[o] += xi * wrow[o];
    }
  }

  return push(std::move(y), {x.id, w.id, b.id}, [batch, in, out](Graph& g, std::size_t self) {
    const auto& node = g.nodes_[self];
    const std::span<const double> gy = node.grad;
    const std::size_t xi = node.inputs[0], wi = node.inputs[1], bi = node.inputs[2];
    const Tensor& xv = g.nodes_[xi].value;
    const Tensor& wv = g.nodes_[wi].value;
    if (g.wants_grad(wi)) {
      auto gw = g.grad_of(wi);
      for (std::size_t r = 0; r < batch; ++r) {
        auto xr = xv.row(r);
        for (std::size_t o = 0; o < out; ++o) {
          const double go = gy[r * out + o];
          double* dst = &gw[o * in];
          for (std::size_t i = 0; i < in; ++i) dst[i] += go * xr[i];
        }
      }
    }
    if (g.wants_grad(bi)) {
      auto gb = g.grad_of(bi);
      for (std::size_t r = 0; r < batch; ++r)
        for (std::size_t o = 0; o < out; ++o) gb[o] += gy[r * out + o];
    }
    if (g.wants_grad(xi)) {
      auto gx = g.grad_of(xi);
      for (std::size_t r = 0; r < batch; ++r) {
        double* dst = &gx[r * in];
        for (std::size_t o = 0; o < out; ++o) {
          const double go = gy[r * out + o];
          auto wr = wv.row(o);
          for (std::size_t i = 0; i < in; ++i) dst[i] += go * wr[i];
        }
      }
    }
  });
}

Var Graph::relu(Var x) {
  Tensor y = value(x);
  for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
  return push(std::move(y), {x.id}, [](Graph& g, std::size_t self) {
    const auto& node = g.nodes_[self];
    const std::size_t xi = node.inputs[0];
    auto gx = g.grad_of(xi);
    auto xv = g.nodes_[xi].value.data();
    for (std::size_t i = 0; i < gx.size(); ++i)
      if (xv[i] > 0.0) gx[i] += node.grad[i];
  });
}

Var Graph::softmax(Var scores, double temperature) {
  Tensor p = kernels::softmax_rows(value(scores), temperature);
  return push(std::move(p), {scores.id}, [temperature](Graph& g, std::size_t self) {
    const auto& node = g.nodes_[self];
    const Tensor& p = node.value;
    auto gs = g.grad_of(node.inputs[0]);
    const std::size_t cols = p.cols();
    for (std::size_t r = 0; r < p.rows(); ++r) {
      auto pr = p.row(r);
      const double* gp = &node.grad[r * cols];
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += gp[c] * pr[c];
      for (std::size_t c = 0; c < cols; ++c)
        gs[r * cols + c] += pr[c] * (gp[c] - dot) / temperature;
    }
  });
}

Var Graph::soft_target_nll(Var probs, const Tensor& targets) {
  std::vector<double> losses = kernels::soft_target_nll(value(probs), targets);
  const std::size_t rows = losses.size();
  return push(Tensor({rows}, std::move(losses)), {probs.id},
              [targets](Graph& g, std::size_t self) {
                const auto& node = g.nodes_[self];
                const std::size_t pi = node.inputs[0];
                const Tensor& p = g.nodes_[pi].value;
                auto gp = g.grad_of(pi);
                const std::size_t cols = p.cols();
                for (std::size_t r = 0; r < p.rows(); ++r) {
                  const double up = node.grad[r];
                  for (std::size_t c = 0; c < cols; ++c) {
                    const double pv = p.at(r, c);
                    const double tv = targets.at(r, c);
                    if (tv != 0.0 && pv > kernels::kLogFloor) gp[r * cols + c] -= up * tv / pv;
                  }
                }
              });
}

Var Graph::convex_combine(Var a, Var b, std::span<const double> coef) {
  std::vector<double> out = kernels::convex_combine(value(a).data(), value(b).data(), coef);
  std::vector<double> weights(coef.begin(), coef.end());
  const std::size_t n = out.size();
  return push(Tensor({n}, std::move(out)), {a.id, b.id},
              [weights = std::move(weights)](Graph& g, std::size_t self) {
                const auto& node = g.nodes_[self];
                const std::size_t ai = node.inputs[0], bi = node.inputs[1];
                if (g.wants_grad(ai)) {
                  auto ga = g.grad_of(ai);
                  for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += weights[i] * node.grad[i];
                }
                if (g.wants_grad(bi)) {
                  auto gb = g.grad_of(bi);
                  for (std::size_t i = 0; i < gb.size(); ++i)
                    gb[i] += (1.0 - weights[i]) * node.grad[i];
                }
              });
}

Var Graph::mean(Var v) {
  const double m = kernels::mean(value(v).data());
  return push(Tensor({1}, {m}), {v.id}, [](Graph& g, std::size_t self) {
    const auto& node = g.nodes_[self];
    auto gv = g.grad_of(node.inputs[0]);
    const double share = node.grad[0] / static_cast<double>(gv.size());
    for (double& x : gv) x += share;
  });
}

Var Graph::add(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require(av.shape() == bv.shape(), "add: shape mismatch");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return push(std::move(out), {a.id, b.id}, [](Graph& g, std::size_t self) {
    const auto& node = g.nodes_[self];
    for (std::size_t k = 0; k < 2; ++k) {
      const std::size_t in = node.inputs[k];
      if (!g.wants_grad(in)) continue;
      auto gi = g.grad_of(in);
      for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += node.grad[i];
    }
  });
}

Var Graph::scale(Var a, double factor) {
  Tensor out = value(a);
  for (double& v : out.data()) v *= factor;
  return push(std::move(out), {a.id}, [factor](Graph& g, std::size_t self) {
    const auto& node = g.nodes_[self];
    auto ga = g.grad_of(node.inputs[0]);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += factor * node.grad[i];
  });
}

Var Graph::uniform_prior_kl(Var probs) {
  std::vector<double> means = kernels::column_means(value(probs));
  const double r = kernels::uniform_prior_kl(means);
  return push(Tensor({1}, {r}), {probs.id}, [means](Graph& g, std::size_t self) {
    const auto& node = g.nodes_[self];
    const std::size_t pi = node.inputs[0];
    const Tensor& p = g.nodes_[pi].value;
    auto gp = g.grad_of(pi);
    const std::size_t rows = p.rows(), cols = p.cols();
    const double prior = 1.0 / static_cast<double>(cols);
    for (std::size_t c = 0; c < cols; ++c) {
      if (means[c] <= kernels::kLogFloor) continue;
      const double d = -node.grad[0] * prior / means[c] / static_cast<double>(rows);
      for (std::size_t r = 0; r < rows; ++r) gp[r * cols + c] += d;
    }
  });
}

Var Graph::sum_squared_error(Var pred, const Tensor& target) {
  const Tensor& pv = value(pred);
  require(pv.shape() == target.shape(), "sum_squared_error: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double e = pv[i] - target[i];
    acc += e * e;
  }
  return push(Tensor({1}, {acc}), {pred.id}, [target](Graph& g, std::size_t self) {
    const auto& node = g.nodes_[self];
    const std::size_t pi = node.inputs[0];
    const Tensor& pv = g.nodes_[pi].value;
    auto gp = g.grad_of(pi);
    for (std::size_t i = 0; i < gp.size(); ++i)
      gp[i] += 2.0 * (pv[i] - target[i]) * node.grad[0];
  });
}

void Graph::backward(Var loss) {
  check_open();
  if (value(loss).size() != 1) {
    throw std::invalid_argument("backward requires a scalar loss, got " +
                                shape_string(value(loss).shape()));
  }
  differentiated_ = true;
  if (nodes_[loss.id].requires_grad) {
    grad_of(loss.id)[0] = 1.0;
    for (std::size_t id = loss.id + 1; id-- > 0;) {
      Node& node = nodes_[id];
      if (node.backward && !node.grad.empty()) node.backward(*this, id);
    }
  }
  // Parameters the loss does not depend on still receive an explicit zero.
  for (Node& node : nodes_) {
    if (node.bound == nullptr) continue;
    auto dst = node.bound->ensure_grad();
    for (std::size_t i = 0; i < node.grad.size(); ++i) dst[i] += node.grad[i];
  }
}

}  // namespace noisylab
