#include "noisylab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace noisylab::kernels {

Tensor softmax_rows(const Tensor& scores, double temperature) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("softmax temperature must be positive");
  }
  Tensor out(scores.shape());
  const std::size_t rows = scores.rows();
  for (std::size_t r = 0; r < rows; ++r) {
    auto in = scores.row(r);
    auto dst = out.row(r);
    const double top = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      dst[c] = std::exp((in[c] - top) / temperature);
      total += dst[c];
    }
    for (double& v : dst) v /= total;
  }
  return out;
}

std::vector<double> soft_target_nll(const Tensor& probs, const Tensor& targets) {
  if (probs.shape() != targets.shape() || probs.rank() != 2) {
    throw std::invalid_argument("cross-entropy shape mismatch: probabilities " +
                                shape_string(probs.shape()) + " vs targets " +
                                shape_string(targets.shape()));
  }
  std::vector<double> out(probs.rows(), 0.0);
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    auto p = probs.row(r);
    auto t = targets.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
      if (t[c] != 0.0) acc -= t[c] * std::log(std::max(p[c], kLogFloor));
    }
    out[r] = acc;
  }
  return out;
}

std::vector<double> convex_combine(std::span<const double> a,
                                   std::span<const double> b,
                                   std::span<const double> coef) {
  if (a.size() != b.size() || a.size() != coef.size()) {
    throw std::invalid_argument("convex_combine length mismatch");
  }
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = coef[i] * a[i] + (1.0 - coef[i]) * b[i];
  }
  return out;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean of empty sequence");
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

std::vector<double> column_means(const Tensor& probs) {
  std::vector<double> out(probs.cols(), 0.0);
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    auto p = probs.row(r);
    for (std::size_t c = 0; c < p.size(); ++c) out[c] += p[c];
  }
  for (double& v : out) v /= static_cast<double>(probs.rows());
  return out;
}

double uniform_prior_kl(std::span<const double> mean_probs) {
  const double prior = 1.0 / static_cast<double>(mean_probs.size());
  double acc = 0.0;
  for (double h : mean_probs) {
    acc += prior * std::log(prior / std::max(h, kLogFloor));
  }
  return acc;
}

}  // namespace noisylab::kernels
