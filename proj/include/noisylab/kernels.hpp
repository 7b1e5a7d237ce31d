#pragma once

// Value kernels shared by the recorded (differentiable) path and the plain
// evaluation path. Both paths call these so that their results agree bit for
// bit.

#include <span>
#include <vector>

#include "noisylab/tensor.hpp"

namespace noisylab::kernels {

/// Lower clamp applied to probabilities before taking logarithms.
inline constexpr double kLogFloor = 1e-12;

/// Row-wise softmax of scores / temperature with row-max subtraction.
Tensor softmax_rows(const Tensor& scores, double temperature);

/// Per-row -sum_c targets[r,c] * log(max(probs[r,c], kLogFloor)).
std::vector<double> soft_target_nll(const Tensor& probs, const Tensor& targets);

/// Element-wise coef*a + (1-coef)*b.
std::vector<double> convex_combine(std::span<const double> a,
                                   std::span<const double> b,
                                   std::span<const double> coef);

/// Arithmetic mean accumulated left to right.
double mean(std::span<const double> values);

/// Column means of a rank-2 tensor.
std::vector<double> column_means(const Tensor& probs);

/// KL(uniform || mean_probs) with log clamp.
double uniform_prior_kl(std::span<const double> mean_probs);

}  // namespace noisylab::kernels
