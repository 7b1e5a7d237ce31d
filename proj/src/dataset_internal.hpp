#pragma once

#include <random>
#include <span>
#include <vector>

#include "noisylab/dataset.hpp"

namespace noisylab::detail {

/// Per-class shuffle; the first round(fraction * n_c) members of each class
/// become validation rows.
std::vector<Split> stratified_split(std::span<const int> labels, std::size_t classes,
                                    double validation_fraction, std::mt19937_64& rng);

/// Standardizes all rows in place with statistics from `reference_rows`.
/// Columns with standard deviation below 1e-12 keep scale 1.
Standardization standardize(Tensor& features, std::span<const std::size_t> reference_rows);

}  // namespace noisylab::detail
