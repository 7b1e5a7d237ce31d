#pragma once

#include <optional>
#include <span>
#include <vector>

namespace noisylab {

/// ROC-AUC of `scores` as a detector of mask-true entries, by the
/// Mann-Whitney rank statistic with tied scores sharing average ranks.
/// Absent when the mask is all-true or all-false.
std::optional<double> clean_noisy_auc(std::span<const double> scores,
                                      const std::vector<bool>& mask);

/// Linearly interpolated quantile, q in [0,1]. Absent for empty input.
std::optional<double> quantile(std::vector<double> values, double q);

struct Quartiles {
  std::optional<double> q25;
  std::optional<double> q50;
  std::optional<double> q75;
};

Quartiles quartiles(std::vector<double> values);

}  // namespace noisylab
