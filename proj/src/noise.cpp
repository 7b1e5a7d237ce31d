#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "noisylab/dataset.hpp"

namespace noisylab {

NoisyDataset inject_noise(const NoisyDataset& dataset, const NoiseSpec& spec) {
  if (!(spec.rate >= 0.0 && spec.rate <= 1.0)) {
    throw std::invalid_argument(fmt::format("noise rate {} outside [0,1]", spec.rate));
  }
  NoisyDataset out = dataset;
  out.observed_ = out.true_;
  std::fill(out.mask_.begin(), out.mask_.end(), false);
  out.noise_ = spec;

  std::vector<std::size_t> candidates = out.train_;
  const auto count = static_cast<std::size_t>(
      std::floor(spec.rate * static_cast<double>(candidates.size()) + 0.5));
  std::mt19937_64 rng(spec.seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);

  const int classes = static_cast<int>(out.classes_);
  std::uniform_int_distribution<int> any_class(0, classes - 1);
  std::uniform_int_distribution<int> other_class(0, classes - 2);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = candidates[k];
    const int truth = out.true_[i];
    int label = 0;
    if (spec.criterion == NoiseCriterion::include_true) {
      label = any_class(rng);
    } else {
      label = other_class(rng);
      if (label >= truth) ++label;
    }
    out.observed_[i] = label;
    out.mask_[i] = label != truth;
  }
  return out;
}

}  // namespace noisylab
