#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "noisylab/tensor.hpp"

namespace noisylab {

enum class Split : std::uint8_t { train, validation };
enum class NoiseCriterion { include_true, exclude_true };
enum class SyntheticKind { gaussian_blobs, concentric_rings, two_moons_like };

std::string_view to_string(NoiseCriterion criterion);
std::optional<NoiseCriterion> parse_criterion(std::string_view text);
std::string_view to_string(SyntheticKind kind);
std::optional<SyntheticKind> parse_synthetic_kind(std::string_view text);

struct NoiseSpec {
  double rate = 0.0;
  NoiseCriterion criterion = NoiseCriterion::include_true;
  std::uint64_t seed = 0;

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::gaussian_blobs;
  std::size_t samples = 1000;
  std::size_t dim = 2;
  std::size_t classes = 2;
  std::uint64_t seed = 0;
  double validation_fraction = 0.2;
  /// Standard deviation of blob centers around the origin (unit-variance blobs).
  double blob_spread = 1.0;

  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

/// Per-dimension affine map applied to the raw features: (x - mean) / scale.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;
};

class NoisyDataset;

/// Ground truth kept away from the training objective. Only metric and
/// evaluation code asks for it.
class EvaluationView {
 public:
  std::span<const int> true_labels() const { return true_labels_; }
  const std::vector<bool>& corruption_mask() const { return mask_; }
  std::size_t corrupted_count() const;

 private:
  friend class NoisyDataset;
  EvaluationView(std::span<const int> labels, const std::vector<bool>& mask)
      : true_labels_(labels), mask_(mask) {}

  std::span<const int> true_labels_;
  const std::vector<bool>& mask_;
};

class NoisyDataset {
 public:
  /// A clean dataset: observed labels equal true labels.
  NoisyDataset(Tensor features, std::vector<int> labels, std::vector<Split> splits,
               std::size_t classes, std::uint64_t seed = 0);

  std::size_t size() const { return features_.rows(); }
  std::size_t dim() const { return features_.cols(); }
  std::size_t classes() const { return classes_; }
  std::uint64_t seed() const { return seed_; }

  const Tensor& features() const { return features_; }
  std::span<const int> observed_labels() const { return observed_; }
  std::span<const Split> splits() const { return splits_; }
  const std::vector<std::size_t>& train_indices() const { return train_; }
  const std::vector<std::size_t>& validation_indices() const { return validation_; }
  const std::optional<NoiseSpec>& noise() const { return noise_; }
  const Standardization& standardization() const { return standardization_; }
  void set_standardization(Standardization s) { standardization_ = std::move(s); }

  EvaluationView evaluation() const { return EvaluationView(true_, mask_); }

  friend NoisyDataset inject_noise(const NoisyDataset& dataset, const NoiseSpec& spec);
  friend NoisyDataset read_snapshot(std::istream& in);

 private:
  Tensor features_;
  std::vector<int> observed_;
  std::vector<int> true_;
  std::vector<bool> mask_;
  std::vector<Split> splits_;
  std::vector<std::size_t> train_;
  std::vector<std::size_t> validation_;
  std::size_t classes_ = 0;
  std::uint64_t seed_ = 0;
  std::optional<NoiseSpec> noise_;
  Standardization standardization_;
};

/// Seeded generator; classes balanced within one sample, features
/// standardized per dimension, stratified train/validation split.
NoisyDataset make_synthetic(const SyntheticSpec& spec);

/// Raw (pre-standardization) blob centers used by make_synthetic.
std::vector<std::vector<double>> blob_centers(const SyntheticSpec& spec);

class TabularError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a headed CSV. Labels (any text) map to class indices by first
/// appearance; all other columns must be numeric. Features are standardized
/// with statistics of the train split only.
NoisyDataset ingest_tabular(const std::string& path, const std::string& label_column,
                            double validation_fraction = 0.2, std::uint64_t seed = 0);
NoisyDataset ingest_tabular(std::istream& in, const std::string& label_column,
                            double validation_fraction = 0.2, std::uint64_t seed = 0);

/// Corrupts round-half-up(rate * N_train) seeded train labels. include_true
/// redraws over all classes, exclude_true over the other C-1. Validation rows
/// and features are never touched.
NoisyDataset inject_noise(const NoisyDataset& dataset, const NoiseSpec& spec);

/// Seeded per-epoch shuffle of `indices` cut into batches; the last short
/// batch is kept.
std::vector<std::vector<std::size_t>> batches(std::span<const std::size_t> indices,
                                              std::size_t batch_size, std::uint64_t seed,
                                              int epoch, bool mixup_active = false);

/// Snapshot: one '#'-prefixed JSON header line with N, D, C, seed and the
/// noise spec, then `split,observed_label,true_label,f0..`.
void write_snapshot(std::ostream& out, const NoisyDataset& dataset);
NoisyDataset read_snapshot(std::istream& in);

}  // namespace noisylab
