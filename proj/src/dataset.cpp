#include "noisylab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "dataset_internal.hpp"

namespace noisylab {

std::string_view to_string(NoiseCriterion criterion) {
  return criterion == NoiseCriterion::include_true ? "include_true" : "exclude_true";
}

std::optional<NoiseCriterion> parse_criterion(std::string_view text) {
  if (text == "include_true") return NoiseCriterion::include_true;
  if (text == "exclude_true") return NoiseCriterion::exclude_true;
  return std::nullopt;
}

std::string_view to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::gaussian_blobs: return "blobs";
    case SyntheticKind::concentric_rings: return "rings";
    case SyntheticKind::two_moons_like: return "moons";
  }
  return "?";
}

std::optional<SyntheticKind> parse_synthetic_kind(std::string_view text) {
  if (text == "blobs" || text == "gaussian_blobs") return SyntheticKind::gaussian_blobs;
  if (text == "rings" || text == "concentric_rings") return SyntheticKind::concentric_rings;
  if (text == "moons" || text == "two_moons_like") return SyntheticKind::two_moons_like;
  return std::nullopt;
}

std::size_t EvaluationView::corrupted_count() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), true));
}

NoisyDataset::NoisyDataset(Tensor features, std::vector<int> labels, std::vector<Split> splits,
                           std::size_t classes, std::uint64_t seed)
    : features_(std::move(features)),
      observed_(std::move(labels)),
      splits_(std::move(splits)),
      classes_(classes),
      seed_(seed) {
  if (features_.rank() != 2) throw std::invalid_argument("features must be a matrix");
  const std::size_t n = features_.rows();
  if (observed_.size() != n || splits_.size() != n) {
    throw std::invalid_argument(fmt::format("dataset: {} rows, {} labels, {} split tags", n,
                                            observed_.size(), splits_.size()));
  }
  if (classes_ < 2) throw std::invalid_argument("dataset needs at least 2 classes");
  for (int y : observed_) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes_) {
      throw std::invalid_argument(fmt::format("label {} outside [0, {})", y, classes_));
    }
  }
  true_ = observed_;
  mask_.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    (splits_[i] == Split::train ? train_ : validation_).push_back(i);
  }
}

namespace detail {

std::vector<Split> stratified_split(std::span<const int> labels, std::size_t classes,
                                    double validation_fraction, std::mt19937_64& rng) {
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must lie in [0, 1)");
  }
  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<Split> out(labels.size(), Split::train);
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_val = static_cast<std::size_t>(
        std::floor(validation_fraction * static_cast<double>(members.size()) + 0.5));
    for (std::size_t k = 0; k < n_val && k < members.size(); ++k) out[members[k]] = Split::validation;
  }
  return out;
}

Standardization standardize(Tensor& features, std::span<const std::size_t> reference_rows) {
  const std::size_t d = features.cols();
  Standardization s{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  if (reference_rows.empty()) return s;
  const auto n = static_cast<double>(reference_rows.size());
  for (std::size_t r : reference_rows)
    for (std::size_t c = 0; c < d; ++c) s.mean[c] += features.at(r, c);
  for (double& m : s.mean) m /= n;
  std::vector<double> var(d, 0.0);
  for (std::size_t r : reference_rows)
    for (std::size_t c = 0; c < d; ++c) {
      const double e = features.at(r, c) - s.mean[c];
      var[c] += e * e;
    }
  for (std::size_t c = 0; c < d; ++c) {
    const double sd = std::sqrt(var[c] / n);
    s.scale[c] = sd > 1e-12 ? sd : 1.0;
  }
  for (std::size_t r = 0; r < features.rows(); ++r)
    for (std::size_t c = 0; c < d; ++c)
      features.at(r, c) = (features.at(r, c) - s.mean[c]) / s.scale[c];
  return s;
}

}  // namespace detail

namespace {

void validate(const SyntheticSpec& spec) {
  if (spec.classes < 2) throw std::invalid_argument("synthetic data needs at least 2 classes");
  if (spec.samples < spec.classes * 10) {
    throw std::invalid_argument(fmt::format("synthetic data needs N >= 10*C ({} < {})",
                                            spec.samples, spec.classes * 10));
  }
  if (spec.dim < 1) throw std::invalid_argument("synthetic data needs D >= 1");
  if (spec.kind != SyntheticKind::gaussian_blobs && spec.dim < 2) {
    throw std::invalid_argument("rings and moons need D >= 2");
  }
}

std::vector<std::vector<double>> draw_centers(const SyntheticSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> centers(spec.classes, std::vector<double>(spec.dim));
  for (auto& c : centers)
    for (double& v : c) v = spec.blob_spread * normal(rng);
  return centers;
}

}  // namespace

std::vector<std::vector<double>> blob_centers(const SyntheticSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  return draw_centers(spec, rng);
}

NoisyDataset make_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Centers come first in the stream so blob_centers() can replay them.
  const auto centers = draw_centers(spec, rng);

  std::vector<int> labels(spec.samples);
  for (std::size_t i = 0; i < spec.samples; ++i) labels[i] = static_cast<int>(i % spec.classes);
  std::shuffle(labels.begin(), labels.end(), rng);

  Tensor features({spec.samples, spec.dim});
  for (std::size_t i = 0; i < spec.samples; ++i) {
    const int y = labels[i];
    auto x = features.row(i);
    switch (spec.kind) {
      case SyntheticKind::gaussian_blobs:
        for (std::size_t c = 0; c < spec.dim; ++c) x[c] = centers[y][c] + normal(rng);
        break;
      case SyntheticKind::concentric_rings: {
        const double radius = 1.0 + static_cast<double>(y);
        const double angle = 2.0 * std::numbers::pi * unit(rng);
        x[0] = radius * std::cos(angle) + 0.1 * normal(rng);
        x[1] = radius * std::sin(angle) + 0.1 * normal(rng);
        for (std::size_t c = 2; c < spec.dim; ++c) x[c] = 0.5 * normal(rng);
        break;
      }
      case SyntheticKind::two_moons_like: {
        // Interleaved half circles, alternately facing up and down.
        const double t = std::numbers::pi * unit(rng);
        const bool flip = (y % 2) == 1;
        x[0] = static_cast<double>(y) + std::cos(t) + 0.1 * normal(rng);
        x[1] = (flip ? 0.5 - std::sin(t) : std::sin(t)) + 0.1 * normal(rng);
        for (std::size_t c = 2; c < spec.dim; ++c) x[c] = 0.5 * normal(rng);
        break;
      }
    }
  }

  auto splits = detail::stratified_split(labels, spec.classes, spec.validation_fraction, rng);
  std::vector<std::size_t> all(spec.samples);
  std::iota(all.begin(), all.end(), std::size_t{0});
  Standardization st = detail::standardize(features, all);

  NoisyDataset ds(std::move(features), std::move(labels), std::move(splits), spec.classes,
                  spec.seed);
  ds.set_standardization(std::move(st));
  return ds;
}

std::vector<std::vector<std::size_t>> batches(std::span<const std::size_t> indices,
                                              std::size_t batch_size, std::uint64_t seed,
                                              int epoch, bool mixup_active) {
  if (indices.empty()) throw std::invalid_argument("cannot batch an empty split");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (mixup_active && batch_size < 2) {
    throw std::invalid_argument("mixup pairing needs batch size >= 2");
  }
  std::vector<std::size_t> order(indices.begin(), indices.end());
  std::mt19937_64 rng(seed ^ static_cast<std::uint64_t>(epoch));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t stop = std::min(order.size(), start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return out;
}

void write_snapshot(std::ostream& out, const NoisyDataset& dataset) {
  nlohmann::ordered_json header;
  header["N"] = dataset.size();
  header["D"] = dataset.dim();
  header["C"] = dataset.classes();
  header["seed"] = dataset.seed();
  if (dataset.noise()) {
    header["noise"] = {{"rate", dataset.noise()->rate},
                       {"criterion", std::string(to_string(dataset.noise()->criterion))},
                       {"seed", dataset.noise()->seed}};
  } else {
    header["noise"] = nullptr;
  }
  out << "# " << header.dump() << '\n';
  out << "split,observed_label,true_label";
  for (std::size_t c = 0; c < dataset.dim(); ++c) out << ",f" << c;
  out << '\n';
  const auto truth = dataset.evaluation().true_labels();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out << (dataset.splits()[i] == Split::train ? "train" : "validation") << ','
        << dataset.observed_labels()[i] << ',' << truth[i];
    for (double v : dataset.features().row(i)) fmt::print(out, ",{}", v);
    out << '\n';
  }
}

NoisyDataset read_snapshot(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw std::runtime_error("snapshot: missing header line");
  }
  const auto header = nlohmann::json::parse(line.substr(2));
  const auto n = header.at("N").get<std::size_t>();
  const auto d = header.at("D").get<std::size_t>();
  const auto classes = header.at("C").get<std::size_t>();
  const auto seed = header.at("seed").get<std::uint64_t>();
  std::getline(in, line);  // column names

  Tensor features({n, d});
  std::vector<int> observed(n), truth(n);
  std::vector<Split> splits(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error(fmt::format("snapshot: missing row {}", i));
    std::stringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    if (cell != "train" && cell != "validation") {
      throw std::runtime_error(fmt::format("snapshot row {}: bad split '{}'", i, cell));
    }
    splits[i] = cell == "train" ? Split::train : Split::validation;
    std::getline(row, cell, ',');
    observed[i] = std::stoi(cell);
    std::getline(row, cell, ',');
    truth[i] = std::stoi(cell);
    for (std::size_t c = 0; c < d; ++c) {
      if (!std::getline(row, cell, ',')) {
        throw std::runtime_error(fmt::format("snapshot row {}: expected {} features", i, d));
      }
      features.at(i, c) = std::stod(cell);
    }
  }
  NoisyDataset ds(std::move(features), truth, std::move(splits), classes, seed);
  ds.observed_ = std::move(observed);
  for (std::size_t i = 0; i < n; ++i) ds.mask_[i] = ds.observed_[i] != ds.true_[i];
  if (!header.at("noise").is_null()) {
    const auto& nz = header.at("noise");
    const auto criterion = parse_criterion(nz.at("criterion").get<std::string>());
    if (!criterion) throw std::runtime_error("snapshot: unknown noise criterion");
    ds.noise_ = NoiseSpec{nz.at("rate").get<double>(), *criterion, nz.at("seed").get<std::uint64_t>()};
  }
  return ds;
}

}  // namespace noisylab
