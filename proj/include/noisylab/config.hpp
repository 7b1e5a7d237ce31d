#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "noisylab/dataset.hpp"
#include "noisylab/mlp.hpp"
#include "noisylab/train_plan.hpp"

namespace noisylab {

/// Blob center spread of the desk-scale benchmark.
inline constexpr double kBenchmarkBlobSpread = 0.7;

/// A bad configuration value; key() names the offending setting.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& what);
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Everything a run (or a matrix of runs) needs. Keys in the flat file format
/// match the command-line flag names.
struct RunConfig {
  std::string dataset = "blobs";  // blobs | rings | moons | csv
  std::string csv_path;
  std::string label_col = "label";
  std::size_t samples = 10000;
  std::size_t dim = 16;
  std::size_t classes = 10;
  double blob_spread = kBenchmarkBlobSpread;
  double validation_fraction = 0.2;

  double noise = 0.0;
  NoiseCriterion criterion = NoiseCriterion::include_true;

  Variant variant = Variant::ce;
  std::optional<ScheduleKind> schedule;
  int epochs = 0;  // 0: schedule default
  double lr = 0.1;
  std::optional<std::vector<int>> lr_drops;
  double lr_factor = 0.1;
  std::optional<int> warmup;
  std::optional<int> dyn_mixup_start;
  std::optional<int> bootstrap_start;
  std::optional<int> temp_decay_end;
  double alpha_mixup = kDefaultMixupAlpha;
  double eta = kDefaultEta;
  double refit_period = 1.0;
  int em_iterations = 10;
  std::size_t batch_size = 128;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;

  std::vector<std::size_t> hidden{64, 64};
  std::string out = "runs";
  int workers = 1;
  bool loss_trace = false;

  // Matrix axes; empty means "use the single-run value".
  std::vector<Variant> variants;
  std::vector<double> noise_rates;
  std::vector<std::uint64_t> seeds;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Setting names accepted by apply_setting, in render order.
const std::vector<std::string>& config_keys();

/// Parses `value` into the field named `key`. Throws ConfigError.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// `key=value` lines; '#' starts a comment line.
RunConfig parse_config(std::string_view text, RunConfig base = {});
std::string render_config(const RunConfig& config);

/// Rejects contradictory settings (e.g. a temperature endpoint on a variant
/// that has no temperature decay).
void validate_config(const RunConfig& config);

/// Seed streams derived from the run seed.
std::uint64_t data_seed(const RunConfig& config);
std::uint64_t noise_seed(const RunConfig& config);
std::uint64_t model_seed(const RunConfig& config);

TrainPlan build_plan(const RunConfig& config);
NoisyDataset build_dataset(const RunConfig& config);
Mlp build_model(const RunConfig& config, const NoisyDataset& dataset);

}  // namespace noisylab
