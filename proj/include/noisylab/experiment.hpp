#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "noisylab/config.hpp"
#include "noisylab/loss_trace.hpp"
#include "noisylab/mixture.hpp"
#include "noisylab/trainer.hpp"

namespace noisylab {

enum ExitCode : int { exit_ok = 0, exit_usage = 2, exit_io = 3, exit_numerical = 4 };

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOutcome {
  TrainPlan plan;
  RunResult result;
  std::filesystem::path dir;
};

/// Trains one configuration and writes config.txt, metrics.csv,
/// summary.json and (if enabled) loss_trace.csv into `dir`.
RunOutcome execute_run(const RunConfig& config, const std::filesystem::path& dir);

/// Directory name of one matrix cell, e.g. "M-DYR-H_n0.8_s1".
std::string run_dir_name(Variant variant, double noise, std::uint64_t seed);

/// Expands the matrix axes into single-run configs.
std::vector<RunConfig> expand_matrix(const RunConfig& config);

struct AggregateRow {
  Variant variant = Variant::ce;
  double noise_rate = 0.0;
  double best_mean = 0.0;
  double last_mean = 0.0;
  std::size_t runs = 0;
};

/// Per child metrics file: best = max val_acc, last = final row; averaged
/// over seeds per (variant, noise).
std::vector<AggregateRow> aggregate_runs(const std::vector<RunConfig>& runs,
                                         const std::filesystem::path& root);

struct FitTraceReport {
  int epoch = 0;
  std::size_t samples = 0;
  bool degenerate = false;
  BetaMixture bmm;
  GaussMixture gmm;
  std::optional<double> bmm_auc;
  std::optional<double> gmm_auc;
  struct Bin {
    double lo = 0.0;
    double hi = 0.0;
    double empirical = 0.0;
    double bmm_pdf = 0.0;
    double gmm_pdf = 0.0;
  };
  std::vector<Bin> histogram;
};

/// Fits both mixtures to the normalized losses of one epoch of a trace
/// (default: the last epoch present).
FitTraceReport fit_trace(const std::vector<LossTraceRow>& rows, std::optional<int> epoch = std::nullopt,
                         std::size_t bins = 20);
void print_fit_trace(std::ostream& out, const FitTraceReport& report);

/// Command entry points. Errors are reported on `err` and mapped to exit codes.
int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_matrix(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_fit_trace(const std::filesystem::path& trace, std::optional<int> epoch, std::size_t bins,
                  std::ostream& out, std::ostream& err);

}  // namespace noisylab
