#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "noisylab/dataset.hpp"
#include "noisylab/loss_trace.hpp"
#include "noisylab/metrics.hpp"
#include "noisylab/mixture.hpp"
#include "noisylab/mlp.hpp"
#include "noisylab/train_plan.hpp"

namespace noisylab {

struct EpochMetrics {
  int epoch = 0;
  double mean_train_loss = 0.0;
  double validation_accuracy = 0.0;
  double learning_rate = 0.0;
  std::optional<double> clean_noisy_auc;
  /// Same epochs, scored by a two-Gaussian fit of the same losses.
  std::optional<double> gmm_auc;
  std::optional<BetaMixture> bmm;
  double temperature = 1.0;
  Quartiles clean_loss;
  Quartiles noisy_loss;
  bool diverged = false;
};

struct RunSummary {
  double best_accuracy = 0.0;
  int best_epoch = 0;
  double last_accuracy = 0.0;
  bool diverged = false;
  std::optional<int> diverged_epoch;
};

struct RunResult {
  std::vector<EpochMetrics> epochs;
  RunSummary summary;
};

/// Raised when a numerical failure happens outside the training loss itself
/// (for example non-finite losses reaching the mixture fit).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunHooks {
  /// Called after each epoch's plain cross-entropy pass with one row per
  /// training sample.
  std::function<void(const std::vector<LossTraceRow>&)> loss_trace;
  std::function<void(const EpochMetrics&)> on_epoch;
};

/// Trains `model` in place. A non-finite training loss stops the run after
/// recording the epoch it happened in; the result is flagged as diverged.
RunResult run(const TrainPlan& plan, const NoisyDataset& dataset, Mlp& model,
              const RunHooks& hooks = {});

/// Argmax accuracy against the true labels of a split.
double evaluate(const Mlp& model, const NoisyDataset& dataset, Split split);

/// Fraction of positions where predicted equals truth. Throws on size
/// mismatch or empty input.
double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// Per-sample plain cross-entropy of `rows` against their observed labels.
std::vector<double> observed_label_losses(const Mlp& model, const NoisyDataset& dataset,
                                          std::span<const std::size_t> rows);

inline constexpr const char* kMetricsHeader =
    "epoch,variant,noise_rate,criterion,mean_train_loss,val_acc,auc,lambda0,alpha0,beta0,"
    "alpha1,beta1,T,clean_q25,clean_q50,clean_q75,noisy_q25,noisy_q50,noisy_q75";

struct RunLabels {
  Variant variant = Variant::ce;
  double noise_rate = 0.0;
  NoiseCriterion criterion = NoiseCriterion::include_true;
};

/// Metrics CSV. Mixture columns list the clean component first; absent
/// values are empty fields.
void write_metrics_csv(std::ostream& out, const RunLabels& labels,
                       const std::vector<EpochMetrics>& epochs);

/// One-object JSON record: best/last accuracy, best epoch, divergence and
/// the AUC trajectory.
std::string summary_json(const RunLabels& labels, const TrainPlan& plan, const RunResult& result);

}  // namespace noisylab
