#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "noisylab/losses.hpp"

namespace noisylab {

/// Training objectives. Names follow the usual shorthand: CE cross-entropy,
/// ST/DY static/dynamic bootstrapping, M mixup, MD dynamic mixup, DYR dynamic
/// bootstrapping plus class-prior regularizer, S/H/SH soft/hard/soft-to-hard.
enum class Variant {
  ce,
  st_s,
  st_h,
  dy_s,
  dy_h,
  m,
  m_dyr_s,
  m_dyr_h,
  md_dyr_h,
  md_dyr_sh,
  fixed_w,
};

std::string_view to_string(Variant v);
std::optional<Variant> parse_variant(std::string_view text);
const std::vector<Variant>& all_variants();

bool uses_mixup(Variant v);
bool uses_dynamic_mixup(Variant v);
bool uses_temperature_decay(Variant v);
bool uses_bootstrapping(Variant v);

/// Short: 4 phases over 120 units (drops at 30/80/110, warm-up 30).
/// Long: 300 units (drops at 100/250, warm-up 105). Both are rescaled to the
/// requested epoch count.
enum class ScheduleKind { short_schedule, long_schedule };

std::string_view to_string(ScheduleKind k);
std::optional<ScheduleKind> parse_schedule(std::string_view text);
ScheduleKind default_schedule(Variant v);
int default_epochs(ScheduleKind k);

struct LrSchedule {
  double initial = 0.1;
  std::vector<int> drop_epochs;  // lr is multiplied by factor for epochs after each entry
  double factor = 0.1;

  double at(int epoch) const;
  friend bool operator==(const LrSchedule&, const LrSchedule&) = default;
};

struct TrainPlan {
  Variant variant = Variant::ce;
  ScheduleKind schedule = ScheduleKind::short_schedule;
  int total_epochs = 30;
  LrSchedule lr;
  int warmup_epochs = 8;
  int dyn_mixup_start_epoch = 9;
  int bootstrap_start_epoch = 9;
  int temp_decay_end_epoch = 20;
  double mixup_alpha = kDefaultMixupAlpha;
  double eta = kDefaultEta;
  double refit_period_epochs = 1.0;
  int em_iterations = 10;
  std::size_t batch_size = 128;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;

  /// Default plan for a variant, with every epoch landmark rescaled to
  /// `total_epochs` (0 picks the schedule's default length).
  static TrainPlan make(Variant variant, std::uint64_t seed, int total_epochs = 0,
                        std::optional<ScheduleKind> schedule = std::nullopt);

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  friend bool operator==(const TrainPlan&, const TrainPlan&) = default;
};

enum class Blend { none, standard, dynamic };
enum class LossForm { cross_entropy, bootstrap, mixup };
enum class WeightSource { none, constant, posterior };

/// What a given epoch trains on.
struct ObjectiveDescriptor {
  Blend blend = Blend::none;
  LossForm loss = LossForm::cross_entropy;
  WeightSource weights = WeightSource::none;
  double constant_weight = 0.0;
  TargetMode targets{TargetKind::hard, 1.0};
  bool regularizer = false;
  double eta = 0.0;

  bool needs_mixture() const {
    return weights == WeightSource::posterior || blend == Blend::dynamic;
  }
};

/// Objective for `epoch` (1-based). Throws for epochs outside the plan.
ObjectiveDescriptor epoch_objective(const TrainPlan& plan, int epoch);

/// The loss the mixture is always fitted on: plain cross-entropy against the
/// observed labels, whatever the variant.
ObjectiveDescriptor refit_objective();

/// Rejects objectives that need a mixture when none has been fitted yet.
void check_objective_inputs(const ObjectiveDescriptor& objective, bool mixture_fitted);

}  // namespace noisylab
