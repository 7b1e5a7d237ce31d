#include "noisylab/train_plan.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>

namespace noisylab {

namespace {

constexpr std::array<std::pair<Variant, std::string_view>, 11> kVariantNames{{
    {Variant::ce, "CE"},
    {Variant::st_s, "ST-S"},
    {Variant::st_h, "ST-H"},
    {Variant::dy_s, "DY-S"},
    {Variant::dy_h, "DY-H"},
    {Variant::m, "M"},
    {Variant::m_dyr_s, "M-DYR-S"},
    {Variant::m_dyr_h, "M-DYR-H"},
    {Variant::md_dyr_h, "MD-DYR-H"},
    {Variant::md_dyr_sh, "MD-DYR-SH"},
    {Variant::fixed_w, "FIXED-W"},
}};

// Landmarks of the reference schedules, in reference epochs.
struct Reference {
  double length;
  double warmup;
  std::vector<double> drops;
};

const Reference& reference(ScheduleKind k) {
  static const Reference short_ref{120.0, 30.0, {30.0, 80.0, 110.0}};
  static const Reference long_ref{300.0, 105.0, {100.0, 250.0}};
  return k == ScheduleKind::short_schedule ? short_ref : long_ref;
}

int rescale(double landmark, double length, int total) {
  return static_cast<int>(std::floor(landmark / length * total + 0.5));
}

}  // namespace

std::string_view to_string(Variant v) {
  for (const auto& [variant, name] : kVariantNames)
    if (variant == v) return name;
  return "?";
}

std::optional<Variant> parse_variant(std::string_view text) {
  for (const auto& [variant, name] : kVariantNames)
    if (name == text) return variant;
  return std::nullopt;
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> all = [] {
    std::vector<Variant> out;
    for (const auto& entry : kVariantNames) out.push_back(entry.first);
    return out;
  }();
  return all;
}

bool uses_mixup(Variant v) {
  switch (v) {
    case Variant::m:
    case Variant::m_dyr_s:
    case Variant::m_dyr_h:
    case Variant::md_dyr_h:
    case Variant::md_dyr_sh:
    case Variant::fixed_w:
      return true;
    default:
      return false;
  }
}

bool uses_dynamic_mixup(Variant v) { return v == Variant::md_dyr_h || v == Variant::md_dyr_sh; }
bool uses_temperature_decay(Variant v) { return v == Variant::md_dyr_sh; }
bool uses_bootstrapping(Variant v) { return v != Variant::ce && v != Variant::m; }

std::string_view to_string(ScheduleKind k) {
  return k == ScheduleKind::short_schedule ? "short" : "long";
}

std::optional<ScheduleKind> parse_schedule(std::string_view text) {
  if (text == "short") return ScheduleKind::short_schedule;
  if (text == "long") return ScheduleKind::long_schedule;
  return std::nullopt;
}

ScheduleKind default_schedule(Variant v) {
  return uses_mixup(v) ? ScheduleKind::long_schedule : ScheduleKind::short_schedule;
}

int default_epochs(ScheduleKind k) { return k == ScheduleKind::short_schedule ? 30 : 60; }

double LrSchedule::at(int epoch) const {
  double lr = initial;
  for (int drop : drop_epochs)
    if (epoch > drop) lr *= factor;
  return lr;
}

TrainPlan TrainPlan::make(Variant variant, std::uint64_t seed, int total_epochs,
                          std::optional<ScheduleKind> schedule) {
  TrainPlan p;
  p.variant = variant;
  p.seed = seed;
  p.schedule = schedule.value_or(default_schedule(variant));
  p.total_epochs = total_epochs > 0 ? total_epochs : default_epochs(p.schedule);

  const Reference& ref = reference(p.schedule);
  const int total = p.total_epochs;
  p.lr.drop_epochs.clear();
  for (double d : ref.drops) {
    const int e = rescale(d, ref.length, total);
    if (e >= 1 && e < total &&
        std::find(p.lr.drop_epochs.begin(), p.lr.drop_epochs.end(), e) == p.lr.drop_epochs.end()) {
      p.lr.drop_epochs.push_back(e);
    }
  }
  // The long reference warm-up (105 of 300) rounds to a third of the run;
  // keep it aligned with the first lr drop the way 105 follows 100.
  p.warmup_epochs = p.schedule == ScheduleKind::long_schedule
                        ? rescale(100.0, ref.length, total)
                        : rescale(ref.warmup, ref.length, total);
  p.warmup_epochs = std::clamp(p.warmup_epochs, 0, std::max(0, total - 1));
  p.bootstrap_start_epoch = p.warmup_epochs + 1;
  p.dyn_mixup_start_epoch = p.bootstrap_start_epoch;
  if (uses_dynamic_mixup(variant)) {
    // Dynamic mixup one epoch ahead of bootstrapping.
    p.bootstrap_start_epoch = std::min(p.dyn_mixup_start_epoch + 1, total);
  }
  p.temp_decay_end_epoch = std::max(rescale(200.0, 300.0, total), p.bootstrap_start_epoch + 1);
  return p;
}

void TrainPlan::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (total_epochs < 1) fail("epochs: must be at least 1");
  if (warmup_epochs < 0 || warmup_epochs >= total_epochs) {
    fail(fmt::format("warmup: {} must be below total epochs {}", warmup_epochs, total_epochs));
  }
  if (!(lr.initial > 0.0)) fail("lr: must be positive");
  if (!(lr.factor > 0.0)) fail("lr factor: must be positive");
  if (!(refit_period_epochs > 0.0)) fail("refit-period: must be positive");
  if (em_iterations < 1) fail("em-iterations: must be at least 1");
  if (!(mixup_alpha > 0.0)) fail("alpha-mixup: must be positive");
  if (!(eta >= 0.0)) fail("eta: must be nonnegative");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum: must lie in [0,1)");
  if (!(weight_decay >= 0.0)) fail("weight-decay: must be nonnegative");
  if (batch_size < 1) fail("batch-size: must be positive");
  if (uses_mixup(variant) && batch_size < 2) fail("batch-size: mixup needs at least 2");
  if (uses_bootstrapping(variant) &&
      (bootstrap_start_epoch < 1 || bootstrap_start_epoch > total_epochs)) {
    fail(fmt::format("bootstrap-start: {} outside [1, {}]", bootstrap_start_epoch, total_epochs));
  }
  if (uses_dynamic_mixup(variant)) {
    if (dyn_mixup_start_epoch < 1 || dyn_mixup_start_epoch > total_epochs) {
      fail(fmt::format("dyn-mixup-start: {} outside [1, {}]", dyn_mixup_start_epoch, total_epochs));
    }
    if (dyn_mixup_start_epoch > bootstrap_start_epoch) {
      fail("dyn-mixup-start: must not come after bootstrap-start");
    }
  }
  if (uses_temperature_decay(variant) && temp_decay_end_epoch <= bootstrap_start_epoch) {
    fail("temp-decay-end: must come after bootstrap-start");
  }
}

ObjectiveDescriptor epoch_objective(const TrainPlan& plan, int epoch) {
  if (epoch < 1 || epoch > plan.total_epochs) {
    throw std::invalid_argument(fmt::format("epoch {} outside [1, {}]", epoch, plan.total_epochs));
  }
  ObjectiveDescriptor d;
  const bool boot_active = epoch >= plan.bootstrap_start_epoch;
  const bool st_active = epoch > plan.warmup_epochs;

  auto mixup_ce = [&](Blend blend) {
    d.blend = blend;
    d.loss = LossForm::mixup;
    d.weights = WeightSource::none;
  };
  auto corrected = [&](Blend blend, WeightSource source, TargetMode targets) {
    d.blend = blend;
    d.loss = LossForm::mixup;
    d.weights = source;
    d.targets = targets;
    d.regularizer = true;
    d.eta = plan.eta;
  };

  switch (plan.variant) {
    case Variant::ce:
      break;
    case Variant::st_s:
    case Variant::st_h:
      if (st_active) {
        const bool hard = plan.variant == Variant::st_h;
        d.loss = LossForm::bootstrap;
        d.weights = WeightSource::constant;
        d.constant_weight = hard ? kStaticHardWeight : kStaticSoftWeight;
        d.targets = {hard ? TargetKind::hard : TargetKind::soft, 1.0};
      }
      break;
    case Variant::dy_s:
    case Variant::dy_h:
      if (boot_active) {
        d.loss = LossForm::bootstrap;
        d.weights = WeightSource::posterior;
        d.targets = {plan.variant == Variant::dy_h ? TargetKind::hard : TargetKind::soft, 1.0};
      }
      break;
    case Variant::m:
      mixup_ce(Blend::standard);
      break;
    case Variant::m_dyr_s:
    case Variant::m_dyr_h:
      if (boot_active) {
        corrected(Blend::standard, WeightSource::posterior,
                  {plan.variant == Variant::m_dyr_h ? TargetKind::hard : TargetKind::soft, 1.0});
      } else {
        mixup_ce(Blend::standard);
      }
      break;
    case Variant::md_dyr_h:
    case Variant::md_dyr_sh: {
      const Blend blend = epoch >= plan.dyn_mixup_start_epoch ? Blend::dynamic : Blend::standard;
      if (boot_active) {
        TargetMode mode{TargetKind::hard, 1.0};
        if (plan.variant == Variant::md_dyr_sh) {
          mode = {TargetKind::tempered,
                  temperature_schedule(epoch, plan.bootstrap_start_epoch, plan.temp_decay_end_epoch)};
        }
        corrected(blend, WeightSource::posterior, mode);
      } else {
        mixup_ce(blend);
      }
      break;
    }
    case Variant::fixed_w:
      if (boot_active) {
        corrected(Blend::standard, WeightSource::constant, {TargetKind::hard, 1.0});
        d.constant_weight = kStaticHardWeight;
      } else {
        mixup_ce(Blend::standard);
      }
      break;
  }
  return d;
}

ObjectiveDescriptor refit_objective() { return ObjectiveDescriptor{}; }

void check_objective_inputs(const ObjectiveDescriptor& objective, bool mixture_fitted) {
  if (objective.needs_mixture() && !mixture_fitted) {
    throw std::logic_error("objective needs loss-mixture posteriors but no mixture has been fitted");
  }
}

}  // namespace noisylab
