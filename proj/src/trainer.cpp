#include "noisylab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "noisylab/kernels.hpp"
#include "noisylab/losses.hpp"
#include "noisylab/optimizer.hpp"

namespace noisylab {

namespace {

constexpr std::size_t kEvalChunk = 1024;
constexpr std::uint64_t kMixupStream = 0x6d69787570ULL;

struct MixtureState {
  BetaMixture bmm;
  double loss_scale = 1.0;  // max raw loss of the pass the fit used
};

std::vector<int> labels_at(std::span<const int> labels, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(labels[r]);
  return out;
}

Tensor scores_for(const Mlp& model, const Tensor& features, std::span<const std::size_t> rows) {
  Tensor out({rows.size(), model.class_count()});
  for (std::size_t start = 0; start < rows.size(); start += kEvalChunk) {
    const std::size_t stop = std::min(rows.size(), start + kEvalChunk);
    const std::vector<std::size_t> chunk(rows.begin() + static_cast<std::ptrdiff_t>(start),
                                         rows.begin() + static_cast<std::ptrdiff_t>(stop));
    const Tensor s = forward(model, gather_rows(features, chunk));
    std::copy(s.data().begin(), s.data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(start * model.class_count()));
  }
  return out;
}

std::vector<double> batch_noisy_weights(const ObjectiveDescriptor& obj, const Tensor& clean_scores,
                                        std::span<const int> labels, const MixtureState* state) {
  const std::size_t rows = labels.size();
  switch (obj.weights) {
    case WeightSource::none:
      return std::vector<double>(rows, 0.0);
    case WeightSource::constant:
      return std::vector<double>(rows, obj.constant_weight);
    case WeightSource::posterior: {
      const auto raw = cross_entropy(softmax(clean_scores), one_hot(labels, clean_scores.cols()));
      std::vector<double> w(rows);
      for (std::size_t i = 0; i < rows; ++i) {
        w[i] = posterior_noisy(state->bmm, normalize_loss(raw[i], state->loss_scale));
      }
      return w;
    }
  }
  return {};
}

// One optimizer step. Returns the batch loss; a non-finite value means the
// parameters were left untouched.
double train_step(const ObjectiveDescriptor& obj, const Tensor& inputs, std::span<const int> labels,
                  Mlp& model, SgdMomentum& opt, double lr, const MixtureState* state,
                  double mixup_alpha, std::mt19937_64& rng) {
  check_objective_inputs(obj, state != nullptr);
  const std::size_t classes = model.class_count();
  Graph g;
  Var loss{};

  if (obj.loss != LossForm::mixup) {
    Var scores = forward(g, model, inputs);
    Var probs = g.softmax(scores);
    Tensor targets;
    if (obj.loss == LossForm::cross_entropy) {
      targets = one_hot(labels, classes);
    } else {
      // Same-batch predictions serve as the detached perceptual targets.
      const Tensor& clean_scores = g.value(scores);
      auto w = batch_noisy_weights(obj, clean_scores, labels, state);
      const auto bt = make_batch_targets(labels, std::move(w), g.value(probs));
      targets = bootstrap_targets(bt, obj.targets.kind == TargetKind::soft ? BootstrapMode::soft
                                                                           : BootstrapMode::hard);
    }
    loss = g.mean(g.soft_target_nll(probs, targets));
  } else {
    const bool needs_clean = obj.weights != WeightSource::none || obj.blend == Blend::dynamic;
    Tensor clean_scores;
    if (needs_clean) clean_scores = forward(model, inputs);

    const auto partner = random_pairing(labels.size(), rng);
    MixedBatch mixed;
    if (obj.blend == Blend::dynamic) {
      const auto raw = cross_entropy(softmax(clean_scores), one_hot(labels, classes));
      std::vector<double> norm(raw.size());
      for (std::size_t i = 0; i < raw.size(); ++i) norm[i] = normalize_loss(raw[i], state->loss_scale);
      mixed = mixup_blend(inputs, partner, DynamicMixup{&state->bmm, norm}, rng);
    } else {
      mixed = mixup_blend(inputs, partner, StandardMixup{mixup_alpha}, rng);
    }

    Var probs = g.softmax(forward(g, model, mixed.inputs));
    if (obj.weights == WeightSource::none) {
      std::vector<int> partner_labels(labels.size());
      std::vector<double> deltas(labels.size());
      for (std::size_t i = 0; i < labels.size(); ++i) {
        partner_labels[i] = labels[partner[i]];
        deltas[i] = mixed.pairs[i].delta;
      }
      Var lp = g.soft_target_nll(probs, one_hot(labels, classes));
      Var lq = g.soft_target_nll(probs, one_hot(partner_labels, classes));
      loss = g.mean(g.convex_combine(lp, lq, deltas));
    } else {
      JointTargets joint;
      joint.labels.assign(labels.begin(), labels.end());
      joint.pairs = mixed.pairs;
      joint.noisy_weights = batch_noisy_weights(obj, clean_scores, labels, state);
      joint.clean_scores = &clean_scores;
      joint.mode = obj.targets;
      joint.classes = classes;
      loss = joint_corrected_loss(g, probs, joint);
    }
    if (obj.regularizer) loss = g.add(loss, g.scale(g.uniform_prior_kl(probs), obj.eta));
  }

  const double value = g.scalar(loss);
  if (!std::isfinite(value)) return value;
  g.backward(loss);
  opt.step(model, lr);
  return value;
}

MixtureState refit(std::span<const double> raw, int em_iterations) {
  for (double r : raw) {
    if (!std::isfinite(r)) throw NumericalError("non-finite loss reached the mixture fit");
  }
  MixtureState s;
  s.loss_scale = *std::max_element(raw.begin(), raw.end());
  std::vector<double> norm(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) norm[i] = normalize_loss(raw[i], s.loss_scale);
  s.bmm = fit_bmm(norm, EmOptions{em_iterations, 1e-6});
  return s;
}

std::string opt_field(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : ""; }

}  // namespace

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument(
        fmt::format("accuracy: {} predictions vs {} labels", predicted.size(), truth.size()));
  }
  if (predicted.empty()) throw std::invalid_argument("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double evaluate(const Mlp& model, const NoisyDataset& dataset, Split split) {
  const auto& rows =
      split == Split::train ? dataset.train_indices() : dataset.validation_indices();
  if (rows.empty()) throw std::invalid_argument("evaluate: empty split");
  const auto predicted = argmax_rows(scores_for(model, dataset.features(), rows));
  return accuracy(predicted, labels_at(dataset.evaluation().true_labels(), rows));
}

std::vector<double> observed_label_losses(const Mlp& model, const NoisyDataset& dataset,
                                          std::span<const std::size_t> rows) {
  const Tensor scores = scores_for(model, dataset.features(), rows);
  return cross_entropy(softmax(scores),
                       one_hot(labels_at(dataset.observed_labels(), rows), dataset.classes()));
}

RunResult run(const TrainPlan& plan, const NoisyDataset& dataset, Mlp& model,
              const RunHooks& hooks) {
  plan.validate();
  if (model.input_size() != dataset.dim() || model.class_count() != dataset.classes()) {
    throw std::invalid_argument(fmt::format("model {}->{} does not fit dataset D={} C={}",
                                            model.input_size(), model.class_count(),
                                            dataset.dim(), dataset.classes()));
  }
  const auto& train_rows = dataset.train_indices();
  if (train_rows.empty()) throw std::invalid_argument("run: empty training split");

  SgdMomentum opt(SgdConfig{plan.momentum, plan.weight_decay});
  std::mt19937_64 mix_rng(plan.seed ^ kMixupStream);
  std::optional<MixtureState> state;
  const auto eval = dataset.evaluation();
  const auto& mask_all = eval.corruption_mask();
  std::vector<bool> train_mask;
  train_mask.reserve(train_rows.size());
  for (std::size_t r : train_rows) train_mask.push_back(mask_all[r]);

  // Refits per epoch (period < 1) or epochs per refit (period >= 1).
  const bool sub_epoch = plan.refit_period_epochs < 1.0;
  const int per_epoch =
      sub_epoch ? std::max(1, static_cast<int>(std::lround(1.0 / plan.refit_period_epochs))) : 1;
  const int every = sub_epoch ? 1 : std::max(1, static_cast<int>(std::lround(plan.refit_period_epochs)));

  RunResult result;
  for (int epoch = 1; epoch <= plan.total_epochs; ++epoch) {
    const ObjectiveDescriptor obj = epoch_objective(plan, epoch);
    const double lr = plan.lr.at(epoch);
    const auto order = batches(train_rows, plan.batch_size, plan.seed, epoch, obj.blend != Blend::none);
    // A period longer than the warm-up would leave the first corrected epoch
    // without a mixture, so the end of warm-up always has one.
    const bool refit_this_epoch = epoch % every == 0 || (!state && epoch >= plan.warmup_epochs);

    EpochMetrics m;
    m.epoch = epoch;
    m.learning_rate = lr;
    m.temperature = obj.targets.kind == TargetKind::tempered ? obj.targets.temperature : 1.0;

    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < order.size(); ++b) {
      const auto& rows = order[b];
      const Tensor inputs = gather_rows(dataset.features(), rows);
      const auto labels = labels_at(dataset.observed_labels(), rows);
      const double value = train_step(obj, inputs, labels, model, opt, lr,
                                      state ? &*state : nullptr, plan.mixup_alpha, mix_rng);
      if (!std::isfinite(value)) {
        m.diverged = true;
        break;
      }
      loss_sum += value * static_cast<double>(rows.size());
      seen += rows.size();
      // Sub-epoch refits at evenly spaced batch positions; the last one
      // coincides with the end-of-epoch pass below.
      if (sub_epoch && b + 1 < order.size()) {
        const std::size_t slot = (b + 1) * static_cast<std::size_t>(per_epoch) / order.size();
        const std::size_t prev = b * static_cast<std::size_t>(per_epoch) / order.size();
        if (slot != prev) state = refit(observed_label_losses(model, dataset, train_rows), plan.em_iterations);
      }
    }

    if (m.diverged) {
      m.mean_train_loss = std::nan("");
      m.validation_accuracy = evaluate(model, dataset, Split::validation);
      if (state) m.bmm = state->bmm;
      result.summary.diverged = true;
      result.summary.diverged_epoch = epoch;
      result.epochs.push_back(m);
      if (hooks.on_epoch) hooks.on_epoch(m);
      break;
    }
    m.mean_train_loss = loss_sum / static_cast<double>(seen);

    const auto raw = observed_label_losses(model, dataset, train_rows);
    if (refit_this_epoch) state = refit(raw, plan.em_iterations);

    std::vector<double> clean_losses;
    std::vector<double> noisy_losses;
    for (std::size_t i = 0; i < raw.size(); ++i) (train_mask[i] ? noisy_losses : clean_losses).push_back(raw[i]);
    m.clean_loss = quartiles(clean_losses);
    m.noisy_loss = quartiles(noisy_losses);

    std::vector<double> posteriors(raw.size(), 0.5);
    const double scale = std::isfinite(*std::max_element(raw.begin(), raw.end()))
                             ? *std::max_element(raw.begin(), raw.end())
                             : 1.0;
    std::vector<double> norm(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) norm[i] = normalize_loss(raw[i], scale);
    if (state) {
      m.bmm = state->bmm;
      posteriors = posterior_noisy(state->bmm, norm);
      m.clean_noisy_auc = clean_noisy_auc(posteriors, train_mask);
      if (refit_this_epoch && norm.size() >= 10) {
        const GaussMixture gmm = fit_gmm(norm, EmOptions{plan.em_iterations, 1e-6});
        m.gmm_auc = clean_noisy_auc(gmm_posterior_noisy(gmm, norm), train_mask);
      }
    }
    m.validation_accuracy = evaluate(model, dataset, Split::validation);

    if (hooks.loss_trace) {
      std::vector<LossTraceRow> trace;
      trace.reserve(raw.size());
      for (std::size_t i = 0; i < raw.size(); ++i) {
        trace.push_back({epoch, train_rows[i], raw[i], norm[i], posteriors[i], train_mask[i]});
      }
      hooks.loss_trace(trace);
    }
    result.epochs.push_back(m);
    if (hooks.on_epoch) hooks.on_epoch(m);
  }

  auto& s = result.summary;
  for (const auto& m : result.epochs) {
    if (m.validation_accuracy > s.best_accuracy || s.best_epoch == 0) {
      s.best_accuracy = m.validation_accuracy;
      s.best_epoch = m.epoch;
    }
  }
  if (!result.epochs.empty()) s.last_accuracy = result.epochs.back().validation_accuracy;
  return result;
}

void write_metrics_csv(std::ostream& out, const RunLabels& labels,
                       const std::vector<EpochMetrics>& epochs) {
  out << kMetricsHeader << '\n';
  for (const auto& m : epochs) {
    std::string bmm_fields = ",,,,";
    if (m.bmm) {
      const int c = m.bmm->clean_component;
      const int n = m.bmm->noisy_component();
      bmm_fields = fmt::format("{},{},{},{},{}", m.bmm->lambda[c], m.bmm->alpha[c], m.bmm->beta[c],
                               m.bmm->alpha[n], m.bmm->beta[n]);
    }
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", m.epoch,
                       to_string(labels.variant), labels.noise_rate, to_string(labels.criterion),
                       m.mean_train_loss, m.validation_accuracy, opt_field(m.clean_noisy_auc),
                       bmm_fields, m.temperature, opt_field(m.clean_loss.q25),
                       opt_field(m.clean_loss.q50), opt_field(m.clean_loss.q75),
                       opt_field(m.noisy_loss.q25), opt_field(m.noisy_loss.q50),
                       opt_field(m.noisy_loss.q75));
  }
}

std::string summary_json(const RunLabels& labels, const TrainPlan& plan, const RunResult& result) {
  nlohmann::ordered_json j;
  j["variant"] = std::string(to_string(labels.variant));
  j["noise_rate"] = labels.noise_rate;
  j["criterion"] = std::string(to_string(labels.criterion));
  j["seed"] = plan.seed;
  j["epochs"] = plan.total_epochs;
  j["best_accuracy"] = result.summary.best_accuracy;
  j["best_epoch"] = result.summary.best_epoch;
  j["last_accuracy"] = result.summary.last_accuracy;
  j["diverged"] = result.summary.diverged;
  j["diverged_epoch"] = result.summary.diverged_epoch ? nlohmann::ordered_json(*result.summary.diverged_epoch)
                                                      : nlohmann::ordered_json(nullptr);
  auto traj = nlohmann::ordered_json::array();
  for (const auto& m : result.epochs) {
    traj.push_back(m.clean_noisy_auc ? nlohmann::ordered_json(*m.clean_noisy_auc)
                                     : nlohmann::ordered_json(nullptr));
  }
  j["auc_trajectory"] = traj;
  return j.dump(2);
}

}  // namespace noisylab
