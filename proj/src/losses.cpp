#include "noisylab/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "noisylab/kernels.hpp"
#include "noisylab/mlp.hpp"

namespace noisylab {

Tensor one_hot(std::span<const int> labels, std::size_t classes) {
  Tensor out({labels.size(), classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw std::out_of_range(fmt::format("label {} outside [0, {})", labels[i], classes));
    }
    out.at(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return out;
}

Tensor argmax_one_hot(const Tensor& probs) {
  return one_hot(argmax_rows(probs), probs.cols());
}

std::vector<double> cross_entropy(const Tensor& probs, const Tensor& onehot) {
  return kernels::soft_target_nll(probs, onehot);
}

BatchTargets make_batch_targets(std::span<const int> labels, std::vector<double> boot_weights,
                                const Tensor& probs) {
  return BatchTargets{one_hot(labels, probs.cols()), std::move(boot_weights), probs,
                      argmax_one_hot(probs)};
}

Tensor bootstrap_targets(const BatchTargets& targets, BootstrapMode mode) {
  const Tensor& perceptual =
      mode == BootstrapMode::hard ? targets.predictions_hard : targets.predictions_soft;
  if (perceptual.shape() != targets.onehot.shape()) {
    throw std::invalid_argument("bootstrap: prediction shape " + shape_string(perceptual.shape()) +
                                " vs labels " + shape_string(targets.onehot.shape()));
  }
  if (targets.boot_weights.size() != targets.onehot.rows()) {
    throw std::invalid_argument(fmt::format("bootstrap: {} weights for {} rows",
                                            targets.boot_weights.size(), targets.onehot.rows()));
  }
  Tensor out(targets.onehot.shape());
  for (std::size_t r = 0; r < out.rows(); ++r) {
    const double w = targets.boot_weights[r];
    if (!(w >= 0.0 && w <= 1.0)) {
      throw std::invalid_argument(fmt::format("bootstrap weight {} at row {} outside [0,1]", w, r));
    }
    auto y = targets.onehot.row(r);
    auto z = perceptual.row(r);
    auto dst = out.row(r);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = (1.0 - w) * y[c] + w * z[c];
  }
  return out;
}

std::vector<double> bootstrap_loss(const Tensor& probs, const BatchTargets& targets,
                                   BootstrapMode mode) {
  return kernels::soft_target_nll(probs, bootstrap_targets(targets, mode));
}

std::vector<std::size_t> random_pairing(std::size_t batch, std::mt19937_64& rng) {
  std::vector<std::size_t> partner(batch);
  std::iota(partner.begin(), partner.end(), std::size_t{0});
  std::shuffle(partner.begin(), partner.end(), rng);
  return partner;
}

double sample_beta(double a, double b, std::mt19937_64& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

double dynamic_mixup_coefficient(double clean_p, double clean_q) {
  const double p = std::clamp(clean_p, kLossEpsilon, 1.0 - kLossEpsilon);
  const double q = std::clamp(clean_q, kLossEpsilon, 1.0 - kLossEpsilon);
  return p / (p + q);
}

MixedBatch mixup_blend(const Tensor& batch, std::span<const std::size_t> partner,
                       std::span<const double> deltas) {
  const std::size_t rows = batch.rows();
  if (partner.size() != rows || deltas.size() != rows) {
    throw std::invalid_argument(fmt::format("mixup: {} rows, {} partners, {} deltas", rows,
                                            partner.size(), deltas.size()));
  }
  MixedBatch out{Tensor(batch.shape()), {}};
  out.pairs.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double d = deltas[i];
    if (!(d >= 0.0 && d <= 1.0)) throw std::invalid_argument(fmt::format("mixup delta {} outside [0,1]", d));
    if (partner[i] >= rows) throw std::out_of_range("mixup partner index out of range");
    auto xp = batch.row(i);
    auto xq = batch.row(partner[i]);
    auto dst = out.inputs.row(i);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = d * xp[c] + (1.0 - d) * xq[c];
    out.pairs.push_back({i, partner[i], d});
  }
  return out;
}

MixedBatch mixup_blend(const Tensor& batch, std::span<const std::size_t> partner,
                       const DeltaSource& source, std::mt19937_64& rng) {
  const std::size_t rows = batch.rows();
  std::vector<double> deltas(rows);
  if (const auto* standard = std::get_if<StandardMixup>(&source)) {
    if (!(standard->alpha > 0.0)) throw std::invalid_argument("mixup alpha must be positive");
    for (double& d : deltas) d = sample_beta(standard->alpha, standard->alpha, rng);
  } else {
    const auto& dynamic = std::get<DynamicMixup>(source);
    if (dynamic.mixture == nullptr) {
      throw std::logic_error("dynamic mixup requires a fitted loss mixture");
    }
    if (dynamic.normalized_losses.size() != rows || partner.size() != rows) {
      throw std::invalid_argument("dynamic mixup: losses/partners do not match the batch");
    }
    std::vector<double> clean(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      clean[i] = 1.0 - posterior_noisy(*dynamic.mixture, dynamic.normalized_losses[i]);
    }
    for (std::size_t i = 0; i < rows; ++i) {
      deltas[i] = dynamic_mixup_coefficient(clean[i], clean[partner[i]]);
    }
  }
  return mixup_blend(batch, partner, deltas);
}

double mixup_loss(std::span<const double> losses_p, std::span<const double> losses_q,
                  std::span<const double> deltas) {
  return kernels::mean(kernels::convex_combine(losses_p, losses_q, deltas));
}

double mixup_loss(std::span<const double> losses_p, std::span<const double> losses_q,
                  double delta) {
  const std::vector<double> deltas(losses_p.size(), delta);
  return mixup_loss(losses_p, losses_q, deltas);
}

Tensor perceptual_targets(const Tensor& clean_scores, TargetMode mode) {
  switch (mode.kind) {
    case TargetKind::soft:
      return kernels::softmax_rows(clean_scores, 1.0);
    case TargetKind::hard:
      return one_hot(argmax_rows(clean_scores), clean_scores.cols());
    case TargetKind::tempered:
      return kernels::softmax_rows(clean_scores, mode.temperature);
  }
  throw std::logic_error("unknown target kind");
}

PairTargets build_pair_targets(const JointTargets& joint) {
  if (joint.clean_scores == nullptr) {
    throw std::logic_error("corrected mixup loss needs the extra forward-pass predictions");
  }
  const std::size_t rows = joint.pairs.size();
  if (joint.labels.size() != rows || joint.noisy_weights.size() != rows ||
      joint.clean_scores->rows() != rows || joint.clean_scores->cols() != joint.classes) {
    throw std::invalid_argument(fmt::format(
        "corrected mixup loss: {} pairs, {} labels, {} weights, clean scores {}", rows,
        joint.labels.size(), joint.noisy_weights.size(), shape_string(joint.clean_scores->shape())));
  }
  const Tensor perceptual = perceptual_targets(*joint.clean_scores, joint.mode);
  const Tensor labels = one_hot(joint.labels, joint.classes);

  PairTargets out{Tensor({rows, joint.classes}), Tensor({rows, joint.classes}), {}};
  out.deltas.reserve(rows);
  auto fill = [&](Tensor& dst, std::size_t r, std::size_t src) {
    const double w = joint.noisy_weights[src];
    if (!(w >= 0.0 && w <= 1.0)) {
      throw std::invalid_argument(fmt::format("bootstrap weight {} at row {} outside [0,1]", w, src));
    }
    auto y = labels.row(src);
    auto z = perceptual.row(src);
    auto d = dst.row(r);
    for (std::size_t c = 0; c < d.size(); ++c) d[c] = (1.0 - w) * y[c] + w * z[c];
  };
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& pair = joint.pairs[r];
    if (pair.index_p >= rows || pair.index_q >= rows) throw std::out_of_range("pair index out of range");
    fill(out.target_p, r, pair.index_p);
    fill(out.target_q, r, pair.index_q);
    out.deltas.push_back(pair.delta);
  }
  return out;
}

double joint_corrected_loss(const Tensor& mixed_probs, const JointTargets& joint) {
  const PairTargets t = build_pair_targets(joint);
  return mixup_loss(kernels::soft_target_nll(mixed_probs, t.target_p),
                    kernels::soft_target_nll(mixed_probs, t.target_q), t.deltas);
}

Var joint_corrected_loss(Graph& graph, Var mixed_probs, const JointTargets& joint) {
  const PairTargets t = build_pair_targets(joint);
  Var lp = graph.soft_target_nll(mixed_probs, t.target_p);
  Var lq = graph.soft_target_nll(mixed_probs, t.target_q);
  return graph.mean(graph.convex_combine(lp, lq, t.deltas));
}

double class_prior_regularizer(std::span<const double> mean_softmax) {
  if (mean_softmax.empty()) throw std::invalid_argument("regularizer needs at least one class");
  double total = 0.0;
  for (double h : mean_softmax) {
    if (!(h >= 0.0)) throw std::invalid_argument("mean softmax entries must be nonnegative");
    total += h;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw std::invalid_argument(fmt::format("mean softmax sums to {}, not 1", total));
  }
  return kernels::uniform_prior_kl(mean_softmax);
}

double temperature_schedule(int epoch, int start_epoch, int end_epoch, double t_start,
                            double t_end) {
  if (start_epoch >= end_epoch) {
    throw std::invalid_argument("temperature decay needs start_epoch < end_epoch");
  }
  if (epoch <= start_epoch) return t_start;
  if (epoch >= end_epoch) return t_end;
  const double frac =
      static_cast<double>(epoch - start_epoch) / static_cast<double>(end_epoch - start_epoch);
  return t_start + (t_end - t_start) * frac;
}

}  // namespace noisylab
