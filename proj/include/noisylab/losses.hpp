#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "noisylab/autodiff.hpp"
#include "noisylab/mixture.hpp"
#include "noisylab/tensor.hpp"

namespace noisylab {

/// Constant weights of the static bootstrapping variants.
inline constexpr double kStaticHardWeight = 0.2;
inline constexpr double kStaticSoftWeight = 0.05;
inline constexpr double kDefaultMixupAlpha = 32.0;
inline constexpr double kDefaultEta = 1.0;

Tensor one_hot(std::span<const int> labels, std::size_t classes);
/// One-hot rows of the per-row argmax (lowest index wins ties).
Tensor argmax_one_hot(const Tensor& probs);

/// Per-sample -log p(label), probabilities clamped at 1e-12.
std::vector<double> cross_entropy(const Tensor& probs, const Tensor& onehot);

enum class BootstrapMode { soft, hard };

struct BatchTargets {
  Tensor onehot;                     // y_i
  std::vector<double> boot_weights;  // w_i in [0,1]
  Tensor predictions_soft;           // h_i
  Tensor predictions_hard;           // z_i
};

/// Builds BatchTargets from observed labels and the (detached) probabilities
/// of the same batch.
BatchTargets make_batch_targets(std::span<const int> labels, std::vector<double> boot_weights,
                                const Tensor& probs);

/// Row-wise (1 - w_i) y_i + w_i z_i (hard) or (1 - w_i) y_i + w_i h_i (soft).
Tensor bootstrap_targets(const BatchTargets& targets, BootstrapMode mode);

/// Per-sample bootstrapping loss; w = 0 reproduces cross_entropy exactly.
std::vector<double> bootstrap_loss(const Tensor& probs, const BatchTargets& targets,
                                   BootstrapMode mode);

// --- mixup -----------------------------------------------------------------

struct MixPair {
  std::size_t index_p = 0;
  std::size_t index_q = 0;
  double delta = 1.0;  // weight on x_p
};

struct MixedBatch {
  Tensor inputs;
  std::vector<MixPair> pairs;
};

/// delta ~ Beta(alpha, alpha), one draw per pair.
struct StandardMixup {
  double alpha = kDefaultMixupAlpha;
};

/// delta_p / (delta_p + delta_q) with delta = p(clean | loss) from the mixture.
struct DynamicMixup {
  const BetaMixture* mixture = nullptr;
  std::span<const double> normalized_losses;  // one per batch row
};

using DeltaSource = std::variant<StandardMixup, DynamicMixup>;

/// Uniform random permutation of [0, batch): row i is paired with partner[i].
std::vector<std::size_t> random_pairing(std::size_t batch, std::mt19937_64& rng);

/// Beta(a, b) via two Gamma draws.
double sample_beta(double a, double b, std::mt19937_64& rng);

/// x_i = delta_i x_p + (1 - delta_i) x_q with p = i, q = partner[i].
MixedBatch mixup_blend(const Tensor& batch, std::span<const std::size_t> partner,
                       const DeltaSource& source, std::mt19937_64& rng);

/// Convex input blend with explicit per-pair coefficients.
MixedBatch mixup_blend(const Tensor& batch, std::span<const std::size_t> partner,
                       std::span<const double> deltas);

/// Dynamic-mixup coefficient p / (p + q) after bounding both clean
/// posteriors to [1e-4, 1 - 1e-4], so two near-certain noisy samples blend
/// at about 0.5.
double dynamic_mixup_coefficient(double clean_p, double clean_q);

/// mean_i(delta_i l_p[i] + (1 - delta_i) l_q[i]).
double mixup_loss(std::span<const double> losses_p, std::span<const double> losses_q,
                  std::span<const double> deltas);
double mixup_loss(std::span<const double> losses_p, std::span<const double> losses_q,
                  double delta);

// --- joint corrected objective ---------------------------------------------

enum class TargetKind { soft, hard, tempered };

struct TargetMode {
  TargetKind kind = TargetKind::hard;
  double temperature = 1.0;  // used by tempered only
};

/// Perceptual targets from the extra (unmixed, no-gradient) forward pass:
/// softmax(scores) for soft, argmax one-hot for hard, softmax(scores / T) for
/// tempered.
Tensor perceptual_targets(const Tensor& clean_scores, TargetMode mode);

/// Everything the corrected mixup loss needs besides the mixed prediction.
struct JointTargets {
  std::vector<int> labels;            // observed labels of the unmixed rows
  std::vector<MixPair> pairs;         // from mixup_blend
  std::vector<double> noisy_weights;  // w per unmixed row
  const Tensor* clean_scores = nullptr;
  TargetMode mode;
  std::size_t classes = 0;
};

/// Per-row bootstrap targets for the p and q halves of each pair.
struct PairTargets {
  Tensor target_p;
  Tensor target_q;
  std::vector<double> deltas;
};

PairTargets build_pair_targets(const JointTargets& joint);

/// Value of the corrected mixup loss (batch mean, no regularizer).
double joint_corrected_loss(const Tensor& mixed_probs, const JointTargets& joint);

/// Recorded version; mixed_probs must be a softmax node on `graph`.
Var joint_corrected_loss(Graph& graph, Var mixed_probs, const JointTargets& joint);

/// sum_c p_c log(p_c / mean_softmax_c) with p_c = 1/C. Rejects inputs that do
/// not sum to 1 within 1e-6.
double class_prior_regularizer(std::span<const double> mean_softmax);

/// Linear decay from t_start (before start_epoch) to t_end (at and after end_epoch).
double temperature_schedule(int epoch, int start_epoch, int end_epoch, double t_start = 1.0,
                            double t_end = 0.001);

}  // namespace noisylab
