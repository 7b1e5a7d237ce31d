#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace noisylab {

/// Observations are bounded to [kLossEpsilon, 1 - kLossEpsilon] before fitting.
inline constexpr double kLossEpsilon = 1e-4;
/// Lower bound on a component's weighted variance in the M-step.
inline constexpr double kVarianceFloor = 1e-6;

struct LossObservation {
  std::size_t sample_id = 0;
  double raw_loss = 0.0;         // nats
  double normalized_loss = 0.0;  // in [eps, 1 - eps]
};

/// clamp(raw / max_raw, eps, 1 - eps). A non-positive max maps everything to eps.
double normalize_loss(double raw_loss, double max_raw_loss);

/// Max-normalizes a full pass of raw losses (sample ids are positions).
std::vector<LossObservation> normalize_losses(std::span<const double> raw_losses);

/// Two-component beta mixture over normalized losses. The clean component is
/// the one with the smaller mean; ties resolve to component 0.
struct BetaMixture {
  std::array<double, 2> lambda{0.5, 0.5};
  std::array<double, 2> alpha{1.0, 1.0};
  std::array<double, 2> beta{1.0, 1.0};
  int clean_component = 0;

  int noisy_component() const { return 1 - clean_component; }
  double mean(int k) const { return alpha[k] / (alpha[k] + beta[k]); }
  /// Mixture density at x in (0,1).
  double pdf(double x) const;
  /// Recomputes clean_component from the component means.
  void assign_clean_component();
};

struct GaussMixture {
  std::array<double, 2> lambda{0.5, 0.5};
  std::array<double, 2> mu{0.0, 1.0};
  std::array<double, 2> sigma2{1.0, 1.0};

  /// Component with the larger mean; ties resolve to component 1.
  int noisy_component() const { return mu[1] >= mu[0] ? 1 : 0; }
  double pdf(double x) const;
};

using Responsibilities = std::vector<std::array<double, 2>>;

/// Beta density, evaluated through log-Gamma. Requires 0 < x < 1.
double beta_pdf(double x, double alpha, double beta);
double beta_log_pdf(double x, double alpha, double beta);
double gauss_pdf(double x, double mu, double sigma2);

/// Posterior component memberships by Bayes' rule. Observations where both
/// weighted densities vanish (or are not finite) get (0.5, 0.5).
Responsibilities e_step(std::span<const double> obs, const BetaMixture& model);

/// Weighted method-of-moments update of (alpha, beta) plus the usual
/// mean-responsibility update of lambda. Variances are floored at
/// kVarianceFloor and capped just below mean*(1-mean) so shapes stay positive;
/// a component whose total weight falls under 1e-12 restarts as Beta(1,1)
/// with lambda reset to (0.5, 0.5).
BetaMixture m_step(std::span<const double> obs, const Responsibilities& gamma);

struct EmOptions {
  int max_iters = 10;
  double tolerance = 1e-6;  // max absolute parameter change
};

/// EM fit from a median-split initialization. Requires at least 10
/// observations inside (0,1). Near-constant input (variance < 1e-12) returns
/// the symmetric Beta(1,1) pair.
BetaMixture fit_bmm(std::span<const double> obs, EmOptions options = {});

/// p(noisy | loss); 0.5 when both weighted densities vanish.
double posterior_noisy(const BetaMixture& model, double loss);
std::vector<double> posterior_noisy(const BetaMixture& model, std::span<const double> losses);

Responsibilities gmm_e_step(std::span<const double> obs, const GaussMixture& model);
GaussMixture gmm_m_step(std::span<const double> obs, const Responsibilities& gamma);
/// EM with exact weighted MLE updates; same initialization and floor as the BMM.
GaussMixture fit_gmm(std::span<const double> obs, EmOptions options = {});
double gmm_posterior_noisy(const GaussMixture& model, double loss);
std::vector<double> gmm_posterior_noisy(const GaussMixture& model,
                                        std::span<const double> losses);

}  // namespace noisylab
