#include "noisylab/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace noisylab {

namespace {

constexpr double kCollapseWeight = 1e-12;
constexpr double kMinObservations = 10;

// Normalized membership of one observation from per-component log(lambda*pdf).
std::array<double, 2> membership(double log_w0, double log_w1) {
  if (std::isnan(log_w0) || std::isnan(log_w1) ||
      (std::isinf(log_w0) && std::isinf(log_w1))) {
    return {0.5, 0.5};
  }
  const double top = std::max(log_w0, log_w1);
  const double e0 = std::exp(log_w0 - top);
  const double e1 = std::exp(log_w1 - top);
  const double total = e0 + e1;
  return {e0 / total, e1 / total};
}

double safe_log(double v) {
  return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
}

void require_unit_interval(double x) {
  if (!(x > 0.0 && x < 1.0)) {
    throw std::domain_error(fmt::format("observation {} outside (0,1); bound it first", x));
  }
}

struct Moments {
  double weight = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

Moments weighted_moments(std::span<const double> obs, const Responsibilities& gamma, int k) {
  Moments m;
  double sum = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    m.weight += gamma[i][k];
    sum += gamma[i][k] * obs[i];
  }
  if (m.weight < kCollapseWeight) return m;
  m.mean = sum / m.weight;
  double sq = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double d = obs[i] - m.mean;
    sq += gamma[i][k] * d * d;
  }
  m.variance = sq / m.weight;
  return m;
}

void check_gamma(std::span<const double> obs, const Responsibilities& gamma) {
  if (gamma.size() != obs.size()) {
    throw std::invalid_argument(fmt::format("{} responsibilities for {} observations",
                                            gamma.size(), obs.size()));
  }
  if (obs.size() < 2) throw std::invalid_argument("M-step needs at least 2 observations");
}

// Hard median split: lower half -> component 0, upper half -> component 1.
Responsibilities median_split(std::span<const double> obs) {
  std::vector<std::size_t> order(obs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return obs[a] < obs[b]; });
  Responsibilities gamma(obs.size(), {0.0, 0.0});
  const std::size_t half = obs.size() / 2;
  for (std::size_t r = 0; r < order.size(); ++r) gamma[order[r]][r < half ? 0 : 1] = 1.0;
  return gamma;
}

double overall_variance(std::span<const double> obs) {
  const double mean = std::accumulate(obs.begin(), obs.end(), 0.0) / static_cast<double>(obs.size());
  double sq = 0.0;
  for (double x : obs) sq += (x - mean) * (x - mean);
  return sq / static_cast<double>(obs.size());
}

double max_change(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return std::max(std::abs(a[0] - b[0]), std::abs(a[1] - b[1]));
}

void validate_fit_input(std::span<const double> obs) {
  if (static_cast<double>(obs.size()) < kMinObservations) {
    throw std::invalid_argument(
        fmt::format("mixture fit needs at least 10 observations, got {}", obs.size()));
  }
}

}  // namespace

double normalize_loss(double raw_loss, double max_raw_loss) {
  const double scaled = max_raw_loss > 0.0 ? raw_loss / max_raw_loss : 0.0;
  return std::clamp(scaled, kLossEpsilon, 1.0 - kLossEpsilon);
}

std::vector<LossObservation> normalize_losses(std::span<const double> raw_losses) {
  double top = 0.0;
  for (double v : raw_losses) top = std::max(top, v);
  std::vector<LossObservation> out(raw_losses.size());
  for (std::size_t i = 0; i < raw_losses.size(); ++i) {
    out[i] = {i, raw_losses[i], normalize_loss(raw_losses[i], top)};
  }
  return out;
}

double beta_log_pdf(double x, double alpha, double beta) {
  require_unit_interval(x);
  if (!(alpha > 0.0 && beta > 0.0)) {
    throw std::domain_error(fmt::format("beta shape parameters must be positive ({}, {})", alpha, beta));
  }
  return std::lgamma(alpha + beta) - std::lgamma(alpha) - std::lgamma(beta) +
         (alpha - 1.0) * std::log(x) + (beta - 1.0) * std::log1p(-x);
}

double beta_pdf(double x, double alpha, double beta) {
  return std::exp(beta_log_pdf(x, alpha, beta));
}

double gauss_pdf(double x, double mu, double sigma2) {
  const double d = x - mu;
  return std::exp(-0.5 * d * d / sigma2) / std::sqrt(2.0 * std::numbers::pi * sigma2);
}

double BetaMixture::pdf(double x) const {
  return lambda[0] * beta_pdf(x, alpha[0], beta[0]) + lambda[1] * beta_pdf(x, alpha[1], beta[1]);
}

void BetaMixture::assign_clean_component() {
  clean_component = mean(1) < mean(0) ? 1 : 0;
}

double GaussMixture::pdf(double x) const {
  return lambda[0] * gauss_pdf(x, mu[0], sigma2[0]) + lambda[1] * gauss_pdf(x, mu[1], sigma2[1]);
}

Responsibilities e_step(std::span<const double> obs, const BetaMixture& model) {
  Responsibilities gamma(obs.size());
  const double log_l0 = safe_log(model.lambda[0]);
  const double log_l1 = safe_log(model.lambda[1]);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    gamma[i] = membership(log_l0 + beta_log_pdf(obs[i], model.alpha[0], model.beta[0]),
                          log_l1 + beta_log_pdf(obs[i], model.alpha[1], model.beta[1]));
  }
  return gamma;
}

BetaMixture m_step(std::span<const double> obs, const Responsibilities& gamma) {
  check_gamma(obs, gamma);
  BetaMixture next;
  bool collapsed = false;
  for (int k = 0; k < 2; ++k) {
    const Moments m = weighted_moments(obs, gamma, k);
    next.lambda[k] = m.weight / static_cast<double>(obs.size());
    if (m.weight < kCollapseWeight) {
      next.alpha[k] = 1.0;
      next.beta[k] = 1.0;
      collapsed = true;
      continue;
    }
    const double spread = m.mean * (1.0 - m.mean);
    double var = std::max(m.variance, kVarianceFloor);
    if (var >= spread) var = 0.999 * spread;
    next.alpha[k] = m.mean * (spread / var - 1.0);
    next.beta[k] = next.alpha[k] * (1.0 - m.mean) / m.mean;
  }
  if (collapsed) next.lambda = {0.5, 0.5};
  next.assign_clean_component();
  return next;
}

BetaMixture fit_bmm(std::span<const double> obs, EmOptions options) {
  validate_fit_input(obs);
  for (double x : obs) require_unit_interval(x);
  BetaMixture model;
  if (overall_variance(obs) < 1e-12) return model;

  model = m_step(obs, median_split(obs));
  model.lambda = {0.5, 0.5};
  for (int it = 0; it < options.max_iters; ++it) {
    BetaMixture next = m_step(obs, e_step(obs, model));
    const double delta = std::max({max_change(next.lambda, model.lambda),
                                   max_change(next.alpha, model.alpha),
                                   max_change(next.beta, model.beta)});
    model = next;
    if (delta < options.tolerance) break;
  }
  model.assign_clean_component();
  return model;
}

double posterior_noisy(const BetaMixture& model, double loss) {
  const int n = model.noisy_component();
  const int c = model.clean_component;
  const auto m = membership(safe_log(model.lambda[c]) + beta_log_pdf(loss, model.alpha[c], model.beta[c]),
                            safe_log(model.lambda[n]) + beta_log_pdf(loss, model.alpha[n], model.beta[n]));
  return m[1];
}

std::vector<double> posterior_noisy(const BetaMixture& model, std::span<const double> losses) {
  std::vector<double> out(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) out[i] = posterior_noisy(model, losses[i]);
  return out;
}

namespace {

double gauss_log_pdf(double x, double mu, double sigma2) {
  const double d = x - mu;
  return -0.5 * d * d / sigma2 - 0.5 * std::log(2.0 * std::numbers::pi * sigma2);
}

}  // namespace

Responsibilities gmm_e_step(std::span<const double> obs, const GaussMixture& model) {
  Responsibilities gamma(obs.size());
  const double log_l0 = safe_log(model.lambda[0]);
  const double log_l1 = safe_log(model.lambda[1]);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    gamma[i] = membership(log_l0 + gauss_log_pdf(obs[i], model.mu[0], model.sigma2[0]),
                          log_l1 + gauss_log_pdf(obs[i], model.mu[1], model.sigma2[1]));
  }
  return gamma;
}

GaussMixture gmm_m_step(std::span<const double> obs, const Responsibilities& gamma) {
  check_gamma(obs, gamma);
  GaussMixture next;
  bool collapsed = false;
  for (int k = 0; k < 2; ++k) {
    const Moments m = weighted_moments(obs, gamma, k);
    next.lambda[k] = m.weight / static_cast<double>(obs.size());
    if (m.weight < kCollapseWeight) {
      // Restart from the pooled statistics.
      const double mean =
          std::accumulate(obs.begin(), obs.end(), 0.0) / static_cast<double>(obs.size());
      next.mu[k] = mean;
      next.sigma2[k] = std::max(overall_variance(obs), kVarianceFloor);
      collapsed = true;
      continue;
    }
    next.mu[k] = m.mean;
    next.sigma2[k] = std::max(m.variance, kVarianceFloor);
  }
  if (collapsed) next.lambda = {0.5, 0.5};
  return next;
}

GaussMixture fit_gmm(std::span<const double> obs, EmOptions options) {
  validate_fit_input(obs);
  GaussMixture model = gmm_m_step(obs, median_split(obs));
  model.lambda = {0.5, 0.5};
  for (int it = 0; it < options.max_iters; ++it) {
    GaussMixture next = gmm_m_step(obs, gmm_e_step(obs, model));
    const double delta = std::max({max_change(next.lambda, model.lambda),
                                   max_change(next.mu, model.mu),
                                   max_change(next.sigma2, model.sigma2)});
    model = next;
    if (delta < options.tolerance) break;
  }
  return model;
}

double gmm_posterior_noisy(const GaussMixture& model, double loss) {
  const int n = model.noisy_component();
  const int c = 1 - n;
  const auto m = membership(
      safe_log(model.lambda[c]) + gauss_log_pdf(loss, model.mu[c], model.sigma2[c]),
      safe_log(model.lambda[n]) + gauss_log_pdf(loss, model.mu[n], model.sigma2[n]));
  return m[1];
}

std::vector<double> gmm_posterior_noisy(const GaussMixture& model,
                                        std::span<const double> losses) {
  std::vector<double> out(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) out[i] = gmm_posterior_noisy(model, losses[i]);
  return out;
}

}  // namespace noisylab
