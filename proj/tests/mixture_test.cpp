#include <gtest/gtest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <random>

#include "noisylab/metrics.hpp"
#include "noisylab/mixture.hpp"
#include "support/mixtures.hpp"

using namespace noisylab;

namespace {

BetaMixture make(std::array<double, 2> lambda, std::array<double, 2> a, std::array<double, 2> b) {
  BetaMixture m;
  m.lambda = lambda;
  m.alpha = a;
  m.beta = b;
  m.assign_clean_component();
  return m;
}

double integrate(const BetaMixture& m) {
  boost::math::quadrature::tanh_sinh<double> q;
  return q.integrate([&](double x) { return m.pdf(x); }, 0.0, 1.0);
}

}  // namespace

TEST(BetaPdf, UniformAndSymmetricExamples) {
  EXPECT_DOUBLE_EQ(beta_pdf(0.3, 1.0, 1.0), 1.0);
  EXPECT_NEAR(beta_pdf(0.5, 2.0, 2.0), 1.5, 1e-14);
}

TEST(BetaPdf, MatchesTrapezoidNormalizedKernel) {
  const double a = 2.0, b = 8.0;
  auto kernel = [&](double x) { return std::pow(x, a - 1.0) * std::pow(1.0 - x, b - 1.0); };
  const int n = 200000;
  const double h = 1.0 / n;
  double z = 0.5 * (kernel(0.0) + kernel(1.0));
  for (int i = 1; i < n; ++i) z += kernel(i * h);
  z *= h;
  EXPECT_NEAR(beta_pdf(0.2, a, b), kernel(0.2) / z, 1e-8);
}

TEST(BetaPdf, RejectsPointsOutsideOpenInterval) {
  EXPECT_THROW(beta_pdf(0.0, 2.0, 2.0), std::domain_error);
  EXPECT_THROW(beta_pdf(1.0, 2.0, 2.0), std::domain_error);
  EXPECT_THROW(beta_pdf(-0.1, 2.0, 2.0), std::domain_error);
  EXPECT_THROW(beta_pdf(0.5, 0.0, 2.0), std::domain_error);
}

TEST(NormalizeLoss, ClampsIntoOpenInterval) {
  EXPECT_DOUBLE_EQ(normalize_loss(0.0, 3.0), kLossEpsilon);
  EXPECT_DOUBLE_EQ(normalize_loss(3.0, 3.0), 1.0 - kLossEpsilon);
  EXPECT_DOUBLE_EQ(normalize_loss(1.5, 3.0), 0.5);
  EXPECT_DOUBLE_EQ(normalize_loss(1.0, 0.0), kLossEpsilon);
  const std::vector<double> raw{0.5, 2.0, 1.0};
  const auto obs = normalize_losses(raw);
  ASSERT_EQ(obs.size(), 3u);
  EXPECT_EQ(obs[2].sample_id, 2u);
  EXPECT_DOUBLE_EQ(obs[0].normalized_loss, 0.25);
  EXPECT_DOUBLE_EQ(obs[1].raw_loss, 2.0);
}

TEST(EStep, IdenticalComponentsSplitEvenly) {
  const auto m = make({0.5, 0.5}, {3, 3}, {4, 4});
  const std::vector<double> obs{0.1, 0.5, 0.93};
  for (const auto& row : e_step(obs, m)) {
    EXPECT_DOUBLE_EQ(row[0], 0.5);
    EXPECT_DOUBLE_EQ(row[1], 0.5);
  }
}

TEST(EStep, DegenerateMixingWeight) {
  const auto m = make({1.0, 0.0}, {2, 8}, {8, 2});
  const std::vector<double> obs{0.1, 0.5, 0.9};
  for (const auto& row : e_step(obs, m)) {
    EXPECT_EQ(row[0], 1.0);
    EXPECT_EQ(row[1], 0.0);
  }
}

TEST(EStep, MatchesDirectBayesRule) {
  const auto m = fixtures::separated();
  const double l = 0.1;
  const double p0 = 0.5 * beta_pdf(l, 2, 8);
  const double p1 = 0.5 * beta_pdf(l, 8, 2);
  const std::vector<double> obs{l};
  const auto g = e_step(obs, m);
  EXPECT_NEAR(g[0][0], p0 / (p0 + p1), 1e-10);
  EXPECT_NEAR(g[0][1], p1 / (p0 + p1), 1e-10);
}

TEST(EStep, ExtremeShapesStayFinite) {
  const auto m = make({0.5, 0.5}, {4000, 5000}, {5000, 4000});
  const std::vector<double> obs{1e-4};
  const auto g = e_step(obs, m);
  EXPECT_DOUBLE_EQ(g[0][0] + g[0][1], 1.0);
  EXPECT_TRUE(std::isfinite(g[0][0]));
}

TEST(MStep, HandEvaluatedMoments) {
  const std::vector<double> obs{0.2, 0.4};
  const Responsibilities g{{1.0, 0.0}, {1.0, 0.0}};
  const auto m = m_step(obs, g);
  EXPECT_NEAR(m.alpha[0], 6.0, 1e-10);
  EXPECT_NEAR(m.beta[0], 14.0, 1e-10);
}

TEST(MStep, UniformResponsibilitiesGiveIdenticalComponents) {
  const std::vector<double> obs{0.1, 0.3, 0.35, 0.8, 0.6};
  const Responsibilities g(obs.size(), {0.5, 0.5});
  const auto m = m_step(obs, g);
  EXPECT_DOUBLE_EQ(m.alpha[0], m.alpha[1]);
  EXPECT_DOUBLE_EQ(m.beta[0], m.beta[1]);
  EXPECT_DOUBLE_EQ(m.lambda[0], 0.5);
  EXPECT_DOUBLE_EQ(m.lambda[1], 0.5);
}

TEST(MStep, TrueMembershipsRecoverMeans) {
  auto truth = fixtures::separated();
  truth.lambda = {0.4, 0.6};
  const auto s = fixtures::beta_mixture(truth, 10000, 17);
  Responsibilities g(s.values.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = s.component[i] == 0 ? std::array{1.0, 0.0} : std::array{0.0, 1.0};
  const auto m = m_step(s.values, g);
  EXPECT_NEAR(m.mean(0), 0.2, 0.02);
  EXPECT_NEAR(m.mean(1), 0.8, 0.02);
  EXPECT_NEAR(m.lambda[0], 0.4, 0.02);
}

TEST(MStep, CollapsedComponentRestartsUniform) {
  const std::vector<double> obs{0.2, 0.3, 0.4};
  const Responsibilities g(3, {1.0, 0.0});
  const auto m = m_step(obs, g);
  EXPECT_EQ(m.alpha[1], 1.0);
  EXPECT_EQ(m.beta[1], 1.0);
  EXPECT_EQ(m.lambda[0], 0.5);
}

TEST(MStep, VarianceFloorAndCapKeepShapesPositive) {
  const std::vector<double> tight{0.3, 0.3, 0.3, 0.3};
  const auto a = m_step(tight, Responsibilities(4, {1.0, 0.0}));
  EXPECT_TRUE(std::isfinite(a.alpha[0]));
  EXPECT_GT(a.alpha[0], 0.0);
  const std::vector<double> wide{1e-4, 1.0 - 1e-4};
  const auto b = m_step(wide, Responsibilities(2, {1.0, 0.0}));
  EXPECT_GT(b.alpha[0], 0.0);
  EXPECT_GT(b.beta[0], 0.0);
}

TEST(FitBmm, RecoversSeparatedMixture) {
  const auto s = fixtures::beta_mixture(fixtures::separated(), 10000, 5);
  const auto m = fit_bmm(s.values);
  const auto means = fixtures::ordered_means(m);
  EXPECT_NEAR(means[0], 0.2, 0.05);
  EXPECT_NEAR(means[1], 0.8, 0.05);
  EXPECT_NEAR(m.lambda[0], 0.5, 0.05);
  EXPECT_NEAR(m.lambda[0] + m.lambda[1], 1.0, 1e-9);
}

TEST(FitBmm, NeedsTenObservations) {
  const std::vector<double> nine(9, 0.3);
  EXPECT_THROW(fit_bmm(nine), std::invalid_argument);
  const std::vector<double> outside{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  EXPECT_THROW(fit_bmm(outside), std::domain_error);
}

TEST(FitBmm, ConstantInputIsUninformative) {
  const std::vector<double> obs(50, 0.5);
  const auto m = fit_bmm(obs);
  EXPECT_DOUBLE_EQ(posterior_noisy(m, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(posterior_noisy(m, 0.1), 0.5);
}

TEST(FitBmm, FiveAndTwentyIterationsAgree) {
  const auto s = fixtures::beta_mixture(fixtures::separated(), 10000, 8);
  const auto five = fixtures::ordered_means(fit_bmm(s.values, {5, 1e-6}));
  const auto twenty = fixtures::ordered_means(fit_bmm(s.values, {20, 1e-6}));
  EXPECT_LT(std::abs(five[0] - twenty[0]), 0.02);
  EXPECT_LT(std::abs(five[1] - twenty[1]), 0.02);
}

// Overlapping components need more than the default 10 iterations to settle
// from the median split, so this runs EM to convergence.
TEST(FitBmm, NineteenOfTwentyRecoveries) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> lam(0.3, 0.7);
  std::uniform_real_distribution<double> conc(8.0, 14.0);
  int good = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const double c0 = conc(rng), c1 = conc(rng);
    const double m0 = 0.15 + 0.05 * (trial % 2), m1 = m0 + 0.4 + 0.05 * (trial % 3);
    const double l0 = lam(rng);
    const auto t = make({l0, 1.0 - l0}, {m0 * c0, m1 * c1}, {(1 - m0) * c0, (1 - m1) * c1});
    const auto s = fixtures::beta_mixture(t, 10000, 1000 + trial);
    const auto fit = fixtures::ordered_means(fit_bmm(s.values, {200, 1e-6}));
    if (std::abs(fit[0] - m0) <= 0.05 && std::abs(fit[1] - m1) <= 0.05) ++good;
  }
  EXPECT_GE(good, 19);
}

TEST(MixtureProperties, PdfIntegratesToOne) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> shape(0.5, 12.0);
    std::uniform_real_distribution<double> lam(0.05, 0.95);
    const double l0 = lam(rng);
    const auto truth = make({l0, 1.0 - l0}, {shape(rng), shape(rng)}, {shape(rng), shape(rng)});
    const auto s = fixtures::beta_mixture(truth, 2000, seed + 50);
    EXPECT_NEAR(integrate(fit_bmm(s.values)), 1.0, 1e-6) << "seed " << seed;
  }
  EXPECT_NEAR(integrate(fixtures::separated()), 1.0, 1e-6);
}

TEST(MixtureProperties, EveryIterationKeepsInvariants) {
  const auto s = fixtures::beta_mixture(make({0.7, 0.3}, {1.2, 5}, {9, 3}), 3000, 4);
  auto model = fit_bmm(s.values, {1, 0.0});
  for (int it = 0; it < 15; ++it) {
    const auto g = e_step(s.values, model);
    for (const auto& row : g) {
      ASSERT_GE(row[0], 0.0);
      ASSERT_GE(row[1], 0.0);
      ASSERT_NEAR(row[0] + row[1], 1.0, 1e-9);
    }
    model = m_step(s.values, g);
    ASSERT_NEAR(model.lambda[0] + model.lambda[1], 1.0, 1e-9);
    for (int k = 0; k < 2; ++k) {
      ASSERT_GT(model.alpha[k], 0.0);
      ASSERT_GT(model.beta[k], 0.0);
    }
    EXPECT_LE(model.mean(model.clean_component), model.mean(model.noisy_component()));
  }
}

TEST(Posterior, SeparatedFitIsConfidentNearModes) {
  const auto s = fixtures::beta_mixture(fixtures::separated(), 10000, 21);
  const auto m = fit_bmm(s.values);
  EXPECT_GE(posterior_noisy(m, 0.875), 0.99);
  EXPECT_LE(posterior_noisy(m, 0.125), 0.01);
}

TEST(Posterior, SymmetricComponentsGiveHalf) {
  const auto m = make({0.5, 0.5}, {2, 2}, {5, 5});
  EXPECT_DOUBLE_EQ(posterior_noisy(m, 0.3), 0.5);
}

TEST(Posterior, NoisyMeanScoresAboveCleanMean) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> shape(1.0, 10.0);
    auto truth = make({0.5, 0.5}, {shape(rng), shape(rng)}, {shape(rng), shape(rng)});
    const auto s = fixtures::beta_mixture(truth, 2000, seed);
    const auto m = fit_bmm(s.values);
    const double clean = m.mean(m.clean_component), noisy = m.mean(m.noisy_component());
    if (noisy - clean < 1e-3) continue;
    EXPECT_GT(posterior_noisy(m, noisy), posterior_noisy(m, clean)) << "seed " << seed;
  }
}

TEST(FitGmm, RepeatedValueGetsFlooredVariance) {
  const std::vector<double> obs(20, 0.3);
  const auto g = fit_gmm(obs);
  EXPECT_NEAR(g.mu[0], 0.3, 1e-12);
  EXPECT_NEAR(g.mu[1], 0.3, 1e-12);
  EXPECT_DOUBLE_EQ(g.sigma2[0], kVarianceFloor);
}

TEST(FitGmm, RecoversSeparatedGaussians) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> a(0.2, 0.05), b(0.8, 0.05);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> obs(10000);
  for (double& x : obs) x = coin(rng) ? b(rng) : a(rng);
  const auto g = fit_gmm(obs);
  const int n = g.noisy_component();
  EXPECT_NEAR(g.mu[n], 0.8, 0.02);
  EXPECT_NEAR(g.mu[1 - n], 0.2, 0.02);
  EXPECT_NEAR(g.lambda[0] + g.lambda[1], 1.0, 1e-9);
  EXPECT_GE(gmm_posterior_noisy(g, 0.8), 0.99);
}

TEST(FitGmm, BetaMixtureSeparatesSkewedLossesAtLeastAsWell) {
  // Clean losses pile up against zero; noisy ones sit high and wide.
  const auto truth = make({0.5, 0.5}, {0.6, 5.0}, {12.0, 2.5});
  const auto s = fixtures::beta_mixture(truth, 10000, 31);
  std::vector<bool> noisy(s.component.size());
  for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] = s.component[i] == 1;
  const auto bmm_auc = clean_noisy_auc(posterior_noisy(fit_bmm(s.values), s.values), noisy);
  const auto gmm_auc = clean_noisy_auc(gmm_posterior_noisy(fit_gmm(s.values), s.values), noisy);
  ASSERT_TRUE(bmm_auc && gmm_auc);
  EXPECT_GE(*bmm_auc, *gmm_auc);
}
