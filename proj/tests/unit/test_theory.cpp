#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "gradstarve/advantage.hpp"
#include "gradstarve/rng.hpp"
#include "gradstarve/theory.hpp"
#include "oracles.hpp"

using namespace gradstarve;

namespace {

TabularPolicy random_policy(CounterRng& rng, std::size_t k) {
  return TabularPolicy(oracle::random_logits(rng, k, -2.0, 2.0), oracle::random_correct_set(rng, k));
}

void expect_scaled(const GradientVector& got, const GradientVector& base, double scale, double tol) {
  ASSERT_EQ(got.size(), base.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], scale * base[i], tol) << "component " << i;
}

}  // namespace

TEST(SuccessProb, Examples) {
  EXPECT_DOUBLE_EQ(success_prob(TabularPolicy({0, 0, 0, 0}, {0})), 0.25);
  EXPECT_DOUBLE_EQ(success_prob(TabularPolicy({0, 0}, {0})), 0.5);
  EXPECT_THROW(TabularPolicy({0, 0}, {0, 1}), ValidationError);
}

TEST(GradSuccessProb, Examples) {
  const auto g = grad_success_prob(TabularPolicy({0, 0}, {0}));
  EXPECT_DOUBLE_EQ(g[0], 0.25);
  EXPECT_DOUBLE_EQ(g[1], -0.25);
}

TEST(GradSuccessProb, MatchesCentralDifferences) {
  auto rng = seeded_rng(71);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng.below(7);
    const auto logits = oracle::random_logits(rng, k, -3.0, 3.0);
    const auto correct = oracle::random_correct_set(rng, k);
    const auto g = grad_success_prob(TabularPolicy(logits, correct));
    const auto fd = oracle::central_difference(
        [&](const std::vector<double>& x) { return oracle::plain_success(x, correct); }, logits, 1e-6);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      EXPECT_NEAR(g[i], fd[i], 1e-6);
      sum += g[i];
    }
    EXPECT_NEAR(sum, 0.0, 1e-12);
  }
}

TEST(Score, IsGradientOfLogProbability) {
  auto rng = seeded_rng(72);
  const auto logits = oracle::random_logits(rng, 5, -1.0, 1.0);
  const TabularPolicy policy(logits, {1});
  for (std::size_t y = 0; y < 5; ++y) {
    const auto s = score(policy, y);
    const auto fd = oracle::central_difference(
        [&](const std::vector<double>& x) { return std::log(oracle::plain_softmax(x)[y]); }, logits, 1e-6);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(s[i], fd[i], 1e-7);
  }
}

TEST(AllFailGradient, ClosedFormExamples) {
  const TabularPolicy half({0, 0}, {0});
  expect_scaled(allfail_expected_gradient(half, 2, 1.0), grad_success_prob(half), -0.5, 1e-15);

  auto rng = seeded_rng(73);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng.below(5);
    const auto logits = oracle::random_logits(rng, k, -2.0, 2.0);
    const auto correct = oracle::random_correct_set(rng, k);
    const int g = 1 + static_cast<int>(rng.below(6));
    const double c = 0.5 + rng.uniform();
    // (c/G) grad q^G by central differences.
    const auto fd = oracle::central_difference(
        [&](const std::vector<double>& x) { return c / g * std::pow(1.0 - oracle::plain_success(x, correct), g); },
        logits, 1e-6);
    const auto closed = allfail_expected_gradient(TabularPolicy(logits, correct), g, c);
    for (std::size_t i = 0; i < k; ++i) EXPECT_NEAR(closed[i], fd[i], 1e-7);
  }
}

TEST(AllFailGradient, AgreesWithEnumeration) {
  const TabularPolicy fixed({0.0, 0.5, -0.2}, {0});
  EXPECT_LE(max_abs_diff(allfail_expected_gradient(fixed, 3, 1.0), enumerate_allfail_gradient(fixed, 3, 1.0)), 1e-10);

  auto rng = seeded_rng(74);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng.below(4);
    const int g = 1 + static_cast<int>(rng.below(5));
    const auto policy = random_policy(rng, k);
    const double c = 0.1 + 2.0 * rng.uniform();
    EXPECT_LE(max_abs_diff(allfail_expected_gradient(policy, g, c), enumerate_allfail_gradient(policy, g, c)), 1e-10);
  }
}

TEST(AllFailGradient, GroupOfOneIsNegativeGradP) {
  auto rng = seeded_rng(75);
  const auto policy = random_policy(rng, 4);
  expect_scaled(enumerate_allfail_gradient(policy, 1, 1.0), grad_success_prob(policy), -1.0, 1e-14);
}

TEST(AllFailGradient, VanishesAsFailureMassVanishes) {
  const TabularPolicy near_one({-60.0, 0.0, 0.0}, {1, 2});
  const auto g = enumerate_allfail_gradient(near_one, 3, 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LT(std::fabs(g[i]), 1e-40);
}

TEST(AllFailGradient, RejectsBoundaryAndOversizedInputs) {
  const TabularPolicy saturated({-800.0, 0.0}, {1});
  EXPECT_THROW(allfail_expected_gradient(saturated, 2, 1.0), ValidationError);
  const TabularPolicy wide(std::vector<double>(40, 0.0), {0});
  EXPECT_THROW(enumerate_allfail_gradient(wide, 5, 1.0), ValidationError);
}

TEST(AllPassGradient, AgreesWithClosedForm) {
  auto rng = seeded_rng(76);
  for (int trial = 0; trial < 50; ++trial) {
    const auto policy = random_policy(rng, 2 + rng.below(4));
    const int g = 1 + static_cast<int>(rng.below(4));
    const double a = 0.25 + rng.uniform();
    const double p = success_prob(policy);
    expect_scaled(enumerate_allpass_gradient(policy, g, a), grad_success_prob(policy), -a * std::pow(p, g - 1),
                  1e-12);
  }
}

TEST(PasskDerivative, Examples) {
  EXPECT_EQ(passk_derivative(0.0, 5), 5.0);
  EXPECT_EQ(passk_derivative(1.0, 3), 0.0);
  EXPECT_EQ(passk_derivative(0.5, 2), 1.0);
  for (int k = 1; k <= 10; ++k)
    for (double p = 0.01; p < 1.0; p += 0.07) {
      EXPECT_GT(passk_derivative(p, k), 0.0);
      const double h = 1e-6;
      const double fd = ((1 - std::pow(1 - p - h, k)) - (1 - std::pow(1 - p + h, k))) / (2 * h);
      EXPECT_NEAR(passk_derivative(p, k), fd, 1e-6);
    }
}

TEST(ExpectedCoefficient, ReportedValues) {
  EXPECT_EQ(expected_coefficient(Formulation::Sign, 0.25, 4), 2.0);
  EXPECT_NEAR(expected_coefficient(Formulation::TASA, 0.25, 4), 1.015625, 1e-12);
  EXPECT_NEAR(expected_coefficient(Formulation::TASA, 0.25, 4), 1.016, 1e-3);
  EXPECT_NEAR(expected_coefficient(Formulation::DrGRPO, 0.25, 4), 1.4246, 5e-4);
  EXPECT_NEAR(expected_coefficient(Formulation::DrGRPO, 0.25, 4), 1.425, 1e-3);
}

TEST(ExpectedCoefficient, TasaClosedForm) {
  const double p = 0.25, q = 0.75;
  const double closed = (q * q * q + p * p * p) / 4 + (1 - std::pow(p, 4) - std::pow(q, 4)) * (1 / p + 1 / q) / 4;
  EXPECT_NEAR(expected_coefficient(Formulation::TASA, 0.25, 4), closed, 1e-12);
}

TEST(ExpectedCoefficient, MatchesOutcomeEnumeration) {
  for (Formulation f : kAllFormulations)
    for (int g = 2; g <= 10; ++g)
      for (double p : {0.05, 0.25, 0.5, 0.63, 0.9})
        EXPECT_NEAR(expected_coefficient(f, p, g), oracle::coefficient_by_outcomes(f, p, g), 1e-11)
            << to_string(f) << " p=" << p << " G=" << g;
}

TEST(ExpectedCoefficient, MatchesPolicyEnumeration) {
  auto rng = seeded_rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const auto policy = random_policy(rng, 2 + rng.below(3));
    const int g = 2 + static_cast<int>(rng.below(3));
    const double p = success_prob(policy);
    for (Formulation f : kAllFormulations)
      expect_scaled(enumerate_expected_ascent(policy, g, f), grad_success_prob(policy), expected_coefficient(f, p, g),
                    1e-12);
  }
}

TEST(ExpectedCoefficient, SignIsTwoEverywhere) {
  for (int g = 2; g <= 32; ++g)
    for (double p = 0.01; p < 1.0; p += 0.01) EXPECT_NEAR(expected_coefficient(Formulation::Sign, p, g), 2.0, 1e-12);
}

TEST(ExpectedCoefficient, MagnitudeOrderingDiffersFromCoverageOrdering) {
  const double sign = expected_coefficient(Formulation::Sign, 0.25, 4);
  const double drgrpo = expected_coefficient(Formulation::DrGRPO, 0.25, 4);
  const double tasa = expected_coefficient(Formulation::TASA, 0.25, 4);
  EXPECT_GT(sign, drgrpo);
  EXPECT_GT(drgrpo, tasa);
  const double a_sign = degenerate_advantage_magnitude(Formulation::Sign, 4);
  const double a_tasa = degenerate_advantage_magnitude(Formulation::TASA, 4);
  const double a_drgrpo = degenerate_advantage_magnitude(Formulation::DrGRPO, 4);
  EXPECT_GT(a_sign, a_tasa);
  EXPECT_GT(a_tasa, a_drgrpo);
}

TEST(ExpectedCoefficient, RejectsBoundary) {
  EXPECT_THROW(expected_coefficient(Formulation::Sign, 0.0, 4), ValidationError);
  EXPECT_THROW(expected_coefficient(Formulation::Sign, 1.0, 4), ValidationError);
  EXPECT_THROW(expected_coefficient(Formulation::Sign, 0.5, 1), ValidationError);
}

TEST(DegenerateContribution, Examples) {
  for (int g = 2; g <= 8; ++g)
    for (double p : {0.0, 0.3, 1.0}) EXPECT_EQ(degenerate_contribution(p, g, 0.0), 0.0);
  EXPECT_NEAR(degenerate_contribution(1e-9, 4, 1.0), 1.0, 1e-8);
  EXPECT_EQ(degenerate_contribution(0.25, 4, 0.25), 0.109375);
  EXPECT_EQ(degenerate_advantage_magnitude(Formulation::TASA, 4), 0.25);
  EXPECT_EQ(degenerate_advantage_magnitude(Formulation::Sign, 4), 1.0);
  EXPECT_EQ(degenerate_advantage_magnitude(Formulation::MeanCentered, 4), 0.0);
}

TEST(TheoremCheck, PassesOnSmallInstances) {
  const auto r = theorem_check(4, 3, 100, 1);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.trials, 100);
  EXPECT_LE(r.max_deviation, 1e-10);
}
