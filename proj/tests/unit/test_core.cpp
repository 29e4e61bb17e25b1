#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "gradstarve/core.hpp"
#include "gradstarve/rng.hpp"
#include "oracles.hpp"

using namespace gradstarve;

TEST(CounterRng, SameSeedSameStream) {
  auto a = seeded_rng(42);
  auto b = seeded_rng(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(CounterRng, DifferentSeedsDiffer) {
  auto a = seeded_rng(42);
  auto b = seeded_rng(43);
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += a() == b();
  EXPECT_EQ(equal, 0);
}

TEST(CounterRng, DrawMatchesDocumentedFormula) {
  CounterRng rng(7, 3);
  const std::uint64_t key = CounterRng::mix64(7 ^ CounterRng::mix64(3 + 0xD1B54A32D192ED03ULL));
  EXPECT_EQ(rng.key(), key);
  for (std::uint64_t i = 0; i < 10; ++i) EXPECT_EQ(rng(), CounterRng::mix64(key + (i + 1) * 0x9E3779B97F4A7C15ULL));
}

TEST(CounterRng, SplitMixReferenceValue) {
  // First output of the reference SplitMix64 seeded with 0.
  EXPECT_EQ(CounterRng::mix64(0x9E3779B97F4A7C15ULL), 0xE220A8397B1DCDAFULL);
}

TEST(CounterRng, UniformMeanOverMillionDraws) {
  auto rng = seeded_rng(2024);
  double sum = 0.0;
  for (int i = 0; i < 1'000'000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 1e6, 0.5, 0.01);
}

TEST(CounterRng, BelowIsUniformAcrossBins) {
  auto rng = seeded_rng(5);
  std::vector<int> counts(7, 0);
  const int draws = 70'000;
  for (int i = 0; i < draws; ++i) ++counts[rng.below(7)];
  // Each bin is Binomial(70000, 1/7): sd ~ 92.6.
  for (int c : counts) EXPECT_NEAR(c, draws / 7.0, 5 * 92.6);
  EXPECT_THROW(rng.below(0), ValidationError);
}

TEST(CounterRng, CategoricalFollowsWeights) {
  auto rng = seeded_rng(9);
  const std::vector<double> w = {1.0, 0.0, 3.0};
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 40'000; ++i) ++counts[rng.categorical(w)];
  EXPECT_EQ(counts[1], 0);
  EXPECT_NEAR(counts[0] / 40'000.0, 0.25, 5 * std::sqrt(0.25 * 0.75 / 40'000));
  EXPECT_THROW(rng.categorical(std::vector<double>{0.0, 0.0}), ValidationError);
  EXPECT_THROW(rng.categorical(std::vector<double>{1.0, -1.0}), ValidationError);
}

TEST(CounterRng, SubstreamsAreReproducibleAndDistinct) {
  const auto root = seeded_rng(1);
  auto a = root.substream(10);
  auto b = root.substream(10);
  auto c = root.substream(11);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
}

TEST(GroupOutcome, CountsFollowRewards) {
  auto rng = seeded_rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int g = 1 + static_cast<int>(rng.below(12));
    std::vector<int> r(g);
    for (int& v : r) v = static_cast<int>(rng.below(2));
    const GroupOutcome group(r);
    EXPECT_EQ(group.n_plus(), std::accumulate(r.begin(), r.end(), 0));
    EXPECT_EQ(group.group_size(), g);
    EXPECT_EQ(group.degenerate(), group.n_plus() == 0 || group.n_plus() == g);
  }
}

TEST(GroupOutcome, RejectsInvalidRewards) {
  EXPECT_THROW(GroupOutcome(std::vector<int>{}), ValidationError);
  EXPECT_THROW(GroupOutcome(std::vector<int>{0, 2, 0, 0}), ValidationError);
  EXPECT_THROW(GroupOutcome::from_counts(4, 5), ValidationError);
  EXPECT_THROW(GroupOutcome::from_counts(0, 0), ValidationError);
}

TEST(GroupOutcome, FromCountsPutsOnesFirst) {
  const auto g = GroupOutcome::from_counts(4, 1);
  EXPECT_EQ(std::vector<int>(g.rewards().begin(), g.rewards().end()), (std::vector<int>{1, 0, 0, 0}));
}

TEST(Formulation, ParsesNamesAndListsCandidates) {
  for (Formulation f : kAllFormulations) EXPECT_EQ(parse_formulation(to_string(f)), f);
  try {
    parse_formulation("grpo++");
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    for (const char* name : {"mean", "drgrpo", "sign", "tasa"}) EXPECT_NE(msg.find(name), std::string::npos);
  }
}

TEST(PromptDistribution, NormalizationFlag) {
  const PromptDistribution unnorm({{"a", 0.2, 2.0}, {"b", 0.8, 2.0}});
  EXPECT_FALSE(unnorm.normalized());
  const auto norm = unnorm.normalized_copy();
  EXPECT_TRUE(norm.normalized());
  EXPECT_NEAR(norm.total_weight(), 1.0, 1e-12);
  EXPECT_THROW(PromptDistribution({{"a", 1.5, 1.0}}), ValidationError);
  EXPECT_THROW(PromptDistribution({{"a", 0.5, -1.0}}), ValidationError);
  EXPECT_THROW(PromptDistribution({{"a", 0.5, 0.0}}).normalized_copy(), ValidationError);
}

TEST(TabularPolicy, SuccessIsCorrectMassInOpenInterval) {
  auto rng = seeded_rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.below(9);
    const auto logits = oracle::random_logits(rng, k, -5.0, 5.0);
    const auto correct = oracle::random_correct_set(rng, k);
    const TabularPolicy policy(logits, correct);
    const double p = policy.success_prob();
    EXPECT_NEAR(p, oracle::plain_success(logits, correct), 1e-13);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
    const auto pi = policy.probabilities();
    EXPECT_NEAR(std::accumulate(pi.begin(), pi.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(TabularPolicy, RejectsInvalidConstruction) {
  EXPECT_THROW(TabularPolicy({0.0}, {0}), ValidationError);
  EXPECT_THROW(TabularPolicy({0.0, 0.0}, {}), ValidationError);
  EXPECT_THROW(TabularPolicy({0.0, 0.0}, {0, 1}), ValidationError);
  EXPECT_THROW(TabularPolicy({0.0, 0.0, 0.0}, {5}), ValidationError);
  EXPECT_THROW(TabularPolicy({0.0, NAN}, {0}), ValidationError);
  EXPECT_EQ(TabularPolicy({0.0, 0.0, 0.0}, {1, 1}).correct_set().size(), 1u);
}

TEST(Softmax, StableForLargeLogits) {
  const auto p = softmax(std::vector<double>{1000.0, 1000.0});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(Records, Validation) {
  PairRecord pair;
  EXPECT_NO_THROW(pair.validate());
  pair.logp_pos = 0.1;
  EXPECT_THROW(pair.validate(), ValidationError);
  pair = PairRecord{};
  pair.age_neg = -1.0;
  EXPECT_THROW(pair.validate(), ValidationError);

  ReplayConfig cfg;
  EXPECT_EQ(cfg.tau, 200.0);
  EXPECT_EQ(cfg.clip_lo, 0.05);
  EXPECT_EQ(cfg.clip_hi, 1.0);
  cfg.tau = 0.0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = ReplayConfig{};
  cfg.clip_lo = 2.0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = ReplayConfig{};
  cfg.lambda_pair = -0.1;
  EXPECT_THROW(cfg.validate(), ValidationError);

  EXPECT_THROW((RunRecord{"x", 1, 101.0}).validate(), ValidationError);
  EXPECT_NO_THROW((RunRecord{"x", 1, 100.0}).validate());
}
