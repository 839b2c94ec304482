#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "rmgd/bandit.hpp"
#include "rmgd/rng.hpp"

using namespace rmgd;
using namespace rmgd::bandit;

namespace {

ArmSet arms_of(std::size_t k) {
  std::vector<std::int64_t> s(k);
  for (std::size_t i = 0; i < k; ++i) s[i] = std::int64_t{16} << i;
  return ArmSet(s);
}

// Literal transcription of the selector step without flooring.
std::vector<double> reference_update(std::vector<double> pi, double beta, std::size_t arm, int y) {
  pi[arm] *= std::exp(-beta * y / pi[arm]);
  const double s = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (double& p : pi) p /= s;
  return pi;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST(ArmSet, RejectsBadSizes) {
  EXPECT_THROW(ArmSet({}), std::invalid_argument);
  EXPECT_THROW(ArmSet({0, 4}), std::invalid_argument);
  EXPECT_THROW(ArmSet({8, 4}), std::invalid_argument);
  EXPECT_THROW(ArmSet({8, 8}), std::invalid_argument);
  ArmSet a({16, 32, 64});
  EXPECT_EQ(a.index_of(32), 1u);
  EXPECT_FALSE(a.index_of(48).has_value());
}

TEST(InitUniform, Examples) {
  auto s6 = init_uniform(arms_of(6), 0.055, 1);
  for (double p : s6.probs) EXPECT_DOUBLE_EQ(p, 1.0 / 6.0);
  EXPECT_EQ(s6.epoch, 0u);
  auto s1 = init_uniform(arms_of(1), 0.5, 1);
  EXPECT_EQ(s1.probs, std::vector<double>{1.0});
  auto s5 = init_uniform(arms_of(5), 0.030, 1);
  for (double p : s5.probs) EXPECT_DOUBLE_EQ(p, 0.2);
}

TEST(InitUniform, RejectsBeta) {
  EXPECT_THROW(init_uniform(arms_of(3), 0.0, 1), std::invalid_argument);
  EXPECT_THROW(init_uniform(arms_of(3), 1.0, 1), std::invalid_argument);
  EXPECT_THROW(init_uniform(arms_of(3), -0.2, 1), std::invalid_argument);
  EXPECT_THROW(init_uniform(arms_of(3), 0.1, 1, 0.5), std::invalid_argument);
}

TEST(DefaultBeta, Examples) {
  EXPECT_NEAR(default_beta(6, 100), 0.0546, 5e-5);
  EXPECT_NEAR(default_beta(5, 350), 0.0303, 5e-5);
  EXPECT_NEAR(std::round(default_beta(6, 100) * 1000) / 1000, 0.055, 1e-12);
  EXPECT_NEAR(std::round(default_beta(5, 350) * 1000) / 1000, 0.030, 1e-12);
  // k=2 with horizon ceil(ln2 / (2 * 0.25^2)) = 6: sqrt(ln 2 / 12).
  const auto h = static_cast<std::int64_t>(std::ceil(std::log(2.0) / (2 * 0.0625)));
  EXPECT_EQ(h, 6);
  EXPECT_DOUBLE_EQ(default_beta(2, h), std::sqrt(0.6931471805599453 / 12.0));
  EXPECT_THROW(default_beta(1, 10), std::invalid_argument);
  EXPECT_THROW(default_beta(3, 0), std::invalid_argument);
}

TEST(RegretBound, Values) {
  EXPECT_NEAR(regret_bound(6, 10000), 655.76, 0.005);
  EXPECT_DOUBLE_EQ(regret_bound(6, 100), 2.0 * std::sqrt(6 * std::log(6.0) * 100));
}

TEST(Update, ThreeArmExample) {
  auto s = init_uniform(arms_of(3), 0.1, 7, 0.0);
  s = update(s, Cost{1, 1});
  EXPECT_NEAR(s.probs[0], 0.3649, 5e-5);
  EXPECT_NEAR(s.probs[1], 0.2703, 5e-5);
  EXPECT_NEAR(s.probs[2], 0.3649, 5e-5);
  const auto ref = reference_update({1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.1, 1, 1);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s.probs[i], ref[i], 1e-15);
  EXPECT_EQ(s.epoch, 1u);
}

TEST(Update, TwoArmExample) {
  auto s = init_uniform(arms_of(2), 0.1, 7, 0.0);
  s = update(s, Cost{1, 0});
  EXPECT_NEAR(s.probs[0], 0.4502, 5e-5);
  EXPECT_NEAR(s.probs[1], 0.5498, 5e-5);
}

TEST(Update, ZeroCostIsBitwiseIdentity) {
  auto s = init_uniform(arms_of(4), 0.2, 3);
  s = update(s, Cost{1, 2});
  s = update(s, Cost{1, 0});
  const auto before = s.probs;
  for (std::size_t a = 0; a < 4; ++a) {
    s = update(s, Cost{0, a});
    EXPECT_EQ(s.probs, before);
  }
  EXPECT_EQ(s.epoch, 6u);
}

TEST(Update, MonotonePenalty) {
  CounterRng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.below(8);
    auto s = init_uniform(arms_of(k), 0.01 + 0.5 * rng.uniform(), trial, 0.0);
    for (int warm = 0; warm < 3; ++warm) s = update(s, Cost{1, rng.below(k)});
    const auto before = s.probs;
    const std::size_t arm = rng.below(k);
    // Keep to masses whose penalty is representable in double precision.
    if (*std::min_element(before.begin(), before.end()) < 1e-6) continue;
    s = update(s, Cost{1, arm});
    for (std::size_t i = 0; i < k; ++i) {
      if (i == arm) {
        EXPECT_LT(s.probs[i], before[i]);
      } else {
        EXPECT_GT(s.probs[i], before[i]);
      }
    }
  }
}

TEST(Update, SimplexPreservedUnderLongSequences) {
  CounterRng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 1 + rng.below(10);
    auto s = init_uniform(arms_of(k), 0.01 + 0.98 * rng.uniform(), trial);
    for (int t = 0; t < 2000; ++t) {
      const std::size_t arm = sample_arm(s);
      s = update(s, Cost{static_cast<int>(rng.below(2)), arm});
      ASSERT_LE(std::abs(sum(s.probs) - 1.0), 1e-12);
      for (double p : s.probs) ASSERT_GE(p, s.floor);
      ASSERT_NO_THROW(validate(s));
    }
  }
}

TEST(Update, FloorKeepsPenalizedArmAlive) {
  auto s = init_uniform(arms_of(3), 0.9, 1);
  for (int t = 0; t < 500; ++t) s = update(s, Cost{1, 0});
  EXPECT_GE(s.probs[0], kDefaultProbabilityFloor);
  EXPECT_LE(std::abs(sum(s.probs) - 1.0), 1e-12);
}

TEST(ApplyFloor, WaterFilling) {
  std::vector<double> p{1e-9, 0.5 - 1e-9, 0.5};
  apply_floor(p, 1e-3);
  EXPECT_DOUBLE_EQ(p[0], 1e-3);
  EXPECT_NEAR(sum(p), 1.0, 1e-15);
  // Unclamped entries keep their ratios.
  EXPECT_NEAR(p[1] / p[2], (0.5 - 1e-9) / 0.5, 1e-15);
}

TEST(EstimatedGradient, Examples) {
  auto s = init_uniform(arms_of(2), 0.1, 0, 0.0);
  s.probs = {0.25, 0.75};
  EXPECT_EQ(estimated_gradient(s, Cost{1, 0}), (std::vector<double>{4.0, 0.0}));
  EXPECT_EQ(estimated_gradient(s, Cost{0, 1}), (std::vector<double>{0.0, 0.0}));
}

TEST(EstimatedGradient, UnbiasedMonteCarlo) {
  // For fixed pi and cost vector y, E over k ~ pi of z equals y.
  CounterRng rng(2024);
  constexpr int kDraws = 100000;
  auto s = init_uniform(arms_of(6), 0.1, 11, 0.0);
  s.probs = {0.05, 0.1, 0.15, 0.2, 0.2, 0.3};
  const std::vector<int> y{1, 0, 1, 1, 0, 1};
  std::vector<double> mean(6, 0.0);
  for (int n = 0; n < kDraws; ++n) {
    const auto k = sample_arm(s);
    const auto z = estimated_gradient(s, Cost{y[k], k});
    for (int i = 0; i < 6; ++i) mean[i] += z[i] / kDraws;
  }
  for (int i = 0; i < 6; ++i) {
    const double se = y[i] * std::sqrt((1 - s.probs[i]) / s.probs[i] / kDraws);
    EXPECT_LE(std::abs(mean[i] - y[i]), 3 * se + 1e-15) << "arm " << i;
  }
}

TEST(Sample, DegenerateDistribution) {
  auto s = init_uniform(arms_of(4), 0.1, 3, 0.0);
  s.probs = {1.0, 0.0, 0.0, 0.0};
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_arm(s), 0u);
  EXPECT_EQ(s.draw_count, 1000u);
}

TEST(Sample, UniformFrequencies) {
  constexpr int kDraws = 100000;
  auto s = init_uniform(arms_of(6), 0.1, 17);
  std::vector<int> counts(6, 0);
  for (int n = 0; n < kDraws; ++n) ++counts[sample_arm(s)];
  const double p = 1.0 / 6.0;
  const double sigma = std::sqrt(kDraws * p * (1 - p));
  for (int c : counts) EXPECT_LE(std::abs(c - kDraws * p), 3 * sigma);
}

TEST(Sample, Deterministic) {
  auto a = init_uniform(arms_of(5), 0.1, 42);
  auto b = init_uniform(arms_of(5), 0.1, 42);
  for (int t = 0; t < 300; ++t) {
    const auto ka = sample_arm(a);
    const auto kb = sample_arm(b);
    ASSERT_EQ(ka, kb);
    a = update(a, Cost{static_cast<int>(t % 3 == 0), ka});
    b = update(b, Cost{static_cast<int>(t % 3 == 0), kb});
  }
  EXPECT_EQ(a, b);
  auto c = init_uniform(arms_of(5), 0.1, 43);
  int differ = 0;
  auto a2 = init_uniform(arms_of(5), 0.1, 42);
  for (int t = 0; t < 50; ++t) differ += sample_arm(a2) != sample_arm(c);
  EXPECT_GT(differ, 0);
}

TEST(Json, RoundTripExact) {
  auto s = init_uniform(arms_of(6), default_beta(6, 100), 0xDEADBEEFCAFEULL);
  for (int t = 0; t < 37; ++t) s = update(s, Cost{t % 2, sample_arm(s)});
  const auto j = to_json(s);
  for (const char* key : {"sizes", "probs", "beta", "epoch", "seed", "draw_count"}) EXPECT_TRUE(j.contains(key)) << key;
  const auto back = state_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back, s);
}

TEST(Validate, DetectsBrokenStates) {
  auto s = init_uniform(arms_of(3), 0.1, 1);
  s.probs[0] += 1e-9;
  EXPECT_THROW(validate(s), std::invalid_argument);
  s = init_uniform(arms_of(3), 0.1, 1);
  s.beta = 1.0;
  EXPECT_THROW(validate(s), std::invalid_argument);
}
