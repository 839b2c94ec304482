#include <cmath>

#include <gtest/gtest.h>

#include "rmgd/rng.hpp"

using rmgd::CounterRng;

TEST(CounterRng, MatchesSplitMix64Reference) {
  // Published SplitMix64 output for seed 0 (state advanced before mixing).
  CounterRng rng(0);
  EXPECT_EQ(rng.next(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(rng.next(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(rng.next(), 0x06C45D188009454FULL);
}

TEST(CounterRng, ResumesFromCounter) {
  CounterRng a(123);
  for (int i = 0; i < 10; ++i) a.next();
  CounterRng b(123, a.counter());
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(CounterRng, UniformAndBelowRanges) {
  CounterRng rng(9);
  double mean = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    mean += u / 100000;
    ASSERT_LT(rng.below(7), 7u);
  }
  EXPECT_NEAR(mean, 0.5, 3 * std::sqrt(1.0 / 12 / 100000));
}

TEST(CounterRng, NormalMoments) {
  CounterRng rng(10);
  constexpr int n = 200000;
  double m = 0, m2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    m += x / n;
    m2 += x * x / n;
  }
  EXPECT_NEAR(m, 0.0, 4 / std::sqrt(n));
  EXPECT_NEAR(m2, 1.0, 4 * std::sqrt(2.0 / n));
}

TEST(DeriveSeed, StreamsDiffer) {
  using namespace rmgd;
  EXPECT_NE(derive_seed(1, streams::kParams), derive_seed(1, streams::kBandit));
  EXPECT_NE(derive_seed(1, streams::kShuffle, 0), derive_seed(1, streams::kShuffle, 1));
  EXPECT_EQ(derive_seed(7, 3, 4), derive_seed(7, 3, 4));
}
