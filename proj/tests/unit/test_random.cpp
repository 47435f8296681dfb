#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "kvtune/random.hpp"

using namespace kvtune;

TEST(SplitMix64, MatchesReferenceSequence) {
  // Published outputs of the reference splitmix64.c for state 0.
  SplitMix64 rng(0);
  EXPECT_EQ(rng.next(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(rng.next(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(rng.next(), 0x06C45D188009454FULL);
}

TEST(SplitMix64, DeriveSeedIsPureAndSpreads) {
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
  EXPECT_EQ(derive_seed(7, 3), mix64(7ULL ^ mix64(3ULL + 0x632BE59BD9B4E019ULL)));
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(42, i));
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(SplitMix64, Uniform01InRange) {
  SplitMix64 rng(5);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.01);
  EXPECT_LT(lo, 0.001);
  EXPECT_GT(hi, 0.999);
}

TEST(SplitMix64, NormalMoments) {
  SplitMix64 rng(11);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(FisherYates, IsPermutationAndDeterministic) {
  std::vector<int> a(100), b(100);
  std::iota(a.begin(), a.end(), 0);
  b = a;
  SplitMix64 r1(9), r2(9);
  fisher_yates(std::span<int>(a), r1);
  fisher_yates(std::span<int>(b), r2);
  EXPECT_EQ(a, b);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(FisherYates, MatchesHandRolledSwapSequence) {
  std::vector<int> v{0, 1, 2, 3, 4};
  SplitMix64 rng(123);
  fisher_yates(std::span<int>(v), rng);

  std::vector<int> w{0, 1, 2, 3, 4};
  SplitMix64 ref(123);
  for (std::size_t i = 4; i >= 1; --i) {
    const std::size_t j = ref.next() % (i + 1);
    std::swap(w[i], w[j]);
  }
  EXPECT_EQ(v, w);
}
