#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "arccpd/rng.hpp"

using namespace arccpd;

TEST(RngStream, SameIdentitySameSequence) {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, DistinctIdsDiverge) {
  RngStream a(42, 7), b(42, 8), c(43, 7);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    same_ab += x == b.next_u64();
    same_ac += x == c.next_u64();
  }
  EXPECT_EQ(same_ab, 0);
  EXPECT_EQ(same_ac, 0);
}

TEST(DeriveSeed, NoCollisionsOverManyIds) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t id = 0; id < 100000; ++id) seen.insert(derive_seed(123, id));
  EXPECT_EQ(seen.size(), 100000u);
}

TEST(RngStream, UniformRanges) {
  RngStream rng(1, 0);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double p = rng.uniform_pos();
    ASSERT_GT(p, 0.0);
    ASSERT_LE(p, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000.0, 0.5, 0.01);
}

TEST(RngStream, BoundedIntegersAreUniform) {
  RngStream rng(2, 0);
  std::vector<int> counts(7, 0);
  const int draws = 70000;
  for (int i = 0; i < draws; ++i) {
    const auto k = rng.below(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  // Chi-square with 6 degrees of freedom; 22.46 is the 0.999 quantile.
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - draws / 7.0) * (c - draws / 7.0) / (draws / 7.0);
  EXPECT_LT(chi2, 22.46);
}

TEST(RngStream, NormalMoments) {
  RngStream rng(3, 0);
  const int n = 200000;
  double s = 0.0, ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal(2.0, 3.0);
    s += x;
    ss += x * x;
  }
  const double mean = s / n;
  EXPECT_NEAR(mean, 2.0, 0.03);
  EXPECT_NEAR(std::sqrt(ss / n - mean * mean), 3.0, 0.03);
}

TEST(RngStream, CauchyMedianAndQuartiles) {
  RngStream rng(4, 0);
  std::vector<double> v(100001);
  for (auto& x : v) x = rng.cauchy(1.0, 10.0);
  std::sort(v.begin(), v.end());
  EXPECT_NEAR(v[50000], 1.0, 0.3);
  EXPECT_NEAR(v[75000] - v[25000], 20.0, 0.6);  // IQR of Cauchy is 2 * scale
}

TEST(RngStream, ShuffleIsAPermutation) {
  RngStream rng(5, 0);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(std::span<int>(v));
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_FALSE(std::is_sorted(v.begin(), v.end()));
}

TEST(RngStream, ShuffleVisitsAllPermutationsOfThree) {
  RngStream rng(6, 0);
  std::map<std::vector<int>, int> seen;
  for (int t = 0; t < 6000; ++t) {
    std::vector<int> v{0, 1, 2};
    rng.shuffle(std::span<int>(v));
    ++seen[v];
  }
  ASSERT_EQ(seen.size(), 6u);
  for (const auto& [perm, count] : seen) EXPECT_NEAR(count, 1000, 150);
}
