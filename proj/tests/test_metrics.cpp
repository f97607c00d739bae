#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "arccpd/metrics.hpp"
#include "arccpd/rng.hpp"
#include "oracles.hpp"

using namespace arccpd;

namespace {

std::vector<std::size_t> random_cps(RngStream& rng, std::size_t n, std::size_t max_k) {
  std::set<std::size_t> s;
  const std::size_t k = rng.below(max_k + 1);
  for (std::size_t i = 0; i < k; ++i) s.insert(1 + rng.below(n - 1));
  return {s.begin(), s.end()};
}

}  // namespace

TEST(Hausdorff, EmptySetConventions) {
  const ChangePointSet none({}, 100), some({50}, 100);
  EXPECT_EQ(hausdorff(none, none), 0.0);
  EXPECT_TRUE(std::isinf(hausdorff(none, some)));
  EXPECT_TRUE(std::isinf(hausdorff(some, none)));
}

TEST(Hausdorff, KnownValue) {
  EXPECT_EQ(hausdorff(ChangePointSet({10, 50}, 100), ChangePointSet({12}, 100)), 38.0);
}

TEST(Hausdorff, OracleSymmetryIdentityTriangle) {
  RngStream rng(1, 0);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t n = 2 + rng.below(300);
    const auto a = random_cps(rng, n, 6), b = random_cps(rng, n, 6), c = random_cps(rng, n, 6);
    const ChangePointSet A(a, n), B(b, n), C(c, n);
    ASSERT_EQ(hausdorff(A, B), oracle::hausdorff(a, b));
    ASSERT_EQ(hausdorff(A, B), hausdorff(B, A));
    ASSERT_EQ(hausdorff(A, A), 0.0);
    if (!a.empty() && !b.empty() && !c.empty()) {
      ASSERT_LE(hausdorff(A, C), hausdorff(A, B) + hausdorff(B, C));
    }
  }
}

TEST(CountError, AbsoluteDifference) {
  EXPECT_EQ(count_error(ChangePointSet({1, 2, 3}, 10), ChangePointSet({5}, 10)), 2u);
  EXPECT_EQ(count_error(ChangePointSet({}, 10), ChangePointSet({5}, 10)), 1u);
}

TEST(Covering, KnownValues) {
  const ChangePointSet truth({50}, 100);
  EXPECT_DOUBLE_EQ(covering(truth, truth), 1.0);
  // One block against two halves: each half has Jaccard 0.5 with the whole.
  EXPECT_DOUBLE_EQ(covering(ChangePointSet({}, 100), truth), 0.5);
  EXPECT_DOUBLE_EQ(covering(truth, ChangePointSet({}, 100)), 0.5);
  // Quarters against halves: each half overlaps a quarter with Jaccard 0.5.
  EXPECT_DOUBLE_EQ(covering(ChangePointSet({25, 50, 75}, 100), truth), 0.5);
}

TEST(Covering, IsDirectional) {
  const ChangePointSet a({10}, 100), b({10, 90}, 100);
  EXPECT_NE(covering(a, b), covering(b, a));
}

TEST(Covering, MatchesExhaustiveOracle) {
  RngStream rng(2, 0);
  for (int t = 0; t < 3000; ++t) {
    const std::size_t n = 2 + rng.below(29);
    const auto a = random_cps(rng, n, 5), b = random_cps(rng, n, 5);
    const double got = covering(ChangePointSet(a, n), ChangePointSet(b, n));
    ASSERT_NEAR(got, oracle::covering(a, b, n), 1e-12);
    ASSERT_GE(got, 0.0);
    ASSERT_LE(got, 1.0 + 1e-12);
  }
}

TEST(Covering, RejectsMismatchedLengths) {
  EXPECT_THROW(covering(ChangePointSet({}, 10), ChangePointSet({}, 11)), error);
}

TEST(Evaluate, CombinesMetrics) {
  const auto m = evaluate(ChangePointSet({48, 80}, 100), ChangePointSet({50}, 100));
  EXPECT_EQ(m.hausdorff, 30.0);
  EXPECT_DOUBLE_EQ(m.scaled_hausdorff, 0.3);
  EXPECT_EQ(m.count_error, 1u);
  EXPECT_NEAR(m.covering, oracle::covering({48, 80}, {50}, 100), 1e-12);
}
