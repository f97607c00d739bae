#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "arccpd/detector.hpp"
#include "arccpd/simgen.hpp"
#include "oracles.hpp"

using namespace arccpd;

namespace {

TimeSeries gaussian(std::size_t n, std::uint64_t seed, double mean = 0.0) {
  RngStream rng(seed, 0);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal(mean, 1.0);
  return validate_series(std::move(v));
}

TimeSeries step(std::size_t n, std::size_t at, double jump, std::uint64_t seed) {
  RngStream rng(seed, 0);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = rng.normal(i < at ? 0.0 : jump, 1.0);
  return validate_series(std::move(v));
}

DetectionConfig base_config(std::size_t h) {
  DetectionConfig cfg;
  cfg.h = h;
  cfg.epsilon = 0.05;
  cfg.delta = 0.01;
  cfg.lambda = LambdaPolicy::simulation();
  cfg.sigma = 1.0;
  return cfg;
}

/// Mirror of ShuffleSplit for the reversed series: the window starting at s'
/// in the reversed series holds the points of original window
/// s = n - s' - 2h + 2 in reverse order.
struct MirrorSplit {
  std::uint64_t seed;
  std::size_t n;
  std::size_t h;

  void operator()(std::size_t start, std::span<std::size_t> perm) const {
    const std::size_t original = n - start - 2 * h + 2;
    std::vector<std::size_t> p(perm.size());
    ShuffleSplit{seed}(original, std::span<std::size_t>(p));
    for (std::size_t k = 0; k < perm.size(); ++k) perm[k] = 2 * h - 1 - p[k];
  }
};

}  // namespace

TEST(ResolveLambda, PolicyFormulas) {
  const double sigma = 2.0, eps = 0.1, eps_eff = 0.15;
  const std::size_t h = 100, n = 1000;
  EXPECT_DOUBLE_EQ(resolve_lambda(LambdaPolicy::manual(0.7), sigma, eps, eps_eff, h, n), 0.7);
  EXPECT_DOUBLE_EQ(resolve_lambda(LambdaPolicy::theoretical(), sigma, eps, eps_eff, h, n), 1.2 * 2.0 * std::sqrt(0.15));
  EXPECT_DOUBLE_EQ(resolve_lambda(LambdaPolicy::theoretical(3.0), sigma, eps, eps_eff, h, n), 3.0 * 2.0 * std::sqrt(0.15));
  EXPECT_DOUBLE_EQ(resolve_lambda(LambdaPolicy::simulation(), sigma, eps, eps_eff, h, n), std::max(1.2, 1.6));
  EXPECT_DOUBLE_EQ(resolve_lambda(LambdaPolicy::simulation(), 1.0, 0.05, eps_eff, h, n), 0.6);
  const double local = 1.2 * sigma * std::sqrt(5.0 * std::log(1000.0) / 100.0);
  EXPECT_DOUBLE_EQ(resolve_lambda(LambdaPolicy::real_data(), sigma, eps, eps_eff, h, n), std::max(local, 1.6));
  EXPECT_DOUBLE_EQ(resolve_lambda(LambdaPolicy::real_data_heavy_tail(), sigma, eps, eps_eff, h, n),
                   std::max(local, 8.0 * sigma * std::sqrt(eps)));
}

TEST(ResolveLambda, MonotoneInSigmaAndEpsilon) {
  for (auto policy : {LambdaPolicy::theoretical(), LambdaPolicy::simulation(), LambdaPolicy::real_data(),
                      LambdaPolicy::real_data_heavy_tail()}) {
    double prev = 0.0;
    for (double sigma : {0.5, 1.0, 2.0, 4.0}) {
      const double l = resolve_lambda(policy, sigma, 0.1, 0.1, 100, 1000);
      EXPECT_GE(l, prev);
      prev = l;
    }
    prev = 0.0;
    for (double eps : {0.0, 0.05, 0.1, 0.2, 0.3}) {
      const double l = resolve_lambda(policy, 1.0, eps, std::max(eps, 0.05), 100, 1000);
      EXPECT_GE(l, prev);
      prev = l;
    }
  }
}

TEST(Config, Validation) {
  const auto y = gaussian(400, 1);
  auto expect_code = [&](DetectionConfig cfg, errc code) {
    try {
      detect(y, cfg);
      ADD_FAILURE() << "expected " << errc_name(code);
    } catch (const error& e) {
      EXPECT_EQ(e.code(), code) << e.what();
    }
  };
  auto cfg = base_config(50);
  cfg.h = 1;
  expect_code(cfg, errc::invalid_config);
  cfg = base_config(101);
  expect_code(cfg, errc::series_too_short);
  cfg = base_config(50);
  cfg.epsilon = 0.5;
  expect_code(cfg, errc::invalid_config);
  cfg = base_config(50);
  cfg.delta = 1.0;
  expect_code(cfg, errc::invalid_config);
  cfg = base_config(50);
  cfg.sigma = -1.0;
  expect_code(cfg, errc::invalid_config);
  cfg = base_config(50);
  cfg.lambda = LambdaPolicy::manual(0.0);
  expect_code(cfg, errc::invalid_config);
  cfg = base_config(50);
  cfg.maximizer_radius = 0;
  expect_code(cfg, errc::invalid_config);
}

TEST(Config, InfeasibleWindowReportsScanStart) {
  const auto y = gaussian(100, 2);
  auto cfg = base_config(5);
  cfg.epsilon = 0.3;
  try {
    detect(y, cfg);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::infeasible_window);
    EXPECT_EQ(e.index(), 10u);
  }
}

TEST(Config, AutoSigmaFailsOnConstantData) {
  const auto y = validate_series(std::vector<double>(400, 1.0));
  auto cfg = base_config(50);
  cfg.sigma.reset();
  try {
    detect(y, cfg);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::lambda_resolution_failure);
  }
  // Manual lambda needs no scale.
  cfg.lambda = LambdaPolicy::manual(0.5);
  EXPECT_TRUE(detect(y, cfg).estimated.empty());
}

TEST(Defaults, DeltaAndRadius) {
  DetectionConfig cfg;
  cfg.h = 25;
  EXPECT_DOUBLE_EQ(resolve_delta(cfg, 400), 1.0 / 400);
  EXPECT_EQ(resolve_radius(cfg), 100u);
  cfg.delta = 0.2;
  cfg.maximizer_radius = 7;
  EXPECT_DOUBLE_EQ(resolve_delta(cfg, 400), 0.2);
  EXPECT_EQ(resolve_radius(cfg), 7u);
}

TEST(Scan, CurveDomainAndConstantSeries) {
  const auto y = validate_series(std::vector<double>(300, 4.0));
  auto cfg = base_config(20);
  cfg.delta = 0.5;
  const auto rep = detect(y, cfg);
  EXPECT_EQ(rep.scan_curve.first_index, 40u);
  EXPECT_EQ(rep.scan_curve.last_index(), 260u);
  for (double d : rep.scan_curve.values) EXPECT_EQ(d, 0.0);
  EXPECT_TRUE(rep.estimated.empty());
  EXPECT_EQ(rep.degenerate_windows, 0u);
}

TEST(Scan, CurveMatchesDirectWindowEstimates) {
  const auto y = gaussian(200, 3);
  auto cfg = base_config(12);
  cfg.epsilon = 0.0;
  cfg.delta = 0.5;
  const auto rep = detect(y, cfg);
  const std::size_t h = cfg.h;
  const std::size_t span = checked_span(RumeParams{cfg.epsilon, *cfg.delta}, h);
  RumeWorkspace ws;
  auto window_estimate = [&](std::size_t start) {
    std::vector<std::size_t> perm(2 * h);
    ShuffleSplit{cfg.seed}(start, std::span<std::size_t>(perm));
    return rume_with_split(y.view().subspan(start - 1, 2 * h), perm, span, ws).estimate;
  };
  for (std::size_t j = 2 * h; j <= y.size() - 2 * h; j += 7) {
    EXPECT_EQ(rep.scan_curve.at(j), std::fabs(window_estimate(j + 1) - window_estimate(j - 2 * h + 1)));
  }
}

TEST(Scan, ThreadCountDoesNotChangeResults) {
  const auto y = step(2000, 1000, 1.5, 4);
  const auto cfg = base_config(60);
  const auto one = detect(y, cfg, Execution{1});
  const auto four = detect(y, cfg, Execution{4});
  EXPECT_EQ(one, four);
}

TEST(Scan, ReversalWithMirroredSplits) {
  const std::size_t n = 900, h = 30;
  const auto y = step(n, 400, 2.0, 5);
  std::vector<double> rev(y.values().rbegin(), y.values().rend());
  const auto yr = validate_series(rev);
  const auto cfg = base_config(h);

  const auto fwd = detect(y, cfg, ShuffleSplit{cfg.seed});
  const auto bwd = detect(yr, cfg, MirrorSplit{cfg.seed, n, h});
  ASSERT_EQ(fwd.scan_curve.size(), bwd.scan_curve.size());
  for (std::size_t j = 2 * h; j <= n - 2 * h; ++j) EXPECT_EQ(bwd.scan_curve.at(j), fwd.scan_curve.at(n - j));

  std::vector<std::size_t> mapped;
  for (auto t : bwd.estimated.locations()) mapped.push_back(n - t);
  std::sort(mapped.begin(), mapped.end());
  EXPECT_EQ(mapped, fwd.estimated.locations());
}

TEST(Detect, FindsStrongStepWithinTwoH) {
  int hits = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto y = step(2000, 1000, 3.0, 100 + s);
    auto cfg = base_config(100);
    cfg.lambda = LambdaPolicy::manual(1.5);
    cfg.seed = s;
    const auto rep = detect(y, cfg);
    if (rep.estimated.size() == 1 && std::abs(static_cast<long>(rep.estimated.locations()[0]) - 1000) <= 200) ++hits;
  }
  EXPECT_GE(hits, 19);
}

TEST(Detect, ReportsResolvedConfiguration) {
  const auto y = gaussian(800, 6);
  auto cfg = base_config(40);
  cfg.delta.reset();
  cfg.seed = 99;
  const auto rep = detect(y, cfg);
  EXPECT_DOUBLE_EQ(rep.delta_used, 1.0 / 800);
  EXPECT_DOUBLE_EQ(rep.epsilon_effective, effective_epsilon(0.05, 1.0 / 800, 40));
  EXPECT_EQ(rep.condition_a1, condition_a1(0.05, 1.0 / 800, 40));
  EXPECT_EQ(rep.sigma_used, 1.0);
  EXPECT_EQ(rep.seed_used, 99u);
}

TEST(LocalMaximizers, MatchBruteForce) {
  RngStream rng(7, 0);
  for (int t = 0; t < 3000; ++t) {
    std::vector<double> curve(1 + rng.below(60));
    const bool coarse = rng.bernoulli(0.5);
    for (auto& x : curve) x = coarse ? static_cast<double>(rng.below(4)) : rng.uniform();
    const std::size_t radius = 1 + rng.below(12);
    const std::size_t first = rng.below(50);
    ASSERT_EQ(local_maximizers(curve, first, radius), oracle::local_maximizers(curve, first, radius));
  }
}

TEST(LocalMaximizers, PlateauKeepsFirstIndex) {
  const std::vector<double> curve{0, 1, 3, 3, 3, 1, 0};
  EXPECT_EQ(local_maximizers(curve, 10, 3), (std::vector<std::size_t>{12}));
}

TEST(Threshold, IsStrict) {
  ScanCurve curve{5, {0.1, 0.5, 0.1, 0.1, 0.1, 0.1, 0.9, 0.1}};
  EXPECT_EQ(threshold_maximizers(curve, 2, 0.5, 20).locations(), (std::vector<std::size_t>{11}));
  EXPECT_EQ(threshold_maximizers(curve, 2, 0.49, 20).locations(), (std::vector<std::size_t>{6, 11}));
}

TEST(Aggregate, ModeTieGoesToSmallestAndLowerMedian) {
  std::vector<RunSummary> runs{
      {1, {100}, 0, 0, 1}, {1, {104}, 0, 0, 2}, {2, {50, 150}, 0, 0, 3}, {2, {52, 149}, 0, 0, 4}, {0, {}, 0, 0, 5}};
  const auto agg = aggregate(runs, 200);
  EXPECT_EQ(agg.modal_k, 1u);
  EXPECT_EQ(agg.consensus_locations.locations(), (std::vector<std::size_t>{100}));
  EXPECT_EQ(agg.khat_histogram.at(0), 1u);
  EXPECT_EQ(agg.khat_histogram.at(2), 2u);
  EXPECT_EQ(agg.runs, 5u);
}

TEST(Aggregate, RepeatedRunsAreDeterministicAndThreadInvariant) {
  const auto y = step(2000, 900, 1.5, 8);
  auto cfg = base_config(100);
  cfg.lambda = LambdaPolicy::manual(1.0);
  cfg.seed = 17;
  const auto a = detect_repeated(y, cfg, 6, Execution{1});
  const auto b = detect_repeated(y, cfg, 6, Execution{3});
  EXPECT_EQ(a, b);
  for (std::size_t r = 0; r < 6; ++r) EXPECT_EQ(a.per_run[r].seed, derive_seed(17, r + 1));
  EXPECT_EQ(a.modal_k, 1u);
}

TEST(RecommendH, WindowWeightAndBands) {
  EXPECT_NEAR(window_weight(0.2), 98.99, 0.01);
  const auto small = recommend_h(5000, 0.05, 1.0, 1.0, 1.2);
  ASSERT_TRUE(small.feasible);
  const double logn = std::log(5000.0);
  EXPECT_EQ(small.lower, static_cast<std::size_t>(std::floor(std::max(10.0, 4 * 1.44) * logn)) + 1);
  EXPECT_EQ(small.upper, std::min<std::size_t>(1250, static_cast<std::size_t>(std::floor(logn / 0.05))));
  // Large contamination relative to the signal is infeasible.
  EXPECT_FALSE(recommend_h(5000, 0.3, 1.0, 1.0, 1.2).feasible);
}
