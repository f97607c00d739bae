#pragma once

// The scan-and-threshold detector.
//
// For every j in [2h, n-2h] the scan statistic is the absolute difference of
// the robust means of the 2h points after j and the 2h points up to j. Indices
// that are r-local maximisers of the curve (r = 4h by default) and exceed the
// threshold lambda are reported as change points.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arccpd/core.hpp"
#include "arccpd/parallel.hpp"
#include "arccpd/rng.hpp"
#include "arccpd/rume.hpp"

namespace arccpd {

enum class LambdaKind { manual, theoretical, simulation_default, real_data_default, real_data_heavy_tail };

inline constexpr double kDefaultLambdaConstant = 1.2;

struct LambdaPolicy {
  LambdaKind kind = LambdaKind::simulation_default;
  /// Manual: the threshold itself. Theoretical: the constant C_lambda.
  double value = 0.0;

  static LambdaPolicy manual(double lambda) { return {LambdaKind::manual, lambda}; }
  static LambdaPolicy theoretical(double c_lambda = kDefaultLambdaConstant) { return {LambdaKind::theoretical, c_lambda}; }
  static LambdaPolicy simulation() { return {LambdaKind::simulation_default, 0.0}; }
  static LambdaPolicy real_data() { return {LambdaKind::real_data_default, 0.0}; }
  static LambdaPolicy real_data_heavy_tail() { return {LambdaKind::real_data_heavy_tail, 0.0}; }

  friend bool operator==(const LambdaPolicy&, const LambdaPolicy&) = default;
};

inline const char* lambda_kind_name(LambdaKind k) {
  switch (k) {
    case LambdaKind::manual: return "manual";
    case LambdaKind::theoretical: return "theoretical";
    case LambdaKind::simulation_default: return "sim";
    case LambdaKind::real_data_default: return "realdata";
    case LambdaKind::real_data_heavy_tail: return "realdata-heavy";
  }
  return "unknown";
}

struct DetectionConfig {
  std::size_t h = 1;
  double epsilon = 0.0;
  /// Defaults to 1/n.
  std::optional<double> delta;
  LambdaPolicy lambda;
  /// Defaults to 4h.
  std::optional<std::size_t> maximizer_radius;
  /// nullopt means estimate by MAD.
  std::optional<double> sigma;
  std::uint64_t seed = 0;
};

/// Dense curve over consecutive scan indices first, first+1, ...
struct ScanCurve {
  std::size_t first_index = 0;
  std::vector<double> values;

  std::size_t last_index() const noexcept { return first_index + values.size() - 1; }
  double at(std::size_t j) const { return values.at(j - first_index); }
  std::size_t size() const noexcept { return values.size(); }

  friend bool operator==(const ScanCurve&, const ScanCurve&) = default;
};

struct RunReport {
  ScanCurve scan_curve;
  ChangePointSet estimated;
  std::size_t degenerate_windows = 0;
  double lambda_used = 0.0;
  double epsilon_effective = 0.0;
  double sigma_used = 0.0;
  double delta_used = 0.0;
  bool condition_a1 = false;
  std::uint64_t seed_used = 0;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

// ---------------------------------------------------------------------------
// Configuration resolution.

inline double resolve_delta(const DetectionConfig& cfg, std::size_t n) {
  return cfg.delta.value_or(1.0 / static_cast<double>(n));
}

inline std::size_t resolve_radius(const DetectionConfig& cfg) { return cfg.maximizer_radius.value_or(4 * cfg.h); }

inline void validate_config(const DetectionConfig& cfg, std::size_t n) {
  if (cfg.h < 2) throw error(errc::invalid_config, "h must be at least 2 (window length 2h >= 4)");
  if (!(cfg.epsilon >= 0.0 && cfg.epsilon < 0.5)) throw error(errc::invalid_config, "epsilon must lie in [0, 1/2)");
  const double delta = resolve_delta(cfg, n);
  if (!(delta > 0.0 && delta < 1.0)) throw error(errc::invalid_config, "delta must lie in (0, 1)");
  if (resolve_radius(cfg) < 1) throw error(errc::invalid_config, "maximizer radius must be positive");
  if (cfg.sigma && !(*cfg.sigma > 0.0 && std::isfinite(*cfg.sigma))) {
    throw error(errc::invalid_config, "sigma must be positive");
  }
  if (cfg.lambda.kind == LambdaKind::manual && !(cfg.lambda.value > 0.0)) {
    throw error(errc::invalid_config, "manual lambda must be positive");
  }
  if (cfg.lambda.kind == LambdaKind::theoretical && !(cfg.lambda.value > 0.0)) {
    throw error(errc::invalid_config, "C_lambda must be positive");
  }
  if (n < 4 * cfg.h) {
    throw error(errc::series_too_short,
                "need n >= 4h (n=" + std::to_string(n) + ", h=" + std::to_string(cfg.h) + ")");
  }
}

inline double resolve_sigma(const DetectionConfig& cfg, const TimeSeries& series) {
  if (cfg.sigma) return *cfg.sigma;
  try {
    return mad_sigma(series);
  } catch (const error& e) {
    throw error(errc::lambda_resolution_failure, std::string("sigma=auto failed: ") + e.what());
  }
}

inline double resolve_lambda(const LambdaPolicy& policy, double sigma, double epsilon, double epsilon_effective,
                             std::size_t h, std::size_t n) {
  const double local = 1.2 * sigma * std::sqrt(5.0 * std::log(static_cast<double>(n)) / static_cast<double>(h));
  switch (policy.kind) {
    case LambdaKind::manual: return policy.value;
    case LambdaKind::theoretical: return policy.value * sigma * std::sqrt(epsilon_effective);
    case LambdaKind::simulation_default: return std::max(0.6 * sigma, 8.0 * sigma * epsilon);
    case LambdaKind::real_data_default: return std::max(local, 8.0 * sigma * epsilon);
    case LambdaKind::real_data_heavy_tail: return std::max(local, 8.0 * sigma * std::sqrt(epsilon));
  }
  throw error(errc::invalid_config, "unknown lambda policy");
}

// ---------------------------------------------------------------------------
// Window splits. A split policy fills `perm` (length 2h) for the window that
// starts at 1-based position `start`; perm[0..h) goes to Z, the rest to Z'.

/// Seeded Fisher-Yates with one substream per window start, so the left and
/// right windows of any j draw from distinct streams and the scan result does
/// not depend on evaluation order.
struct ShuffleSplit {
  std::uint64_t seed = 0;

  void operator()(std::size_t start, std::span<std::size_t> perm) const {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    auto rng = substream(seed, start);
    rng.shuffle(perm);
  }
};

template <class Split>
concept WindowSplit = requires(const Split& s, std::size_t start, std::span<std::size_t> perm) { s(start, perm); };

// ---------------------------------------------------------------------------
// Scan.

/// Curve from per-window location estimates: est[s-1] is the estimate for the
/// window of 2h points starting at 1-based position s.
inline ScanCurve curve_from_window_estimates(std::span<const double> est, std::size_t n, std::size_t h) {
  ScanCurve curve;
  curve.first_index = 2 * h;
  const std::size_t last = n - 2 * h;
  curve.values.reserve(last - curve.first_index + 1);
  for (std::size_t j = curve.first_index; j <= last; ++j) {
    const double right = est[j];              // starts at j+1
    const double left = est[j - 2 * h];       // starts at j-2h+1
    curve.values.push_back(std::fabs(right - left));
  }
  return curve;
}

/// Window starts actually referenced by the scan.
inline std::vector<std::size_t> scan_window_starts(std::size_t n, std::size_t h) {
  std::vector<std::size_t> starts;
  const std::size_t left_last = n - 4 * h + 1;  // left windows: [1, n-4h+1]
  const std::size_t right_first = 2 * h + 1;    // right windows: [2h+1, n-2h+1]
  const std::size_t right_last = n - 2 * h + 1;
  for (std::size_t s = 1; s <= right_last; ++s) {
    if (s <= left_last || s >= right_first) starts.push_back(s);
  }
  return starts;
}

struct ScanResult {
  ScanCurve curve;
  std::size_t degenerate_windows = 0;
};

template <WindowSplit Split>
ScanResult rume_scan(std::span<const double> y, std::size_t h, const RumeParams& params, const Split& split,
                     const Execution& exec = {}) {
  const std::size_t n = y.size();
  std::size_t span = 0;
  try {
    span = checked_span(params, h);
  } catch (const error& e) {
    throw error(errc::infeasible_window, std::string(e.what()) + " at j=" + std::to_string(2 * h), 2 * h);
  }

  const auto starts = scan_window_starts(n, h);
  std::vector<double> est(n - 2 * h + 1, 0.0);
  std::vector<unsigned char> degenerate(est.size(), 0);

  constexpr std::size_t chunk = 64;
  const std::size_t chunks = (starts.size() + chunk - 1) / chunk;
  parallel_for(chunks, exec, [&](std::size_t c) {
    RumeWorkspace ws;
    ws.perm.resize(2 * h);
    const std::size_t end = std::min(starts.size(), (c + 1) * chunk);
    for (std::size_t k = c * chunk; k < end; ++k) {
      const std::size_t s = starts[k];
      split(s, std::span<std::size_t>(ws.perm));
      const auto out = rume_with_split(y.subspan(s - 1, 2 * h), ws.perm, span, ws);
      est[s - 1] = out.estimate;
      degenerate[s - 1] = out.degenerate ? 1 : 0;
    }
  });

  ScanResult result;
  result.curve = curve_from_window_estimates(est, n, h);
  result.degenerate_windows = static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), 1));
  return result;
}

/// D_h(j) for j in [2h, n-2h].
template <WindowSplit Split>
ScanResult scan_statistic(const TimeSeries& series, const DetectionConfig& cfg, const Split& split,
                          const Execution& exec = {}) {
  validate_config(cfg, series.size());
  const RumeParams params{cfg.epsilon, resolve_delta(cfg, series.size())};
  return rume_scan(series.view(), cfg.h, params, split, exec);
}

inline ScanResult scan_statistic(const TimeSeries& series, const DetectionConfig& cfg, const Execution& exec = {}) {
  return scan_statistic(series, cfg, ShuffleSplit{cfg.seed}, exec);
}

// ---------------------------------------------------------------------------
// Local maximisers.

/// Indices j (offset by first_index) with curve(j) >= curve(j') for every j'
/// with |j - j'| < radius. Of each run of consecutive maximisers only the
/// first is kept.
inline std::vector<std::size_t> local_maximizers(std::span<const double> curve, std::size_t first_index,
                                                 std::size_t radius) {
  if (radius < 1) throw error(errc::invalid_config, "radius must be positive");
  const std::size_t m = curve.size();
  std::vector<std::size_t> out;
  if (m == 0) return out;
  const std::size_t reach = radius - 1;

  // Sliding maximum over [i - reach, i + reach] with a monotone deque.
  std::deque<std::size_t> dq;
  std::size_t pushed = 0;
  bool prev_max = false;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t hi = std::min(m - 1, i + reach);
    while (pushed <= hi) {
      while (!dq.empty() && curve[dq.back()] <= curve[pushed]) dq.pop_back();
      dq.push_back(pushed++);
    }
    const std::size_t lo = i >= reach ? i - reach : 0;
    while (dq.front() < lo) dq.pop_front();
    const bool is_max = curve[i] >= curve[dq.front()];
    const bool tied_run = prev_max && curve[i] == curve[i - 1];
    if (is_max && !tied_run) out.push_back(first_index + i);
    prev_max = is_max;
  }
  return out;
}

inline std::vector<std::size_t> local_maximizers(const ScanCurve& curve, std::size_t radius) {
  return local_maximizers(curve.values, curve.first_index, radius);
}

/// Maximisers whose curve value is strictly above lambda.
inline ChangePointSet threshold_maximizers(const ScanCurve& curve, std::size_t radius, double lambda, std::size_t n) {
  std::vector<std::size_t> kept;
  for (auto j : local_maximizers(curve, radius)) {
    if (curve.at(j) > lambda) kept.push_back(j);
  }
  return ChangePointSet(std::move(kept), n);
}

// ---------------------------------------------------------------------------

template <WindowSplit Split>
RunReport detect(const TimeSeries& series, const DetectionConfig& cfg, const Split& split, const Execution& exec = {}) {
  const std::size_t n = series.size();
  validate_config(cfg, n);
  const double delta = resolve_delta(cfg, n);
  const double sigma =
      cfg.lambda.kind == LambdaKind::manual ? cfg.sigma.value_or(0.0) : resolve_sigma(cfg, series);

  RunReport report;
  report.delta_used = delta;
  report.sigma_used = sigma;
  report.seed_used = cfg.seed;
  report.epsilon_effective = effective_epsilon(cfg.epsilon, delta, cfg.h);
  report.condition_a1 = condition_a1(cfg.epsilon, delta, cfg.h);
  report.lambda_used = resolve_lambda(cfg.lambda, sigma, cfg.epsilon, report.epsilon_effective, cfg.h, n);
  if (!(report.lambda_used > 0.0)) throw error(errc::lambda_resolution_failure, "resolved lambda is not positive");

  auto scan = rume_scan(series.view(), cfg.h, RumeParams{cfg.epsilon, delta}, split, exec);
  report.degenerate_windows = scan.degenerate_windows;
  report.estimated = threshold_maximizers(scan.curve, resolve_radius(cfg), report.lambda_used, n);
  report.scan_curve = std::move(scan.curve);
  return report;
}

inline RunReport detect(const TimeSeries& series, const DetectionConfig& cfg, const Execution& exec = {}) {
  return detect(series, cfg, ShuffleSplit{cfg.seed}, exec);
}

// ---------------------------------------------------------------------------
// Repeated runs.

struct RunSummary {
  std::size_t k_hat = 0;
  std::vector<std::size_t> locations;
  double lambda_used = 0.0;
  std::size_t degenerate_windows = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

struct AggregateReport {
  std::size_t runs = 0;
  std::map<std::size_t, std::size_t> khat_histogram;
  std::size_t modal_k = 0;
  ChangePointSet consensus_locations;
  std::vector<RunSummary> per_run;

  friend bool operator==(const AggregateReport&, const AggregateReport&) = default;
};

/// Modal K-hat (smallest on ties) and the coordinatewise lower median of the
/// sorted locations over the runs that hit the mode.
inline AggregateReport aggregate(std::vector<RunSummary> per_run, std::size_t n) {
  AggregateReport agg;
  agg.runs = per_run.size();
  for (const auto& r : per_run) ++agg.khat_histogram[r.k_hat];
  std::size_t best = 0;
  for (const auto& [k, count] : agg.khat_histogram) {
    if (count > best) {
      best = count;
      agg.modal_k = k;
    }
  }
  std::vector<std::size_t> consensus;
  if (agg.modal_k > 0) {
    for (std::size_t c = 0; c < agg.modal_k; ++c) {
      std::vector<std::size_t> coord;
      for (const auto& r : per_run) {
        if (r.k_hat == agg.modal_k) coord.push_back(r.locations[c]);
      }
      std::sort(coord.begin(), coord.end());
      consensus.push_back(coord[(coord.size() - 1) / 2]);
    }
  }
  agg.consensus_locations = ChangePointSet(std::move(consensus), n);
  agg.per_run = std::move(per_run);
  return agg;
}

/// Runs `one_run(r, run_seed)` for r = 1..runs with run_seed derived from the
/// master seed, then aggregates. `one_run` returns a RunReport.
template <class OneRun>
AggregateReport aggregate_runs(std::size_t n, std::uint64_t master_seed, std::size_t runs, const Execution& exec,
                               OneRun&& one_run) {
  if (runs < 1) throw error(errc::invalid_config, "runs must be at least 1");
  std::vector<RunSummary> per_run(runs);
  parallel_for(runs, exec, [&](std::size_t i) {
    const std::uint64_t run_seed = derive_seed(master_seed, i + 1);
    const RunReport rep = one_run(i + 1, run_seed);
    per_run[i] = {rep.estimated.size(), rep.estimated.locations(), rep.lambda_used, rep.degenerate_windows, run_seed};
  });
  return aggregate(std::move(per_run), n);
}

inline AggregateReport detect_repeated(const TimeSeries& series, const DetectionConfig& cfg, std::size_t runs,
                                       const Execution& exec = {}) {
  validate_config(cfg, series.size());
  return aggregate_runs(series.size(), cfg.seed, runs, exec, [&](std::size_t, std::uint64_t run_seed) {
    DetectionConfig run_cfg = cfg;
    run_cfg.seed = run_seed;
    return detect(series, run_cfg);
  });
}

// ---------------------------------------------------------------------------
// Window width guidance.

struct HRecommendation {
  bool feasible = false;
  std::size_t lower = 0;
  std::size_t upper = 0;
};

inline double window_weight(double theta) { return 1.0 / (0.5 - std::sqrt(2.0 * theta * (1.0 - 2.0 * theta))); }

/// Admissible range of h for consistent detection, intersected with
/// [2, floor(n/4)]. Lower bounds are strict, so lower = floor(bound) + 1.
inline HRecommendation recommend_h(std::size_t n, double epsilon, double kappa_over_sigma, double c_prime,
                                   double c_lambda) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw error(errc::invalid_config, "epsilon must lie in [0, 1/2)");
  if (n < 2) throw error(errc::invalid_config, "n must be at least 2");
  const double logn = std::log(static_cast<double>(n));
  const auto cap = static_cast<double>(n / 4);
  double lo = 0.0;
  double hi = cap;
  if (epsilon <= 0.1) {
    const double snr = std::max(10.0, 4.0 * c_lambda * c_lambda / (kappa_over_sigma * kappa_over_sigma));
    lo = std::floor(snr * c_prime * logn) + 1.0;
    if (epsilon > 0.0) hi = std::min(cap, std::floor(c_prime * logn / epsilon));
  } else if (epsilon < 0.25 * std::min(1.0, kappa_over_sigma * kappa_over_sigma / (c_lambda * c_lambda))) {
    lo = std::floor(window_weight(epsilon) * c_prime * logn) + 1.0;
  } else {
    return {};
  }
  lo = std::max(lo, 2.0);
  if (lo > hi) return {};
  return {true, static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

}  // namespace arccpd
