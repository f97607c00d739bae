#pragma once

// Monte-Carlo experiment harness.
//
// A cell fixes a scenario and its parameters; every repetition generates one
// series and runs each requested method on it (methods are paired on the same
// data). All randomness descends from the master seed through
// (cell, repetition, purpose) so rows are identical for any thread count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "arccpd/core.hpp"
#include "arccpd/detector.hpp"
#include "arccpd/metrics.hpp"
#include "arccpd/parallel.hpp"
#include "arccpd/rng.hpp"
#include "arccpd/simgen.hpp"
#include "arccpd/tune.hpp"

namespace arccpd {

// ---------------------------------------------------------------------------
// Non-robust control: plain window means in place of RUME.

inline constexpr double kBaselineLambdaConstant = 3.0;

inline RunReport baseline_scan(const TimeSeries& series, const DetectionConfig& cfg) {
  const std::size_t n = series.size();
  validate_config(cfg, n);
  const double sigma = resolve_sigma(cfg, series);

  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + series[i];
  const std::size_t w = 2 * cfg.h;
  std::vector<double> est(n - w + 1);
  for (std::size_t s = 1; s + w - 1 <= n; ++s) est[s - 1] = (prefix[s - 1 + w] - prefix[s - 1]) / static_cast<double>(w);

  RunReport rep;
  rep.scan_curve = curve_from_window_estimates(est, n, cfg.h);
  rep.sigma_used = sigma;
  rep.delta_used = resolve_delta(cfg, n);
  rep.seed_used = cfg.seed;
  rep.lambda_used = kBaselineLambdaConstant * sigma *
                    std::sqrt(std::log(static_cast<double>(n)) / static_cast<double>(cfg.h));
  rep.estimated = threshold_maximizers(rep.scan_curve, resolve_radius(cfg), rep.lambda_used, n);
  return rep;
}

// ---------------------------------------------------------------------------

enum class Method { arc, aarc, baseline };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::arc: return "arc";
    case Method::aarc: return "aarc";
    case Method::baseline: return "baseline";
  }
  return "unknown";
}

inline std::optional<Method> parse_method(const std::string& s) {
  if (s == "arc") return Method::arc;
  if (s == "aarc") return Method::aarc;
  if (s == "baseline") return Method::baseline;
  return std::nullopt;
}

/// One experimental condition. Parameters that a scenario does not use are
/// carried along but ignored (sigma for hiding, kappa for spurious).
struct Cell {
  std::string scenario = "hiding";  // spurious | hiding | clean | sine | cauchy
  std::size_t n = 5000;
  double epsilon = 0.1;
  std::size_t blocks = 2;
  double sigma = 1.0;
  double kappa = 1.0;
  std::size_t h = 170;
  /// nullopt means 1/n.
  std::optional<double> delta;

  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Generating spec for a cell (the seed is filled in per repetition).
inline AttackSpec cell_spec(const Cell& c) {
  if (c.scenario == "spurious") return spurious_preset(c.epsilon, c.blocks, c.sigma, c.n);
  if (c.scenario == "hiding") return hiding_preset(c.epsilon, c.blocks, c.kappa, c.n);
  if (c.scenario == "clean") return clean_preset(c.blocks, c.kappa, c.sigma, c.n);
  if (c.scenario == "sine" || c.scenario == "cauchy") {
    auto spec = c.scenario == "sine" ? sine_preset() : cauchy_preset();
    spec.n = c.n;
    const auto truth = std::vector<std::size_t>{c.n / 4, c.n / 2, 3 * c.n / 4};
    std::visit(
        [&](auto& s) {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, SineSpec> || std::is_same_v<S, CauchySpec>) {
            s.epsilon = c.epsilon;
            s.kappa = c.kappa;
            s.sigma = c.sigma;
            s.truth = truth;
          }
        },
        spec.scenario);
    return spec;
  }
  throw error(errc::spec_invalid, "unknown scenario '" + c.scenario + "'");
}

/// True noise level of the clean component, as handed to every method.
inline double cell_sigma(const Cell& c) { return c.scenario == "hiding" ? 1.0 : c.sigma; }

/// Number of change points of E[Y] created by the block layout.
inline std::size_t cell_block_changes(const Cell& c) { return 2 * c.blocks - 1; }

struct BenchOptions {
  std::size_t reps = 100;
  std::vector<Method> methods{Method::arc};
  std::uint64_t seed = 0;
  LambdaPolicy lambda = LambdaPolicy::simulation();
  std::size_t train_length = 300;
  std::size_t grid_size = 201;
};

struct ExperimentGrid {
  std::string scenario = "hiding";
  std::size_t n = 5000;
  std::vector<double> epsilon{0.1};
  std::vector<std::size_t> blocks{2};
  std::vector<double> sigma{1.0};
  std::vector<double> kappa{1.0};
  std::vector<std::size_t> h{170};
  std::optional<double> delta;
  BenchOptions options;

  /// Cartesian product in the order epsilon, blocks, sigma, kappa, h.
  std::vector<Cell> cells() const {
    std::vector<Cell> out;
    for (double e : epsilon)
      for (auto b : blocks)
        for (double s : sigma)
          for (double k : kappa)
            for (auto w : h) out.push_back({scenario, n, e, b, s, k, w, delta});
    return out;
  }
};

struct BenchRow {
  Cell cell;
  Method method = Method::arc;
  std::size_t reps = 0;
  std::size_t failures = 0;
  std::string status = "ok";
  double mean_count_error = 0.0;
  double sd_count_error = 0.0;
  double median_scaled_dh = 0.0;
  double sd_scaled_dh = 0.0;
  double mean_scaled_dh = 0.0;
  double mean_khat = 0.0;
  double sd_khat = 0.0;
  double mean_signed_error = 0.0;
  std::size_t hist_k_eq_K = 0;
  std::size_t hist_k_eq_2D1 = 0;
  std::size_t excluded_inf = 0;
  std::map<std::size_t, std::size_t> khat_histogram;

  friend bool operator==(const BenchRow&, const BenchRow&) = default;
};

/// Outcome of one method on one repetition.
struct RepOutcome {
  bool ok = false;
  std::string error_message;
  std::size_t k_hat = 0;
  std::size_t k_true = 0;
  double scaled_dh = 0.0;
  double hausdorff = 0.0;
  double epsilon_used = 0.0;
};

namespace detail {

inline double mean_of(const std::vector<double>& v) {
  return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                   : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return v.empty() ? std::numeric_limits<double>::quiet_NaN() : 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline double median_or_nan(std::vector<double> v) {
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : median_of(std::move(v));
}

}  // namespace detail

/// Runs one method on one labelled series. Seeds: `detect_seed` for the scan,
/// `tune_seed` for the tournament.
inline RepOutcome run_method(Method method, const Cell& cell, const LabeledSeries& data, const BenchOptions& opt,
                             std::uint64_t detect_seed, std::uint64_t tune_seed) {
  RepOutcome out;
  try {
    DetectionConfig cfg;
    cfg.h = cell.h;
    cfg.epsilon = cell.epsilon;
    cfg.delta = cell.delta;
    cfg.lambda = opt.lambda;
    cfg.sigma = cell_sigma(cell);
    cfg.seed = detect_seed;

    RunReport rep;
    if (method == Method::baseline) {
      rep = baseline_scan(data.series, cfg);
    } else {
      if (method == Method::aarc) {
        TournamentConfig tc;
        tc.grid = TournamentConfig::equally_spaced(opt.grid_size);
        tc.train_begin = 0;
        tc.train_end = std::min(opt.train_length, data.series.size());
        tc.sigma = *cfg.sigma;
        cfg.epsilon =
            select_epsilon(data.series, tc, resolve_delta(cfg, data.series.size()), substream(tune_seed, 0)).epsilon_selected;
      }
      rep = detect(data.series, cfg);
    }
    out.ok = true;
    out.epsilon_used = cfg.epsilon;
    out.k_hat = rep.estimated.size();
    out.k_true = data.truth_f.size();
    out.hausdorff = hausdorff(rep.estimated, data.truth_f);
    out.scaled_dh = out.hausdorff / static_cast<double>(data.series.size());
  } catch (const error& e) {
    out.error_message = e.what();
  }
  return out;
}

inline BenchRow summarize(const Cell& cell, Method method, const std::vector<RepOutcome>& reps) {
  BenchRow row;
  row.cell = cell;
  row.method = method;
  row.reps = reps.size();
  std::vector<double> count_err, khat, signed_err, dh;
  for (const auto& r : reps) {
    if (!r.ok) {
      if (row.failures++ == 0) row.status = "failed: " + r.error_message;
      continue;
    }
    const double k = static_cast<double>(r.k_hat);
    const double kt = static_cast<double>(r.k_true);
    count_err.push_back(std::fabs(k - kt));
    khat.push_back(k);
    signed_err.push_back(k - kt);
    ++row.khat_histogram[r.k_hat];
    if (r.k_hat == r.k_true) ++row.hist_k_eq_K;
    if (r.k_hat == cell_block_changes(cell)) ++row.hist_k_eq_2D1;
    if (std::isinf(r.scaled_dh)) {
      ++row.excluded_inf;
    } else {
      dh.push_back(r.scaled_dh);
    }
  }
  row.mean_count_error = detail::mean_of(count_err);
  row.sd_count_error = detail::sd_of(count_err);
  row.mean_khat = detail::mean_of(khat);
  row.sd_khat = detail::sd_of(khat);
  row.mean_signed_error = detail::mean_of(signed_err);
  row.median_scaled_dh = detail::median_or_nan(dh);
  row.sd_scaled_dh = detail::sd_of(dh);
  row.mean_scaled_dh = detail::mean_of(dh);
  return row;
}

/// Raw per-repetition outcomes, indexed [cell][method][rep].
using RawOutcomes = std::vector<std::vector<std::vector<RepOutcome>>>;

inline RawOutcomes run_cells_raw(const std::vector<Cell>& cells, const BenchOptions& opt, const Execution& exec = {}) {
  if (opt.reps < 1) throw error(errc::invalid_config, "reps must be at least 1");
  if (cells.empty()) throw error(errc::invalid_config, "experiment grid is empty");
  if (opt.methods.empty()) throw error(errc::invalid_config, "no methods requested");

  RawOutcomes raw(cells.size(), std::vector<std::vector<RepOutcome>>(opt.methods.size(),
                                                                     std::vector<RepOutcome>(opt.reps)));
  parallel_for(cells.size() * opt.reps, exec, [&](std::size_t task) {
    const std::size_t c = task / opt.reps;
    const std::size_t r = task % opt.reps;
    const std::uint64_t rep_seed = derive_seed(derive_seed(opt.seed, c + 1), r + 1);
    LabeledSeries data;
    try {
      AttackSpec spec = cell_spec(cells[c]);
      spec.seed = derive_seed(rep_seed, 0);
      data = generate(spec);
    } catch (const error& e) {
      for (auto& per_method : raw[c]) per_method[r].error_message = e.what();
      return;
    }
    for (std::size_t m = 0; m < opt.methods.size(); ++m) {
      raw[c][m][r] = run_method(opt.methods[m], cells[c], data, opt, derive_seed(rep_seed, 1), derive_seed(rep_seed, 2));
    }
  });
  return raw;
}

inline std::vector<BenchRow> run_cells(const std::vector<Cell>& cells, const BenchOptions& opt,
                                       const Execution& exec = {}) {
  const auto raw = run_cells_raw(cells, opt, exec);
  std::vector<BenchRow> rows;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t m = 0; m < opt.methods.size(); ++m) rows.push_back(summarize(cells[c], opt.methods[m], raw[c][m]));
  }
  return rows;
}

inline std::vector<BenchRow> run_grid(const ExperimentGrid& grid, const Execution& exec = {}) {
  return run_cells(grid.cells(), grid.options, exec);
}

/// delta shared by the experiment presets (tables and phase sweep). The
/// default 1/n inflates epsilon' to log(n)/h, which leaves no admissible
/// interval span at h = 42 and makes the scan noticeably noisier at h = 170.
inline constexpr double kExperimentDelta = 0.01;

// ---------------------------------------------------------------------------
// Phase transition sweep.

/// sigma * sqrt(max{epsilon, log(n)/L}): the detection boundary for jump size.
inline double kappa_threshold(double epsilon, std::size_t n, std::size_t spacing, double sigma = 1.0) {
  return sigma * std::sqrt(std::max(epsilon, std::log(static_cast<double>(n)) / static_cast<double>(spacing)));
}

struct PhaseConfig {
  std::size_t n = 5000;
  std::size_t spacing = 1250;
  double epsilon = 0.1;
  /// Jump sizes as multiples of kappa_threshold.
  std::vector<double> multiples{0.2, 0.5, 1.0, 2.0, 3.0, 5.0};
  std::size_t reps = 50;
  std::size_t h = 150;
  std::optional<double> delta = kExperimentDelta;
  LambdaPolicy lambda = LambdaPolicy::simulation();
  std::uint64_t seed = 0;
};

struct PhasePoint {
  double kappa = 0.0;
  double multiple = 0.0;
  std::size_t successes = 0;
  std::size_t reps = 0;
  double success_rate = 0.0;
};

/// Hiding attack with spacing L (blocks = n / (2L)). A repetition succeeds when
/// K-hat = K and the Hausdorff distance is at most 2h.
inline std::vector<PhasePoint> phase_sweep(const PhaseConfig& pc, const Execution& exec = {}) {
  if (pc.spacing == 0 || pc.n % (2 * pc.spacing) != 0) {
    throw error(errc::invalid_config, "n must be a multiple of 2L for the phase sweep");
  }
  if (8 * pc.h >= pc.spacing) throw error(errc::invalid_config, "phase sweep requires h < L/8");
  const std::size_t blocks = pc.n / (2 * pc.spacing);
  const double threshold = kappa_threshold(pc.epsilon, pc.n, pc.spacing);

  std::vector<unsigned char> success(pc.multiples.size() * pc.reps, 0);
  parallel_for(success.size(), exec, [&](std::size_t task) {
    const std::size_t g = task / pc.reps;
    const std::size_t r = task % pc.reps;
    const std::uint64_t rep_seed = derive_seed(derive_seed(pc.seed, g + 1), r + 1);
    auto spec = hiding_preset(pc.epsilon, blocks, pc.multiples[g] * threshold, pc.n, derive_seed(rep_seed, 0));
    const auto data = generate(spec);
    DetectionConfig cfg;
    cfg.h = pc.h;
    cfg.epsilon = pc.epsilon;
    cfg.delta = pc.delta;
    cfg.lambda = pc.lambda;
    cfg.sigma = 1.0;
    cfg.seed = derive_seed(rep_seed, 1);
    const auto rep = detect(data.series, cfg);
    success[task] = rep.estimated.size() == data.truth_f.size() &&
                    hausdorff(rep.estimated, data.truth_f) <= static_cast<double>(2 * pc.h);
  });

  std::vector<PhasePoint> out;
  for (std::size_t g = 0; g < pc.multiples.size(); ++g) {
    PhasePoint p;
    p.multiple = pc.multiples[g];
    p.kappa = pc.multiples[g] * threshold;
    p.reps = pc.reps;
    for (std::size_t r = 0; r < pc.reps; ++r) p.successes += success[g * pc.reps + r];
    p.success_rate = static_cast<double>(p.successes) / static_cast<double>(pc.reps);
    out.push_back(p);
  }
  return out;
}

/// Least-squares non-decreasing fit (pool adjacent violators, equal weights).
inline std::vector<double> isotonic_fit(const std::vector<double>& y) {
  std::vector<double> level;
  std::vector<std::size_t> width;
  for (double v : y) {
    level.push_back(v);
    width.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      const std::size_t w = width[width.size() - 2] + width.back();
      const double merged =
          (level[level.size() - 2] * static_cast<double>(width[width.size() - 2]) +
           level.back() * static_cast<double>(width.back())) / static_cast<double>(w);
      level.pop_back();
      width.pop_back();
      level.back() = merged;
      width.back() = w;
    }
  }
  std::vector<double> fit;
  for (std::size_t b = 0; b < level.size(); ++b) fit.insert(fit.end(), width[b], level[b]);
  return fit;
}

inline double max_isotonic_residual(const std::vector<double>& y) {
  const auto fit = isotonic_fit(y);
  double worst = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) worst = std::max(worst, std::fabs(y[i] - fit[i]));
  return worst;
}

// ---------------------------------------------------------------------------
// Preset experiment tables.

/// Spurious-attack cells (epsilon, blocks, sigma) at n = 5000, 2h = 340.
inline std::vector<Cell> table_d1_cells() {
  const struct { double e; std::size_t b; double s; } rows[] = {
      {0.0, 1, 1},   {0.05, 1, 1}, {0.05, 1, 5}, {0.05, 1, 20}, {0.05, 5, 1}, {0.05, 5, 5}, {0.05, 5, 20},
      {0.1, 1, 1},   {0.1, 1, 5},  {0.1, 1, 20}, {0.1, 2, 1},   {0.1, 5, 1},  {0.1, 5, 5},  {0.1, 5, 20},
      {0.2, 1, 1},   {0.2, 1, 5},  {0.2, 1, 20}, {0.2, 2, 1},   {0.2, 5, 1},  {0.2, 5, 5},  {0.2, 5, 20},
  };
  std::vector<Cell> cells;
  for (const auto& r : rows) cells.push_back({"spurious", 5000, r.e, r.b, r.s, 0.0, 170, kExperimentDelta});
  return cells;
}

/// Window widths of the sensitivity study, as h. The tabulated 2h values
/// 85, 170, 255, 340, 511 are rounded down to even lengths.
inline std::vector<std::size_t> sensitivity_widths() { return {42, 85, 127, 170, 255}; }

inline std::vector<Cell> table_d2_sensitivity_cells() {
  std::vector<Cell> cells;
  for (auto h : sensitivity_widths()) cells.push_back({"hiding", 5000, 0.1, 2, 1.0, 1.0, h, kExperimentDelta});
  for (auto h : sensitivity_widths()) cells.push_back({"hiding", 5000, 0.1, 3, 1.0, 1.0, h, kExperimentDelta});
  for (auto h : sensitivity_widths()) cells.push_back({"spurious", 5000, 0.1, 5, 1.0, 0.0, h, kExperimentDelta});
  return cells;
}

// ---------------------------------------------------------------------------
// CSV output.

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline const char* bench_csv_header() {
  return "scenario,n,epsilon,delta_blocks,sigma,kappa,h,two_h,method,mean_count_error,sd_count_error,"
         "median_scaled_dh,sd_scaled_dh,hist_k_eq_K,hist_k_eq_2D1,excluded_inf,reps,failures,mean_khat,sd_khat,"
         "mean_signed_error,mean_scaled_dh,delta,status";
}

inline void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << bench_csv_header() << '\n';
  for (const auto& r : rows) {
    const auto& c = r.cell;
    os << c.scenario << ',' << c.n << ',' << format_number(c.epsilon) << ',' << c.blocks << ','
       << format_number(c.sigma) << ',' << format_number(c.kappa) << ',' << c.h << ',' << 2 * c.h << ','
       << method_name(r.method) << ',' << format_number(r.mean_count_error) << ','
       << format_number(r.sd_count_error) << ',' << format_number(r.median_scaled_dh) << ','
       << format_number(r.sd_scaled_dh) << ',' << r.hist_k_eq_K << ',' << r.hist_k_eq_2D1 << ','
       << r.excluded_inf << ',' << r.reps << ',' << r.failures << ',' << format_number(r.mean_khat) << ','
       << format_number(r.sd_khat) << ',' << format_number(r.mean_signed_error) << ','
       << format_number(r.mean_scaled_dh) << ',' << (c.delta ? format_number(*c.delta) : std::string("1/n"))
       << ',' << '"' << r.status << '"' << '\n';
  }
}

inline void write_phase_csv(std::ostream& os, const std::vector<PhasePoint>& points) {
  os << "kappa,kappa_over_threshold,successes,reps,success_rate\n";
  for (const auto& p : points) {
    os << format_number(p.kappa) << ',' << format_number(p.multiple) << ',' << p.successes << ',' << p.reps << ','
       << format_number(p.success_rate) << '\n';
  }
}

}  // namespace arccpd
