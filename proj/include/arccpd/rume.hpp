#pragma once

// Robust univariate mean estimation (RUME).
//
// A window of 2h points is split at random into halves Z and Z'. The shortest
// interval spanning D+1 consecutive order statistics of Z is located, and the
// estimate is the mean of the Z' points falling inside it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "arccpd/core.hpp"
#include "arccpd/rng.hpp"

namespace arccpd {

struct RumeParams {
  double epsilon = 0.0;
  double delta = 0.1;
};

struct RumeOutcome {
  double estimate = 0.0;
  double low = 0.0;
  double high = 0.0;
  std::size_t kept_count = 0;
  bool degenerate = false;

  friend bool operator==(const RumeOutcome&, const RumeOutcome&) = default;
};

/// max{epsilon, log(1/delta) / h}
inline double effective_epsilon(double epsilon, double delta, std::size_t h) {
  return std::max(epsilon, std::log(1.0 / delta) / static_cast<double>(h));
}

/// Left-hand side of the RUME feasibility condition
///   2e' + 2 sqrt(e' log(1/delta)/h) + log(1/delta)/h < 1/2.
inline double feasibility_lhs(double epsilon, double delta, std::size_t h) {
  const double tail = std::log(1.0 / delta) / static_cast<double>(h);
  const double eps = std::max(epsilon, tail);
  return 2.0 * eps + 2.0 * std::sqrt(eps * tail) + tail;
}

inline bool condition_a1(double epsilon, double delta, std::size_t h) {
  return feasibility_lhs(epsilon, delta, h) < 0.5;
}

/// Number of order-statistic gaps D spanned by the interval. Negative values
/// are returned as-is so callers can report them.
inline long interval_span(double epsilon, double delta, std::size_t h) {
  const double hd = static_cast<double>(h);
  const double tail = std::log(1.0 / delta) / hd;
  const double eps = std::max(epsilon, tail);
  return static_cast<long>(std::floor(hd * (1.0 - 2.0 * eps - 2.0 * std::sqrt(eps * tail) - tail)));
}

inline void validate_rume_params(const RumeParams& p) {
  if (!(p.epsilon >= 0.0 && p.epsilon < 0.5)) throw error(errc::invalid_config, "epsilon must lie in [0, 1/2)");
  if (!(p.delta > 0.0 && p.delta < 1.0)) throw error(errc::invalid_config, "delta must lie in (0, 1)");
}

/// Checked D for a given h. Throws InfeasibleWindow unless 1 <= D <= h-1.
inline std::size_t checked_span(const RumeParams& p, std::size_t h) {
  const long d = interval_span(p.epsilon, p.delta, h);
  if (d < 1 || d > static_cast<long>(h) - 1) {
    throw error(errc::infeasible_window,
                "interval span D=" + std::to_string(d) + " outside [1, h-1] for h=" + std::to_string(h) +
                    " (epsilon'=" + std::to_string(effective_epsilon(p.epsilon, p.delta, h)) +
                    ", A1 lhs=" + std::to_string(feasibility_lhs(p.epsilon, p.delta, h)) + ")");
  }
  return static_cast<std::size_t>(d);
}

struct ShorthInterval {
  double low = 0.0;
  double high = 0.0;
  std::size_t start = 1;  // j*, 1-based
};

/// Shortest [Z_(j), Z_(j+D)] over j in 1..h-D; smallest j on ties.
inline ShorthInterval shorth_interval(std::span<const double> sorted_half, std::size_t span) {
  const std::size_t h = sorted_half.size();
  if (span < 1 || span + 1 > h) throw error(errc::infeasible_window, "shorth span must lie in [1, h-1]");
  std::size_t best = 0;
  double best_width = sorted_half[span] - sorted_half[0];
  for (std::size_t i = 1; i + span < h; ++i) {
    const double w = sorted_half[i + span] - sorted_half[i];
    if (w < best_width) {
      best_width = w;
      best = i;
    }
  }
  return {sorted_half[best], sorted_half[best + span], best + 1};
}

/// Reusable buffers so a scan does not allocate per window.
struct RumeWorkspace {
  std::vector<double> z;
  std::vector<double> z_prime;
  std::vector<std::size_t> perm;
};

/// RUME with an explicit split: positions perm[0..h) form Z, the rest Z'.
/// The outcome depends only on the two multisets, not on their order.
inline RumeOutcome rume_with_split(std::span<const double> window, std::span<const std::size_t> perm,
                                   std::size_t span, RumeWorkspace& ws) {
  const std::size_t h = window.size() / 2;
  ws.z.resize(h);
  ws.z_prime.resize(h);
  for (std::size_t k = 0; k < h; ++k) {
    ws.z[k] = window[perm[k]];
    ws.z_prime[k] = window[perm[h + k]];
  }
  std::sort(ws.z.begin(), ws.z.end());
  std::sort(ws.z_prime.begin(), ws.z_prime.end());

  const auto iv = shorth_interval(ws.z, span);
  RumeOutcome out;
  out.low = iv.low;
  out.high = iv.high;

  // Endpoint-inclusive membership; Z' is sorted so the kept points are a run.
  const auto first = std::lower_bound(ws.z_prime.begin(), ws.z_prime.end(), iv.low);
  const auto last = std::upper_bound(first, ws.z_prime.end(), iv.high);
  out.kept_count = static_cast<std::size_t>(last - first);
  if (out.kept_count == 0) {
    out.degenerate = true;
    out.estimate = median_of(std::vector<double>(window.begin(), window.end()));
    return out;
  }
  out.estimate = std::accumulate(first, last, 0.0) / static_cast<double>(out.kept_count);
  return out;
}

inline void check_window(std::span<const double> window) {
  if (window.size() < 4 || window.size() % 2 != 0) {
    throw error(errc::invalid_config, "RUME window must have even length 2h >= 4");
  }
}

/// Draws the split from `rng` with a Fisher-Yates shuffle of positions.
inline RumeOutcome rume(std::span<const double> window, const RumeParams& params, RngStream& rng,
                        RumeWorkspace& ws) {
  check_window(window);
  validate_rume_params(params);
  const std::size_t h = window.size() / 2;
  const std::size_t span = checked_span(params, h);
  ws.perm.resize(window.size());
  std::iota(ws.perm.begin(), ws.perm.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(ws.perm));
  return rume_with_split(window, ws.perm, span, ws);
}

inline RumeOutcome rume(std::span<const double> window, const RumeParams& params, RngStream& rng) {
  RumeWorkspace ws;
  return rume(window, params, rng, ws);
}

}  // namespace arccpd
