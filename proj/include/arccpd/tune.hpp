#pragma once

// Tournament selection of the contamination level epsilon.
//
// Each candidate epsilon on a grid yields a robust mean estimate of a training
// window. Candidates are compared pairwise through a Gaussian density test and
// the one that loses the fewest comparisons wins.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "arccpd/core.hpp"
#include "arccpd/parallel.hpp"
#include "arccpd/rng.hpp"
#include "arccpd/rume.hpp"

namespace arccpd {

struct TournamentConfig {
  std::vector<double> grid;
  /// Training window [train_begin, train_end), 0-based half open.
  std::size_t train_begin = 0;
  std::size_t train_end = 300;
  double sigma = 1.0;

  /// m equally spaced values on [0, upper].
  static std::vector<double> equally_spaced(std::size_t m = 201, double upper = 0.25) {
    std::vector<double> g(m);
    for (std::size_t j = 0; j < m; ++j) g[j] = m == 1 ? 0.0 : upper * static_cast<double>(j) / static_cast<double>(m - 1);
    return g;
  }
};

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace detail {

/// Probability under N(theta, sigma^2) of the event {Y closer to theta_j than
/// to theta_k}, i.e. {Y < m} if theta_j < theta_k and {Y > m} otherwise.
inline double closer_probability(double theta, double theta_j, double theta_k, double sigma) {
  const double mid = 0.5 * (theta_j + theta_k);
  const double z = (mid - theta) / sigma;
  return theta_j < theta_k ? normal_cdf(z) : normal_cdf(-z);
}

/// The two reference probabilities P_j(E) = Phi(|d|/2s) and P_k(E) =
/// Phi(-|d|/2s) are symmetric about 1/2, so |p - P_j| > |p - P_k| holds exactly
/// when p < 1/2. Comparing counts keeps p = 1/2 an exact tie (returns 0)
/// instead of leaving it to rounding in the two tail evaluations.
inline int decide(std::size_t closer_to_j, std::size_t total) { return 2 * closer_to_j < total ? 1 : 0; }

/// Pairwise test against training data sorted ascending.
inline int pairwise_test_sorted(double theta_j, double theta_k, std::span<const double> sorted) {
  if (theta_j == theta_k) return 0;
  const double mid = 0.5 * (theta_j + theta_k);
  std::size_t count = 0;
  if (theta_j < theta_k) {
    count = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), mid) - sorted.begin());
  } else {
    count = static_cast<std::size_t>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), mid));
  }
  return decide(count, sorted.size());
}

}  // namespace detail

/// 1 when theta_k explains the training data better than theta_j (theta_j
/// loses), 0 otherwise. Equal estimates carry no information and give 0.
inline int pairwise_test(double theta_j, double theta_k, std::span<const double> training, double sigma) {
  if (!(sigma > 0.0)) throw error(errc::invalid_config, "sigma must be positive");
  if (training.empty()) throw error(errc::empty_series, "training sample is empty");
  if (theta_j == theta_k) return 0;
  const double mid = 0.5 * (theta_j + theta_k);
  std::size_t count = 0;
  for (double y : training) count += theta_j < theta_k ? (y < mid) : (y > mid);
  return detail::decide(count, training.size());
}

struct TournamentResult {
  double epsilon_selected = 0.0;
  std::vector<double> grid;       // feasible candidates only
  std::vector<double> estimates;  // robust mean per candidate
  std::vector<std::size_t> scores;  // number of lost comparisons per candidate
};

/// Runs the tournament on the training window. The window is treated as one
/// 2h block with h = floor(T/2); candidates violating the RUME feasibility
/// condition for that h are dropped. Candidate j draws its split from
/// substream(seed, j) where seed is derived from `rng`'s identity.
inline TournamentResult select_epsilon(const TimeSeries& series, const TournamentConfig& tc, double delta,
                                       const RngStream& rng, const Execution& exec = {}) {
  if (tc.train_end > series.size() || tc.train_begin >= tc.train_end) {
    throw error(errc::invalid_config, "training range outside the series");
  }
  const std::size_t t_len = tc.train_end - tc.train_begin;
  if (t_len < 4) throw error(errc::invalid_config, "training range needs at least 4 points (T >= 2h >= 4)");
  if (!(tc.sigma > 0.0)) throw error(errc::invalid_config, "sigma must be positive");
  if (tc.grid.empty()) throw error(errc::invalid_config, "epsilon grid is empty");
  for (std::size_t j = 0; j < tc.grid.size(); ++j) {
    if (!(tc.grid[j] >= 0.0 && tc.grid[j] < 0.5) || (j > 0 && tc.grid[j] <= tc.grid[j - 1])) {
      throw error(errc::invalid_config, "epsilon grid must be strictly increasing inside [0, 1/2)");
    }
  }
  if (!(delta > 0.0 && delta < 1.0)) throw error(errc::invalid_config, "delta must lie in (0, 1)");

  const std::size_t h = t_len / 2;
  const auto window = series.view().subspan(tc.train_begin, 2 * h);

  TournamentResult res;
  std::vector<std::size_t> grid_index;
  for (std::size_t j = 0; j < tc.grid.size(); ++j) {
    if (condition_a1(tc.grid[j], delta, h)) {
      res.grid.push_back(tc.grid[j]);
      grid_index.push_back(j);
    }
  }
  if (res.grid.empty()) {
    throw error(errc::no_feasible_candidate, "no grid epsilon satisfies the feasibility condition for h=" +
                                                 std::to_string(h) + ", delta=" + std::to_string(delta));
  }

  const std::uint64_t seed = derive_seed(rng.master_seed(), rng.stream_id());
  const std::size_t m = res.grid.size();
  res.estimates.resize(m);
  parallel_for(m, exec, [&](std::size_t c) {
    auto stream = substream(seed, grid_index[c]);
    res.estimates[c] = rume(window, RumeParams{res.grid[c], delta}, stream).estimate;
  });

  std::vector<double> sorted(series.view().begin() + static_cast<std::ptrdiff_t>(tc.train_begin),
                             series.view().begin() + static_cast<std::ptrdiff_t>(tc.train_end));
  std::sort(sorted.begin(), sorted.end());
  res.scores.assign(m, 0);
  parallel_for(m, exec, [&](std::size_t j) {
    std::size_t losses = 0;
    for (std::size_t k = 0; k < m; ++k) {
      if (k != j) losses += detail::pairwise_test_sorted(res.estimates[j], res.estimates[k], sorted);
    }
    res.scores[j] = losses;
  });

  const auto best = std::min_element(res.scores.begin(), res.scores.end());
  res.epsilon_selected = res.grid[static_cast<std::size_t>(best - res.scores.begin())];
  return res;
}

}  // namespace arccpd
