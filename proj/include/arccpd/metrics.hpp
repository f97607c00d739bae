#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>

#include "arccpd/core.hpp"

namespace arccpd {

namespace detail {

inline double directed_hausdorff(std::span<const std::size_t> from, std::span<const std::size_t> to) {
  double worst = 0.0;
  for (auto s : from) {
    const auto it = std::lower_bound(to.begin(), to.end(), s);
    std::size_t best = std::numeric_limits<std::size_t>::max();
    if (it != to.end()) best = *it - s;
    if (it != to.begin()) best = std::min(best, s - *(it - 1));
    worst = std::max(worst, static_cast<double>(best));
  }
  return worst;
}

}  // namespace detail

/// Two-sided Hausdorff distance; +inf when exactly one set is empty and 0
/// when both are.
inline double hausdorff(const ChangePointSet& a, const ChangePointSet& b) {
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  return std::max(detail::directed_hausdorff(a.locations(), b.locations()),
                  detail::directed_hausdorff(b.locations(), a.locations()));
}

inline std::size_t count_error(const ChangePointSet& a, const ChangePointSet& b) {
  return a.size() > b.size() ? a.size() - b.size() : b.size() - a.size();
}

/// Covering of `truth` by `estimated`:
///   (1/n) sum_{A in truth} |A| max_{A' in estimated} J(A, A').
/// Directional; the argument order matters.
inline double covering(const SegmentPartition& estimated, const SegmentPartition& truth) {
  if (estimated.n() != truth.n()) throw error(errc::invalid_change_points, "partitions cover different n");
  const auto& est = estimated.blocks();
  double total = 0.0;
  std::size_t e = 0;
  for (const auto& a : truth.blocks()) {
    // Only overlapping estimated blocks have nonzero Jaccard index.
    while (est[e].last < a.first) ++e;
    double best = 0.0;
    for (std::size_t k = e; k < est.size() && est[k].first <= a.last; ++k) {
      const std::size_t inter = std::min(a.last, est[k].last) - std::max(a.first, est[k].first) + 1;
      const std::size_t uni = a.size() + est[k].size() - inter;
      best = std::max(best, static_cast<double>(inter) / static_cast<double>(uni));
    }
    total += static_cast<double>(a.size()) * best;
  }
  return total / static_cast<double>(truth.n());
}

inline double covering(const ChangePointSet& estimated, const ChangePointSet& truth) {
  return covering(SegmentPartition::from_change_points(estimated), SegmentPartition::from_change_points(truth));
}

struct MetricReport {
  double hausdorff = 0.0;
  double scaled_hausdorff = 0.0;
  std::size_t count_error = 0;
  double covering = 1.0;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

inline MetricReport evaluate(const ChangePointSet& estimated, const ChangePointSet& truth) {
  MetricReport m;
  m.hausdorff = hausdorff(estimated, truth);
  m.scaled_hausdorff = m.hausdorff / static_cast<double>(truth.n());
  m.count_error = count_error(estimated, truth);
  m.covering = covering(estimated, truth);
  return m;
}

}  // namespace arccpd
