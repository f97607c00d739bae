#pragma once

// Shared domain types for the arccpd library: validated series, change point
// sets, segment partitions, the error type, and the MAD scale estimate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace arccpd {

enum class errc {
  empty_series,
  non_finite_value,
  degenerate_scale,
  invalid_change_points,
  invalid_config,
  series_too_short,
  infeasible_window,
  lambda_resolution_failure,
  no_feasible_candidate,
  spec_invalid,
  io_error,
};

inline const char* errc_name(errc code) {
  switch (code) {
    case errc::empty_series: return "EmptySeries";
    case errc::non_finite_value: return "NonFiniteValue";
    case errc::degenerate_scale: return "DegenerateScale";
    case errc::invalid_change_points: return "InvalidChangePoints";
    case errc::invalid_config: return "InvalidConfig";
    case errc::series_too_short: return "SeriesTooShort";
    case errc::infeasible_window: return "InfeasibleWindow";
    case errc::lambda_resolution_failure: return "LambdaResolutionFailure";
    case errc::no_feasible_candidate: return "NoFeasibleCandidate";
    case errc::spec_invalid: return "SpecInvalid";
    case errc::io_error: return "IoError";
  }
  return "Unknown";
}

/// Error raised by every arccpd operation. `index()` carries the offending
/// 1-based position for NonFiniteValue and the scan index j for
/// InfeasibleWindow raised mid-scan.
class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what, std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), index_(index) {}

  errc code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  errc code_;
  std::optional<std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Change point sets and partitions. Positions are 1-based; location t means
// the mean changes between Y_t and Y_{t+1}.

class ChangePointSet {
 public:
  ChangePointSet() = default;

  /// Throws InvalidChangePoints unless `locations` is strictly increasing and
  /// inside [1, n-1].
  ChangePointSet(std::vector<std::size_t> locations, std::size_t n) : locations_(std::move(locations)), n_(n) {
    for (std::size_t k = 0; k < locations_.size(); ++k) {
      const auto t = locations_[k];
      if (t < 1 || t + 1 > n_) {
        throw error(errc::invalid_change_points, "location " + std::to_string(t) + " outside [1, n-1]");
      }
      if (k > 0 && locations_[k - 1] >= t) {
        throw error(errc::invalid_change_points, "locations must be strictly increasing");
      }
    }
  }

  const std::vector<std::size_t>& locations() const noexcept { return locations_; }
  std::size_t n() const noexcept { return n_; }
  std::size_t size() const noexcept { return locations_.size(); }
  bool empty() const noexcept { return locations_.empty(); }

  friend bool operator==(const ChangePointSet&, const ChangePointSet&) = default;

 private:
  std::vector<std::size_t> locations_;
  std::size_t n_ = 0;
};

/// Closed integer interval [first, last], 1-based.
struct Block {
  std::size_t first = 1;
  std::size_t last = 1;

  std::size_t size() const noexcept { return last - first + 1; }
  friend bool operator==(const Block&, const Block&) = default;
};

class SegmentPartition {
 public:
  SegmentPartition() = default;

  /// Throws InvalidChangePoints unless the blocks tile {1..n} in order.
  SegmentPartition(std::vector<Block> blocks, std::size_t n) : blocks_(std::move(blocks)), n_(n) {
    std::size_t next = 1;
    for (const auto& b : blocks_) {
      if (b.first != next || b.last < b.first) {
        throw error(errc::invalid_change_points, "blocks must be contiguous and non-empty");
      }
      next = b.last + 1;
    }
    if (n_ == 0 || next != n_ + 1) {
      throw error(errc::invalid_change_points, "blocks must cover {1..n}");
    }
  }

  static SegmentPartition from_change_points(const ChangePointSet& cps) {
    std::vector<Block> blocks;
    blocks.reserve(cps.size() + 1);
    std::size_t start = 1;
    for (auto t : cps.locations()) {
      blocks.push_back({start, t});
      start = t + 1;
    }
    blocks.push_back({start, cps.n()});
    return SegmentPartition(std::move(blocks), cps.n());
  }

  ChangePointSet to_change_points() const {
    std::vector<std::size_t> locs;
    locs.reserve(blocks_.size());
    for (std::size_t k = 0; k + 1 < blocks_.size(); ++k) locs.push_back(blocks_[k].last);
    return ChangePointSet(std::move(locs), n_);
  }

  const std::vector<Block>& blocks() const noexcept { return blocks_; }
  std::size_t n() const noexcept { return n_; }

 private:
  std::vector<Block> blocks_;
  std::size_t n_ = 0;
};

// ---------------------------------------------------------------------------

class TimeSeries {
 public:
  TimeSeries() = default;

  const std::vector<double>& values() const noexcept { return values_; }
  std::span<const double> view() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  const std::optional<ChangePointSet>& annotation() const noexcept { return annotation_; }
  const std::string& name() const noexcept { return name_; }

  TimeSeries with_annotation(ChangePointSet truth) const {
    if (truth.n() != size()) throw error(errc::invalid_change_points, "annotation length mismatch");
    TimeSeries copy = *this;
    copy.annotation_ = std::move(truth);
    return copy;
  }

 private:
  friend TimeSeries validate_series(std::vector<double>, std::string);
  std::vector<double> values_;
  std::optional<ChangePointSet> annotation_;
  std::string name_;
};

/// The only way to build a TimeSeries: rejects empty input and any NaN/inf
/// (the reported index is 1-based).
inline TimeSeries validate_series(std::vector<double> values, std::string name = {}) {
  if (values.empty()) throw error(errc::empty_series, "series has no values");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw error(errc::non_finite_value, "value at position " + std::to_string(i + 1) + " is not finite", i + 1);
    }
  }
  TimeSeries ts;
  ts.values_ = std::move(values);
  ts.name_ = std::move(name);
  return ts;
}

// ---------------------------------------------------------------------------
// Order statistics helpers.

/// Median with the even-length convention of averaging the two middle values.
inline double median_of(std::vector<double> v) {
  if (v.empty()) throw error(errc::empty_series, "median of empty sequence");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double med = v[mid];
  if (v.size() % 2 == 0) {
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (lower + med);
  }
  return med;
}

inline constexpr double kMadConsistency = 1.4826;

/// Gaussian-consistent median absolute deviation. Throws DegenerateScale when
/// the raw MAD is zero.
inline double mad_sigma(std::span<const double> values) {
  if (values.size() < 2) throw error(errc::degenerate_scale, "need at least two values");
  const double med = median_of(std::vector<double>(values.begin(), values.end()));
  std::vector<double> dev(values.size());
  std::transform(values.begin(), values.end(), dev.begin(), [med](double y) { return std::fabs(y - med); });
  const double mad = median_of(std::move(dev));
  if (!(mad > 0.0)) throw error(errc::degenerate_scale, "median absolute deviation is zero");
  return kMadConsistency * mad;
}

inline double mad_sigma(const TimeSeries& series) { return mad_sigma(series.view()); }

}  // namespace arccpd
