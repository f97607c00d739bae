#pragma once

// Generators for contaminated piecewise-constant mean processes.
//
// Every index i draws independently: with probability eps_i the value comes
// from the contamination distribution H_i, otherwise from N(f_i, sigma^2).
// The block scenarios split {1..n} into `blocks` blocks of length M = n/blocks
// and each block into two halves; the half boundaries floor(k n / (2 blocks)),
// k = 1..2 blocks - 1, are the change points of the scenario.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "arccpd/core.hpp"
#include "arccpd/rng.hpp"

namespace arccpd {

/// Atoms at -3 on first halves and +3 on second halves; f is constant zero.
struct SpuriousSpec {
  double epsilon = 0.1;
  std::size_t blocks = 1;
  double sigma = 1.0;
};

/// f alternates 0, kappa over halves; atoms at kappa/(2 eps) and
/// kappa (1 - 1/(2 eps)) make E[Y] constant at kappa/2.
struct HidingSpec {
  double epsilon = 0.1;
  std::size_t blocks = 2;
  double kappa = 1.0;
};

/// Contamination draws from N(amplitude sin(frequency t), sigma^2).
struct SineSpec {
  double epsilon = 0.2;
  double amplitude = 2.0;
  /// Angular frequency per index; nullopt means 10 pi / n.
  std::optional<double> frequency;
  double kappa = 1.2;
  double sigma = 1.0;
  std::vector<std::size_t> truth;
};

/// Contamination draws from Cauchy(0, scale).
struct CauchySpec {
  double epsilon = 0.2;
  double scale = 10.0;
  double kappa = 1.2;
  double sigma = 1.0;
  std::vector<std::size_t> truth;
};

/// Uncontaminated Gaussian segments; means.size() == truth.size() + 1.
struct CleanStepsSpec {
  std::vector<double> means;
  double sigma = 1.0;
  std::vector<std::size_t> truth;
};

/// Sets `count` distinct uniformly chosen indices in [begin, end) (0-based) to
/// `value`.
struct ReplaceRule {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t count = 0;
  double value = 0.0;
};

struct CorruptRealSpec {
  std::vector<double> base;
  std::vector<ReplaceRule> rules;
  std::vector<std::size_t> truth;
};

using Scenario = std::variant<SpuriousSpec, HidingSpec, SineSpec, CauchySpec, CleanStepsSpec, CorruptRealSpec>;

struct AttackSpec {
  Scenario scenario;
  std::size_t n = 5000;
  std::uint64_t seed = 0;
};

struct LabeledSeries {
  TimeSeries series;
  ChangePointSet truth_f;   // changes of the clean means f_i
  ChangePointSet truth_ey;  // changes of E[Y_i]
  std::vector<unsigned char> contaminated_mask;
  std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------

struct HidingAtoms {
  double first_half = 0.0;
  double second_half = 0.0;
};

inline HidingAtoms hiding_atoms(double epsilon, double kappa) {
  return {kappa / (2.0 * epsilon), kappa * (1.0 - 1.0 / (2.0 * epsilon))};
}

/// Half-block boundaries floor(k n / (2 blocks)), k = 1..2 blocks - 1.
inline std::vector<std::size_t> half_block_boundaries(std::size_t n, std::size_t blocks) {
  std::vector<std::size_t> b;
  for (std::size_t k = 1; k < 2 * blocks; ++k) b.push_back(k * n / (2 * blocks));
  return b;
}

/// 0-based segment label for every index given sorted boundaries.
inline std::vector<std::size_t> segment_labels(std::size_t n, const std::vector<std::size_t>& boundaries) {
  std::vector<std::size_t> label(n);
  std::size_t seg = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (seg < boundaries.size() && i > boundaries[seg]) ++seg;
    label[i - 1] = seg;
  }
  return label;
}

namespace detail {

inline void require(bool ok, const std::string& why) {
  if (!ok) throw error(errc::spec_invalid, why);
}

inline void check_epsilon(double eps) { require(eps >= 0.0 && eps < 0.5, "epsilon must lie in [0, 1/2)"); }

inline void check_blocks(std::size_t n, std::size_t blocks, std::vector<std::string>& warnings) {
  require(blocks >= 1, "block count must be positive");
  require(2 * blocks <= n, "need at least two points per block");
  if (n % blocks != 0) {
    warnings.push_back("block count " + std::to_string(blocks) + " does not divide n=" + std::to_string(n) +
                       "; half-block boundaries are rounded down");
  }
}

inline ChangePointSet checked_truth(const std::vector<std::size_t>& truth, std::size_t n) {
  try {
    return ChangePointSet(truth, n);
  } catch (const error& e) {
    throw error(errc::spec_invalid, std::string("truth: ") + e.what());
  }
}

inline std::vector<double> alternating_means(std::size_t segments, double kappa) {
  std::vector<double> m(segments);
  for (std::size_t s = 0; s < segments; ++s) m[s] = (s % 2 == 0) ? 0.0 : kappa;
  return m;
}

}  // namespace detail

inline LabeledSeries generate(const AttackSpec& spec) {
  const std::size_t n = spec.n;
  LabeledSeries out;
  std::vector<double> y(n);
  std::vector<unsigned char> mask(n, 0);
  auto rng = substream(spec.seed, 0);

  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, SpuriousSpec>) {
          detail::check_epsilon(s.epsilon);
          detail::require(s.sigma > 0.0, "sigma must be positive");
          detail::check_blocks(n, s.blocks, out.warnings);
          const auto bounds = half_block_boundaries(n, s.blocks);
          const auto label = segment_labels(n, bounds);
          for (std::size_t i = 0; i < n; ++i) {
            const double atom = label[i] % 2 == 0 ? -3.0 : 3.0;
            mask[i] = rng.bernoulli(s.epsilon);
            y[i] = mask[i] ? atom : rng.normal(0.0, s.sigma);
          }
          out.truth_f = ChangePointSet({}, n);
          out.truth_ey = ChangePointSet(s.epsilon > 0.0 ? bounds : std::vector<std::size_t>{}, n);
        } else if constexpr (std::is_same_v<S, HidingSpec>) {
          detail::check_epsilon(s.epsilon);
          detail::require(s.epsilon > 0.0, "hiding attack needs epsilon > 0 (atom kappa/(2 epsilon) undefined)");
          detail::require(std::isfinite(s.kappa), "kappa must be finite");
          detail::check_blocks(n, s.blocks, out.warnings);
          const auto bounds = half_block_boundaries(n, s.blocks);
          const auto label = segment_labels(n, bounds);
          const auto atoms = hiding_atoms(s.epsilon, s.kappa);
          for (std::size_t i = 0; i < n; ++i) {
            const bool first = label[i] % 2 == 0;
            mask[i] = rng.bernoulli(s.epsilon);
            y[i] = mask[i] ? (first ? atoms.first_half : atoms.second_half) : rng.normal(first ? 0.0 : s.kappa, 1.0);
          }
          out.truth_f = ChangePointSet(s.kappa != 0.0 ? bounds : std::vector<std::size_t>{}, n);
          out.truth_ey = ChangePointSet({}, n);
        } else if constexpr (std::is_same_v<S, SineSpec>) {
          detail::check_epsilon(s.epsilon);
          detail::require(s.sigma > 0.0, "sigma must be positive");
          out.truth_f = detail::checked_truth(s.truth, n);
          out.truth_ey = out.truth_f;
          const double freq = s.frequency.value_or(10.0 * std::numbers::pi / static_cast<double>(n));
          const auto label = segment_labels(n, s.truth);
          const auto means = detail::alternating_means(s.truth.size() + 1, s.kappa);
          for (std::size_t i = 0; i < n; ++i) {
            mask[i] = rng.bernoulli(s.epsilon);
            const double t = static_cast<double>(i + 1);
            y[i] = mask[i] ? rng.normal(s.amplitude * std::sin(freq * t), s.sigma) : rng.normal(means[label[i]], s.sigma);
          }
        } else if constexpr (std::is_same_v<S, CauchySpec>) {
          detail::check_epsilon(s.epsilon);
          detail::require(s.sigma > 0.0 && s.scale > 0.0, "sigma and scale must be positive");
          out.truth_f = detail::checked_truth(s.truth, n);
          out.truth_ey = out.truth_f;
          const auto label = segment_labels(n, s.truth);
          const auto means = detail::alternating_means(s.truth.size() + 1, s.kappa);
          for (std::size_t i = 0; i < n; ++i) {
            mask[i] = rng.bernoulli(s.epsilon);
            y[i] = mask[i] ? rng.cauchy(0.0, s.scale) : rng.normal(means[label[i]], s.sigma);
          }
        } else if constexpr (std::is_same_v<S, CleanStepsSpec>) {
          detail::require(s.sigma > 0.0, "sigma must be positive");
          detail::require(s.means.size() == s.truth.size() + 1, "need one mean per segment");
          out.truth_f = detail::checked_truth(s.truth, n);
          out.truth_ey = out.truth_f;
          const auto label = segment_labels(n, s.truth);
          for (std::size_t i = 0; i < n; ++i) y[i] = rng.normal(s.means[label[i]], s.sigma);
        } else if constexpr (std::is_same_v<S, CorruptRealSpec>) {
          detail::require(s.base.size() == n, "base series length must equal n");
          y = s.base;
          out.truth_f = detail::checked_truth(s.truth, n);
          out.truth_ey = out.truth_f;
          for (const auto& rule : s.rules) {
            detail::require(rule.begin < rule.end && rule.end <= n, "replacement range outside the series");
            detail::require(rule.count <= rule.end - rule.begin, "more replacements than indices in range");
            // Partial Fisher-Yates: first `count` entries are a uniform sample.
            std::vector<std::size_t> idx(rule.end - rule.begin);
            for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = rule.begin + k;
            for (std::size_t k = 0; k < rule.count; ++k) {
              const auto pick = k + static_cast<std::size_t>(rng.below(idx.size() - k));
              std::swap(idx[k], idx[pick]);
              y[idx[k]] = rule.value;
              mask[idx[k]] = 1;
            }
          }
        }
      },
      spec.scenario);

  out.series = validate_series(std::move(y));
  out.contaminated_mask = std::move(mask);
  return out;
}

/// E[Y_i] from the mixture weights, without sampling. nullopt for Cauchy
/// contamination, which has no mean.
inline std::optional<std::vector<double>> expected_profile(const AttackSpec& spec) {
  const std::size_t n = spec.n;
  std::vector<double> mean(n, 0.0);
  bool defined = true;
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, SpuriousSpec>) {
          const auto label = segment_labels(n, half_block_boundaries(n, s.blocks));
          for (std::size_t i = 0; i < n; ++i) mean[i] = s.epsilon * (label[i] % 2 == 0 ? -3.0 : 3.0);
        } else if constexpr (std::is_same_v<S, HidingSpec>) {
          const auto label = segment_labels(n, half_block_boundaries(n, s.blocks));
          const auto atoms = hiding_atoms(s.epsilon, s.kappa);
          for (std::size_t i = 0; i < n; ++i) {
            mean[i] = label[i] % 2 == 0 ? (1.0 - s.epsilon) * 0.0 + s.epsilon * atoms.first_half
                                        : (1.0 - s.epsilon) * s.kappa + s.epsilon * atoms.second_half;
          }
        } else if constexpr (std::is_same_v<S, SineSpec>) {
          const double freq = s.frequency.value_or(10.0 * std::numbers::pi / static_cast<double>(n));
          const auto label = segment_labels(n, s.truth);
          const auto means = detail::alternating_means(s.truth.size() + 1, s.kappa);
          for (std::size_t i = 0; i < n; ++i) {
            mean[i] = (1.0 - s.epsilon) * means[label[i]] +
                      s.epsilon * s.amplitude * std::sin(freq * static_cast<double>(i + 1));
          }
        } else if constexpr (std::is_same_v<S, CauchySpec>) {
          defined = false;
        } else if constexpr (std::is_same_v<S, CleanStepsSpec>) {
          const auto label = segment_labels(n, s.truth);
          for (std::size_t i = 0; i < n; ++i) mean[i] = s.means[label[i]];
        } else if constexpr (std::is_same_v<S, CorruptRealSpec>) {
          mean = generate(spec).series.values();
        }
      },
      spec.scenario);
  if (!defined) return std::nullopt;
  return mean;
}

/// Pointwise average of `reps` independent regenerations of `spec`
/// (replicate r uses seed derive_seed(spec.seed, r)).
inline std::vector<double> empirical_mean_profile(const AttackSpec& spec, std::size_t reps) {
  if (reps < 1) throw error(errc::spec_invalid, "reps must be at least 1");
  std::vector<double> acc(spec.n, 0.0);
  for (std::size_t r = 1; r <= reps; ++r) {
    AttackSpec rep = spec;
    rep.seed = derive_seed(spec.seed, r);
    const auto ls = generate(rep);
    for (std::size_t i = 0; i < spec.n; ++i) acc[i] += ls.series[i];
  }
  for (auto& v : acc) v /= static_cast<double>(reps);
  return acc;
}

// ---------------------------------------------------------------------------
// Named presets.

inline AttackSpec spurious_preset(double epsilon, std::size_t blocks, double sigma, std::size_t n = 5000,
                                  std::uint64_t seed = 0) {
  return {SpuriousSpec{epsilon, blocks, sigma}, n, seed};
}

inline AttackSpec hiding_preset(double epsilon, std::size_t blocks, double kappa, std::size_t n = 5000,
                                std::uint64_t seed = 0) {
  return {HidingSpec{epsilon, blocks, kappa}, n, seed};
}

/// Three equally spaced change points on n = 3000, kappa 1.2, eps 0.2.
inline AttackSpec sine_preset(std::uint64_t seed = 0) {
  SineSpec s;
  s.truth = {750, 1500, 2250};
  return {s, 3000, seed};
}

inline AttackSpec cauchy_preset(std::uint64_t seed = 0) {
  CauchySpec s;
  s.truth = {750, 1500, 2250};
  return {s, 3000, seed};
}

/// Uncontaminated version of the block layout: means alternate 0, kappa.
inline AttackSpec clean_preset(std::size_t blocks, double kappa, double sigma, std::size_t n,
                               std::uint64_t seed = 0) {
  CleanStepsSpec s;
  s.truth = half_block_boundaries(n, blocks);
  s.means = detail::alternating_means(s.truth.size() + 1, kappa);
  s.sigma = sigma;
  return {s, n, seed};
}

/// 100 uniform indices among the first 1000 set to 3 sigma_hat and 50 among
/// the rest set to 0.5 sigma_hat, sigma_hat being the MAD scale of `base`.
inline AttackSpec corrupt_beijing_preset(std::vector<double> base, std::uint64_t seed = 0) {
  const std::size_t n = base.size();
  if (n < 1051) throw error(errc::spec_invalid, "corrupt-beijing needs at least 1051 points");
  const double sigma_hat = mad_sigma(base);
  CorruptRealSpec s;
  s.rules = {{0, 1000, 100, 3.0 * sigma_hat}, {1000, n, 50, 0.5 * sigma_hat}};
  s.base = std::move(base);
  return {s, n, seed};
}

}  // namespace arccpd
