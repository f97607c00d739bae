#pragma once

// File formats: numeric data files, truth files and the JSON documents
// written by the command-line tool.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "arccpd/bench.hpp"
#include "arccpd/core.hpp"
#include "arccpd/detector.hpp"
#include "arccpd/metrics.hpp"
#include "arccpd/simgen.hpp"

namespace arccpd {

inline constexpr const char* kReportSchema = "arccpd.report/1";
inline constexpr const char* kTruthSchema = "arccpd.truth/1";
inline constexpr const char* kBenchSchema = "arccpd.bench/1";

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error(errc::io_error, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace detail

/// Parses a data file: one value per line, or `timestamp,value` CSV rows. The
/// first line may be a header. Blank lines are skipped.
inline TimeSeries parse_data_text(std::string_view text, std::string name = {}) {
  std::vector<double> values;
  std::size_t line_no = 0;
  std::optional<bool> two_column;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto raw = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty()) continue;

    const auto comma = line.find(',');
    const bool has_comma = comma != std::string_view::npos;
    if (two_column && *two_column != has_comma) {
      throw error(errc::io_error, "line " + std::to_string(line_no) + ": inconsistent column count");
    }
    if (has_comma && line.find(',', comma + 1) != std::string_view::npos) {
      throw error(errc::io_error, "line " + std::to_string(line_no) + ": expected at most two columns");
    }
    const auto field = has_comma ? line.substr(comma + 1) : line;
    const auto v = detail::parse_double(field);
    if (!v) {
      const auto lower = std::string(detail::trim(field));
      if (lower == "nan" || lower == "NaN" || lower == "inf" || lower == "-inf" || lower == "Inf") {
        throw error(errc::non_finite_value, "non-finite value at position " + std::to_string(values.size() + 1),
                    values.size() + 1);
      }
      if (values.empty() && !two_column) {
        two_column = has_comma;  // header line
        continue;
      }
      throw error(errc::io_error, "line " + std::to_string(line_no) + ": cannot parse '" + std::string(field) + "'");
    }
    two_column = has_comma;
    values.push_back(*v);
  }
  return validate_series(std::move(values), std::move(name));
}

inline TimeSeries read_data_file(const std::string& path) { return parse_data_text(detail::read_text(path), path); }

/// Accepts a JSON truth document (key "truth_F"), a bare JSON array, or
/// whitespace/comma separated integers.
inline ChangePointSet parse_truth_text(std::string_view text, std::size_t n) {
  const auto body = detail::trim(text);
  std::vector<std::size_t> locs;
  if (!body.empty() && (body.front() == '{' || body.front() == '[')) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw error(errc::io_error, std::string("truth file: ") + e.what());
    }
    const auto& arr = j.is_object() ? (j.contains("truth_F") ? j.at("truth_F") : j.at("change_points")) : j;
    if (!arr.is_array()) throw error(errc::io_error, "truth file: expected an array of locations");
    for (const auto& v : arr) {
      if (!v.is_number_unsigned()) throw error(errc::invalid_change_points, "truth file: locations must be positive integers");
      locs.push_back(v.get<std::size_t>());
    }
  } else {
    std::string token;
    std::string cleaned(body);
    for (char& c : cleaned) if (c == ',') c = ' ';
    std::istringstream tokens(cleaned);
    while (tokens >> token) {
      std::size_t v = 0;
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw error(errc::io_error, "truth file: cannot parse '" + token + "'");
      }
      locs.push_back(v);
    }
  }
  return ChangePointSet(std::move(locs), n);
}

inline ChangePointSet read_truth_file(const std::string& path, std::size_t n) {
  return parse_truth_text(detail::read_text(path), n);
}

// ---------------------------------------------------------------------------
// JSON helpers. Non-finite doubles are written as the strings "inf", "-inf"
// and "nan".

inline nlohmann::json number_to_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double number_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw error(errc::io_error, "unexpected string '" + s + "' where a number was expected");
  }
  return j.get<double>();
}

// ---------------------------------------------------------------------------

struct ReportConfig {
  std::size_t h = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double lambda = 0.0;
  double sigma = 0.0;
  std::string policy;
  std::size_t maximizer_radius = 0;
  std::uint64_t seed = 0;
  std::size_t runs = 1;
  bool auto_epsilon = false;

  friend bool operator==(const ReportConfig&, const ReportConfig&) = default;
};

struct ReportResult {
  std::size_t k_hat = 0;
  std::vector<std::size_t> change_points;
  std::optional<std::size_t> modal_k;
  std::optional<std::map<std::size_t, std::size_t>> khat_histogram;

  friend bool operator==(const ReportResult&, const ReportResult&) = default;
};

struct ReportDiagnostics {
  std::size_t degenerate_windows = 0;
  double epsilon_effective = 0.0;
  bool condition_a1 = true;

  friend bool operator==(const ReportDiagnostics&, const ReportDiagnostics&) = default;
};

struct OutputReport {
  std::string input;
  std::size_t n = 0;
  ReportConfig config;
  ReportResult result;
  ReportDiagnostics diagnostics;
  std::optional<MetricReport> metrics;

  friend bool operator==(const OutputReport&, const OutputReport&) = default;
};

inline nlohmann::json to_json(const MetricReport& m) {
  return {{"hausdorff", number_to_json(m.hausdorff)},
          {"scaled_hausdorff", number_to_json(m.scaled_hausdorff)},
          {"count_error", m.count_error},
          {"covering", number_to_json(m.covering)}};
}

inline MetricReport metrics_from_json(const nlohmann::json& j) {
  MetricReport m;
  m.hausdorff = number_from_json(j.at("hausdorff"));
  m.scaled_hausdorff = number_from_json(j.at("scaled_hausdorff"));
  m.count_error = j.at("count_error").get<std::size_t>();
  m.covering = number_from_json(j.at("covering"));
  return m;
}

inline nlohmann::json to_json(const OutputReport& r) {
  nlohmann::json j;
  j["schema"] = kReportSchema;
  j["input"] = r.input;
  j["n"] = r.n;
  const auto& c = r.config;
  j["config"] = {{"h", c.h},
                 {"epsilon", number_to_json(c.epsilon)},
                 {"delta", number_to_json(c.delta)},
                 {"lambda", number_to_json(c.lambda)},
                 {"sigma", number_to_json(c.sigma)},
                 {"policy", c.policy},
                 {"maximizer_radius", c.maximizer_radius},
                 {"seed", c.seed},
                 {"runs", c.runs},
                 {"auto_epsilon", c.auto_epsilon}};
  nlohmann::json res = {{"k_hat", r.result.k_hat}, {"change_points", r.result.change_points}};
  if (r.result.modal_k) res["modal_k"] = *r.result.modal_k;
  if (r.result.khat_histogram) {
    nlohmann::json hist = nlohmann::json::object();
    for (const auto& [k, count] : *r.result.khat_histogram) hist[std::to_string(k)] = count;
    res["khat_histogram"] = hist;
  }
  j["result"] = res;
  j["diagnostics"] = {{"degenerate_windows", r.diagnostics.degenerate_windows},
                      {"epsilon_effective", number_to_json(r.diagnostics.epsilon_effective)},
                      {"condition_a1", r.diagnostics.condition_a1}};
  if (r.metrics) j["metrics"] = to_json(*r.metrics);
  return j;
}

inline OutputReport report_from_json(const nlohmann::json& j) {
  if (j.value("schema", std::string{}) != kReportSchema) throw error(errc::io_error, "unsupported report schema");
  OutputReport r;
  r.input = j.at("input").get<std::string>();
  r.n = j.at("n").get<std::size_t>();
  const auto& c = j.at("config");
  r.config.h = c.at("h").get<std::size_t>();
  r.config.epsilon = number_from_json(c.at("epsilon"));
  r.config.delta = number_from_json(c.at("delta"));
  r.config.lambda = number_from_json(c.at("lambda"));
  r.config.sigma = number_from_json(c.at("sigma"));
  r.config.policy = c.at("policy").get<std::string>();
  r.config.maximizer_radius = c.at("maximizer_radius").get<std::size_t>();
  r.config.seed = c.at("seed").get<std::uint64_t>();
  r.config.runs = c.at("runs").get<std::size_t>();
  r.config.auto_epsilon = c.at("auto_epsilon").get<bool>();
  const auto& res = j.at("result");
  r.result.k_hat = res.at("k_hat").get<std::size_t>();
  r.result.change_points = res.at("change_points").get<std::vector<std::size_t>>();
  if (res.contains("modal_k")) r.result.modal_k = res.at("modal_k").get<std::size_t>();
  if (res.contains("khat_histogram")) {
    std::map<std::size_t, std::size_t> hist;
    for (const auto& [k, count] : res.at("khat_histogram").items()) hist[std::stoul(k)] = count.get<std::size_t>();
    r.result.khat_histogram = std::move(hist);
  }
  const auto& d = j.at("diagnostics");
  r.diagnostics.degenerate_windows = d.at("degenerate_windows").get<std::size_t>();
  r.diagnostics.epsilon_effective = number_from_json(d.at("epsilon_effective"));
  r.diagnostics.condition_a1 = d.at("condition_a1").get<bool>();
  if (j.contains("metrics")) r.metrics = metrics_from_json(j.at("metrics"));
  return r;
}

// ---------------------------------------------------------------------------

inline nlohmann::json truth_to_json(const LabeledSeries& data, const std::string& preset, std::uint64_t seed) {
  std::size_t contaminated = 0;
  for (auto m : data.contaminated_mask) contaminated += m;
  return {{"schema", kTruthSchema},
          {"preset", preset},
          {"n", data.series.size()},
          {"seed", seed},
          {"truth_F", data.truth_f.locations()},
          {"truth_EY", data.truth_ey.locations()},
          {"contaminated_count", contaminated},
          {"contaminated_fraction",
           static_cast<double>(contaminated) / static_cast<double>(data.series.size())},
          {"warnings", data.warnings}};
}

inline nlohmann::json to_json(const BenchRow& r) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [k, count] : r.khat_histogram) hist[std::to_string(k)] = count;
  return {{"scenario", r.cell.scenario},
          {"n", r.cell.n},
          {"epsilon", r.cell.epsilon},
          {"delta_blocks", r.cell.blocks},
          {"sigma", r.cell.sigma},
          {"kappa", r.cell.kappa},
          {"h", r.cell.h},
          {"delta", r.cell.delta ? nlohmann::json(*r.cell.delta) : nlohmann::json("1/n")},
          {"method", method_name(r.method)},
          {"reps", r.reps},
          {"failures", r.failures},
          {"status", r.status},
          {"mean_count_error", number_to_json(r.mean_count_error)},
          {"sd_count_error", number_to_json(r.sd_count_error)},
          {"median_scaled_dh", number_to_json(r.median_scaled_dh)},
          {"sd_scaled_dh", number_to_json(r.sd_scaled_dh)},
          {"mean_scaled_dh", number_to_json(r.mean_scaled_dh)},
          {"mean_khat", number_to_json(r.mean_khat)},
          {"sd_khat", number_to_json(r.sd_khat)},
          {"mean_signed_error", number_to_json(r.mean_signed_error)},
          {"hist_k_eq_K", r.hist_k_eq_K},
          {"hist_k_eq_2D1", r.hist_k_eq_2D1},
          {"excluded_inf", r.excluded_inf},
          {"khat_histogram", hist}};
}

inline nlohmann::json bench_to_json(const std::vector<BenchRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) arr.push_back(to_json(r));
  return {{"schema", kBenchSchema}, {"rows", arr}};
}

/// Grid description, e.g.
///   {"scenario": "hiding", "n": 5000, "epsilon": [0.1], "delta_blocks": [2],
///    "kappa": [1.0], "h": [170], "reps": 100, "methods": ["arc"], "seed": 1}
/// Scalars are accepted wherever a list is.
inline ExperimentGrid grid_from_json(const nlohmann::json& j) {
  auto list_d = [&](const char* key, std::vector<double> fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    return v.is_array() ? v.get<std::vector<double>>() : std::vector<double>{v.get<double>()};
  };
  auto list_z = [&](const char* key, std::vector<std::size_t> fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    return v.is_array() ? v.get<std::vector<std::size_t>>() : std::vector<std::size_t>{v.get<std::size_t>()};
  };
  try {
    ExperimentGrid g;
    g.scenario = j.value("scenario", g.scenario);
    g.n = j.value("n", g.n);
    g.epsilon = list_d("epsilon", g.epsilon);
    g.blocks = list_z("delta_blocks", g.blocks);
    g.sigma = list_d("sigma", g.sigma);
    g.kappa = list_d("kappa", g.kappa);
    g.h = list_z("h", g.h);
    if (j.contains("delta")) g.delta = j.at("delta").get<double>();
    g.options.reps = j.value("reps", g.options.reps);
    g.options.seed = j.value("seed", g.options.seed);
    g.options.train_length = j.value("train_length", g.options.train_length);
    g.options.grid_size = j.value("grid_size", g.options.grid_size);
    if (j.contains("methods")) {
      g.options.methods.clear();
      for (const auto& m : j.at("methods")) {
        const auto parsed = parse_method(m.get<std::string>());
        if (!parsed) throw error(errc::invalid_config, "unknown method '" + m.get<std::string>() + "'");
        g.options.methods.push_back(*parsed);
      }
    }
    if (j.contains("lambda")) g.options.lambda = LambdaPolicy::manual(j.at("lambda").get<double>());
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw error(errc::invalid_config, std::string("grid description: ") + e.what());
  }
}

}  // namespace arccpd
