// arccpd: command-line front end.
//
// Exit codes: 0 success, 2 invalid input or configuration, 3 infeasible
// window (no admissible RUME interval for the requested h, epsilon, delta).

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "arccpd/arccpd.hpp"

namespace {

using namespace arccpd;

constexpr int kExitInvalid = 2;
constexpr int kExitInfeasible = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Execution execution_from(std::optional<std::size_t> threads) {
  if (threads) return {std::max<std::size_t>(*threads, 1)};
  if (const char* env = std::getenv("ARC_CPD_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return {static_cast<std::size_t>(v)};
    } catch (const std::exception&) {
    }
    throw UsageError("ARC_CPD_THREADS must be a positive integer");
  }
  return {std::max<std::size_t>(std::thread::hardware_concurrency(), 1)};
}

std::optional<double> parse_sigma(const std::string& s) {
  if (s.empty() || s == "auto") return std::nullopt;
  const auto v = detail::parse_double(s);
  if (!v || !(*v > 0.0)) throw UsageError("--sigma must be a positive number or 'auto'");
  return v;
}

std::pair<std::size_t, std::size_t> parse_range(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw UsageError("--train-range must look like A:B");
  try {
    std::size_t used_a = 0, used_b = 0;
    const auto a_str = s.substr(0, colon), b_str = s.substr(colon + 1);
    const auto a = std::stoul(a_str, &used_a);
    const auto b = std::stoul(b_str, &used_b);
    if (used_a != a_str.size() || used_b != b_str.size() || a_str[0] == '-' || b_str[0] == '-') throw 0;
    return {a, b};
  } catch (...) {
    throw UsageError("--train-range must look like A:B with non-negative integers");
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error(errc::io_error, "cannot write '" + path + "'");
  out << text;
  if (!out) throw error(errc::io_error, "write to '" + path + "' failed");
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string curve_csv(const ScanCurve& curve) {
  std::ostringstream os;
  os << "j,D\n";
  for (std::size_t i = 0; i < curve.size(); ++i) os << curve.first_index + i << ',' << format_g17(curve.values[i]) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------

struct DetectArgs {
  std::string input;
  std::size_t h = 0;
  std::optional<double> epsilon;
  bool auto_epsilon = false;
  std::string train_range;
  std::optional<double> delta;
  std::optional<double> lambda;
  std::string lambda_policy;
  std::optional<double> c_lambda;
  std::string sigma = "auto";
  std::optional<std::size_t> radius;
  std::uint64_t seed = 0;
  std::size_t runs = 1;
  std::string truth;
  std::string dump_curve;
  std::string out;
  std::string profile = "default";
  std::size_t grid_size = 201;
  std::optional<std::size_t> threads;
};

LambdaPolicy policy_from(const DetectArgs& a) {
  if (a.lambda) {
    if (!a.lambda_policy.empty()) throw UsageError("--lambda and --lambda-policy are mutually exclusive");
    return LambdaPolicy::manual(*a.lambda);
  }
  std::string name = a.lambda_policy;
  if (name.empty()) name = a.profile == "realdata" ? "realdata" : "theoretical";
  if (a.c_lambda && name != "theoretical") throw UsageError("--c-lambda only applies to the theoretical policy");
  if (name == "theoretical") return LambdaPolicy::theoretical(a.c_lambda.value_or(kDefaultLambdaConstant));
  if (name == "sim") return LambdaPolicy::simulation();
  if (name == "realdata") return LambdaPolicy::real_data();
  return LambdaPolicy::real_data_heavy_tail();
}

int run_detect(const DetectArgs& a) {
  if (a.h == 0) throw UsageError("--h must be a positive integer");
  if (a.epsilon && a.auto_epsilon) throw UsageError("--epsilon and --auto-epsilon are mutually exclusive");
  if (!a.epsilon && !a.auto_epsilon) throw UsageError("one of --epsilon or --auto-epsilon is required");
  if (!a.train_range.empty() && !a.auto_epsilon) throw UsageError("--train-range requires --auto-epsilon");
  if (a.runs < 1) throw UsageError("--runs must be at least 1");

  const auto series = read_data_file(a.input);
  const std::size_t n = series.size();
  const auto exec = execution_from(a.threads);

  DetectionConfig cfg;
  cfg.h = a.h;
  cfg.epsilon = a.epsilon.value_or(0.0);
  cfg.delta = a.delta;
  cfg.lambda = policy_from(a);
  cfg.sigma = parse_sigma(a.sigma);
  cfg.maximizer_radius = a.radius;
  if (!cfg.maximizer_radius && a.profile == "realdata") cfg.maximizer_radius = 2 * a.h;
  cfg.seed = a.seed;

  std::optional<ChangePointSet> truth;
  if (!a.truth.empty()) truth = read_truth_file(a.truth, n);

  if (a.auto_epsilon) {
    validate_config(cfg, n);
    TournamentConfig tc;
    tc.grid = TournamentConfig::equally_spaced(a.grid_size);
    if (a.train_range.empty()) {
      tc.train_end = std::min<std::size_t>(300, n);
    } else {
      std::tie(tc.train_begin, tc.train_end) = parse_range(a.train_range);
    }
    tc.sigma = cfg.sigma ? *cfg.sigma : resolve_sigma(cfg, series);
    cfg.epsilon = select_epsilon(series, tc, resolve_delta(cfg, n), substream(a.seed, 0), exec).epsilon_selected;
  }

  OutputReport rep;
  rep.input = a.input;
  rep.n = n;

  RunReport first;
  if (a.runs == 1) {
    first = detect(series, cfg, exec);
    rep.result.k_hat = first.estimated.size();
    rep.result.change_points = first.estimated.locations();
  } else {
    validate_config(cfg, n);
    // Run 1 is kept whole for the report diagnostics and the curve dump.
    const auto agg = aggregate_runs(n, a.seed, a.runs, exec, [&](std::size_t r, std::uint64_t run_seed) {
      DetectionConfig run_cfg = cfg;
      run_cfg.seed = run_seed;
      auto report = detect(series, run_cfg);
      if (r == 1) first = report;
      return report;
    });
    rep.result.k_hat = agg.modal_k;
    rep.result.change_points = agg.consensus_locations.locations();
    rep.result.modal_k = agg.modal_k;
    rep.result.khat_histogram = agg.khat_histogram;
  }

  rep.config.h = cfg.h;
  rep.config.epsilon = cfg.epsilon;
  rep.config.delta = first.delta_used;
  rep.config.lambda = first.lambda_used;
  rep.config.sigma = first.sigma_used;
  rep.config.policy = lambda_kind_name(cfg.lambda.kind);
  rep.config.maximizer_radius = resolve_radius(cfg);
  rep.config.seed = a.seed;
  rep.config.runs = a.runs;
  rep.config.auto_epsilon = a.auto_epsilon;
  rep.diagnostics.degenerate_windows = first.degenerate_windows;
  rep.diagnostics.epsilon_effective = first.epsilon_effective;
  rep.diagnostics.condition_a1 = first.condition_a1;
  if (truth) rep.metrics = evaluate(ChangePointSet(rep.result.change_points, n), *truth);

  if (!a.dump_curve.empty()) write_text(a.dump_curve, curve_csv(first.scan_curve));
  write_text(a.out, to_json(rep).dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string preset;
  std::optional<std::size_t> n;
  double epsilon = 0.1;
  std::size_t blocks = 2;
  double kappa = 1.0;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  std::string input;
  std::string out;
};

int run_simulate(const SimulateArgs& a) {
  AttackSpec spec;
  const std::size_t n = a.n.value_or(a.preset == "sine" || a.preset == "cauchy" ? 3000 : 5000);
  if (a.preset == "corrupt-beijing") {
    if (a.input.empty()) throw UsageError("--preset corrupt-beijing needs --input with the base series");
    spec = corrupt_beijing_preset(read_data_file(a.input).values(), a.seed);
  } else {
    Cell cell{a.preset, n, a.epsilon, a.blocks, a.sigma, a.kappa, 1, std::nullopt};
    spec = cell_spec(cell);
    spec.seed = a.seed;
  }
  const auto data = generate(spec);

  std::ostringstream csv;
  csv << "value\n";
  for (double v : data.series.values()) csv << format_g17(v) << '\n';
  write_text(a.out + ".csv", csv.str());
  write_text(a.out + ".truth.json", truth_to_json(data, a.preset, a.seed).dump(2) + "\n");
  for (const auto& w : data.warnings) std::cerr << "warning: " << w << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string grid;
  std::string paper_table;
  std::optional<std::size_t> reps;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::string> methods;
  std::optional<std::size_t> threads;
};

int run_bench(const BenchArgs& a) {
  if (a.grid.empty() == a.paper_table.empty()) throw UsageError("exactly one of --grid or --paper-table is required");
  const auto exec = execution_from(a.threads);
  const bool as_json = a.out.size() >= 5 && a.out.compare(a.out.size() - 5, 5, ".json") == 0;

  if (a.paper_table == "phase") {
    PhaseConfig pc;
    pc.reps = a.reps.value_or(50);
    pc.seed = a.seed;
    const auto points = phase_sweep(pc, exec);
    std::ostringstream os;
    write_phase_csv(os, points);
    write_text(a.out, os.str());
    return 0;
  }

  std::vector<Cell> cells;
  BenchOptions opt;
  if (!a.grid.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(detail::read_text(a.grid));
    } catch (const nlohmann::json::exception& e) {
      throw error(errc::invalid_config, std::string("grid description: ") + e.what());
    }
    const auto grid = grid_from_json(j);
    cells = grid.cells();
    opt = grid.options;
  } else if (a.paper_table == "d1") {
    cells = table_d1_cells();
    opt.methods = {Method::arc, Method::aarc, Method::baseline};
  } else {
    cells = table_d2_sensitivity_cells();
  }
  if (a.reps) opt.reps = *a.reps;
  if (!a.paper_table.empty()) opt.seed = a.seed;
  if (!a.methods.empty()) {
    opt.methods.clear();
    for (const auto& m : a.methods) opt.methods.push_back(*parse_method(m));
  }

  const auto rows = run_cells(cells, opt, exec);
  if (as_json) {
    write_text(a.out, bench_to_json(rows).dump(2) + "\n");
  } else {
    std::ostringstream os;
    write_bench_csv(os, rows);
    write_text(a.out, os.str());
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct TuneArgs {
  std::string input;
  std::string train_range;
  std::string sigma;
  std::size_t grid_size = 201;
  std::optional<double> delta;
  std::uint64_t seed = 0;
  std::optional<std::size_t> threads;
};

int run_tune(const TuneArgs& a) {
  const auto series = read_data_file(a.input);
  TournamentConfig tc;
  std::tie(tc.train_begin, tc.train_end) = parse_range(a.train_range);
  if (tc.train_end > series.size() || tc.train_begin >= tc.train_end || tc.train_end - tc.train_begin < 2) {
    throw UsageError("--train-range must select at least 2 points inside the series");
  }
  if (a.grid_size < 1) throw UsageError("--grid-size must be at least 1");
  tc.grid = TournamentConfig::equally_spaced(a.grid_size);
  const auto sigma = parse_sigma(a.sigma);
  tc.sigma = sigma ? *sigma : mad_sigma(series);
  const double delta = a.delta.value_or(1.0 / static_cast<double>(series.size()));
  const auto res = select_epsilon(series, tc, delta, substream(a.seed, 0), execution_from(a.threads));

  nlohmann::json j = {{"epsilon_selected", res.epsilon_selected},
                      {"sigma", tc.sigma},
                      {"delta", delta},
                      {"train_range", {tc.train_begin, tc.train_end}},
                      {"grid", res.grid},
                      {"estimates", res.estimates},
                      {"tournament_scores", res.scores}};
  write_text("-", j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust change point detection under adversarial contamination"};
  // "--h" is the window half-width, so help is long-form only.
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);

  DetectArgs d;
  auto* detect_cmd = app.add_subcommand("detect", "Detect change points in a series");
  detect_cmd->add_option("--input", d.input, "Data file")->required();
  detect_cmd->add_option("--h", d.h, "Window half-width")->required();
  detect_cmd->add_option("--epsilon", d.epsilon, "Contamination bound in [0, 1/2)");
  detect_cmd->add_flag("--auto-epsilon", d.auto_epsilon, "Select epsilon by tournament");
  detect_cmd->add_option("--train-range", d.train_range, "Tournament training range A:B (0-based, half open)");
  detect_cmd->add_option("--grid-size", d.grid_size, "Tournament grid size")->check(CLI::PositiveNumber);
  detect_cmd->add_option("--delta", d.delta, "Failure probability (default 1/n)");
  detect_cmd->add_option("--lambda", d.lambda, "Fixed threshold");
  detect_cmd->add_option("--lambda-policy", d.lambda_policy, "Threshold policy")
      ->check(CLI::IsMember({"theoretical", "sim", "realdata", "realdata-heavy"}));
  detect_cmd->add_option("--c-lambda", d.c_lambda, "Constant of the theoretical policy (default 1.2)");
  detect_cmd->add_option("--sigma", d.sigma, "Noise level or 'auto' (MAD)");
  detect_cmd->add_option("--maximizer-radius", d.radius, "Local maximizer radius (default 4h)");
  detect_cmd->add_option("--seed", d.seed, "Master seed");
  detect_cmd->add_option("--runs", d.runs, "Repeated runs aggregated by modal K");
  detect_cmd->add_option("--truth", d.truth, "Ground-truth file for metrics");
  detect_cmd->add_option("--dump-curve", d.dump_curve, "Write the scan curve as CSV");
  detect_cmd->add_option("--out", d.out, "Report path (default stdout)");
  detect_cmd->add_option("--profile", d.profile, "Defaults profile")->check(CLI::IsMember({"default", "realdata"}));
  detect_cmd->add_option("--threads", d.threads, "Worker cap (default ARC_CPD_THREADS or all cores)");

  SimulateArgs s;
  auto* simulate_cmd = app.add_subcommand("simulate", "Generate a contaminated series with ground truth");
  simulate_cmd->add_option("--preset", s.preset, "Scenario")
      ->required()
      ->check(CLI::IsMember({"spurious", "hiding", "clean", "sine", "cauchy", "corrupt-beijing"}));
  simulate_cmd->add_option("--n", s.n, "Series length");
  simulate_cmd->add_option("--epsilon", s.epsilon, "Contamination rate");
  simulate_cmd->add_option("--delta-blocks", s.blocks, "Number of blocks");
  simulate_cmd->add_option("--kappa", s.kappa, "Jump size");
  simulate_cmd->add_option("--sigma", s.sigma, "Noise level");
  simulate_cmd->add_option("--seed", s.seed, "Seed");
  simulate_cmd->add_option("--input", s.input, "Base series (corrupt-beijing)");
  simulate_cmd->add_option("--out", s.out, "Output prefix")->required();

  BenchArgs b;
  auto* bench_cmd = app.add_subcommand("bench", "Run a Monte-Carlo experiment grid");
  bench_cmd->add_option("--grid", b.grid, "JSON grid description");
  bench_cmd->add_option("--paper-table", b.paper_table, "Preset table")
      ->check(CLI::IsMember({"d1", "d2-sens", "phase"}));
  bench_cmd->add_option("--reps", b.reps, "Repetitions per cell")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", b.seed, "Master seed");
  bench_cmd->add_option("--methods", b.methods, "Methods to run")
      ->delimiter(',')
      ->check(CLI::IsMember({"arc", "aarc", "baseline"}));
  bench_cmd->add_option("--out", b.out, "Output path (.csv or .json; default stdout CSV)");
  bench_cmd->add_option("--threads", b.threads, "Worker cap (default ARC_CPD_THREADS or all cores)");

  TuneArgs t;
  auto* tune_cmd = app.add_subcommand("tune", "Select epsilon by tournament");
  tune_cmd->add_option("--input", t.input, "Data file")->required();
  tune_cmd->add_option("--train-range", t.train_range, "Training range A:B (0-based, half open)")->required();
  tune_cmd->add_option("--sigma", t.sigma, "Noise level or 'auto' (MAD)")->required();
  tune_cmd->add_option("--grid-size", t.grid_size, "Number of grid points on [0, 0.25]");
  tune_cmd->add_option("--delta", t.delta, "Failure probability (default 1/n)");
  tune_cmd->add_option("--seed", t.seed, "Seed");
  tune_cmd->add_option("--threads", t.threads, "Worker cap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  try {
    if (*detect_cmd) return run_detect(d);
    if (*simulate_cmd) return run_simulate(s);
    if (*bench_cmd) return run_bench(b);
    return run_tune(t);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const arccpd::error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == errc::infeasible_window || e.code() == errc::no_feasible_candidate ? kExitInfeasible
                                                                                            : kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
}
