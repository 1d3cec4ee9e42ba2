#pragma once

// Subcommand implementations for the psiepi command-line tool. Each command
// takes its parsed options and two streams and returns the process exit
// code: 0 success, 1 runtime or invariant failure, 2 usage error.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "psiepi/psiepi.hpp"

namespace psiepi::workbench {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Shortest round-trip decimal; "nan" for undefined values.
inline std::string fmt(double x) {
  if (std::isnan(x))
    return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

/// Explicit seed, else WORKBENCH_SEED, else 0.
inline std::uint64_t resolve_seed(std::optional<std::uint64_t> flag) {
  if (flag)
    return *flag;
  if (const char *env = std::getenv("WORKBENCH_SEED")) {
    std::uint64_t v = 0;
    const char *end = env + std::char_traits<char>::length(env);
    auto res = std::from_chars(env, end, v);
    if (res.ec == std::errc() && res.ptr == end)
      return v;
  }
  return 0;
}

struct ResultRow {
  int d = 0;
  int n = 0;
  double s = 0.0;
  double sigma = 0.0;
  double kappa0_bound = 0.0;
  double eta_threshold = std::numeric_limits<double>::quiet_NaN();
  double epsilon0 = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
};

inline constexpr const char *kResultHeader = "d,n,s,sigma,kappa0_bound,eta_threshold,epsilon0,seed,wall_ms";

inline std::string csv_line(const ResultRow &r) {
  std::ostringstream os;
  os << r.d << ',' << r.n << ',' << fmt(r.s) << ',' << fmt(r.sigma) << ',' << fmt(r.kappa0_bound)
     << ',' << fmt(r.eta_threshold) << ',' << fmt(r.epsilon0) << ',' << r.seed << ','
     << fmt(r.wall_ms) << '\n';
  return os.str();
}

/// eta* when the scenario violates the inequality at unit efficiency and
/// the threshold lies in [0, 1]; NaN otherwise.
inline double threshold_or_nan(const Scenario &sc, const ProbabilityTable &table) {
  try {
    const double eta = efficiency_threshold(sc, table);
    if (s_value(sc, table).s < 1.0 && eta <= 1.0)
      return eta;
  } catch (const Error &) {
  }
  return std::numeric_limits<double>::quiet_NaN();
}

inline double robustness_or_nan(const Scenario &sc, const ProbabilityTable &table) {
  try {
    return noise_robustness(sc, table);
  } catch (const Error &) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

class Stopwatch {
public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Scenario from a file. Throws Error(MalformedFile) for schema problems and
/// Error(InvalidScenario, ...) for invariant violations.
inline Scenario load_scenario(const std::string &path) {
  return to_scenario(load_scenario_file(path));
}

/// Maps a library error to the exit-code contract.
inline int report(const Error &e, std::ostream &err) {
  err << "error: " << e.what() << '\n';
  return e.code() == ErrorCode::MalformedFile ? kExitUsage : kExitFailure;
}

// ---------------------------------------------------------------- optimize

struct OptimizeArgs {
  int dim = 3;
  int n = 3;
  int restarts = 64;
  int max_iters = 2000;
  std::optional<std::uint64_t> seed;
  std::string field = "real";
  bool general_povm = false;
  int threads = 0;
  std::string out;
};

inline int cmd_optimize(const OptimizeArgs &a, std::ostream &out, std::ostream &err) {
  if (a.n < 3) {
    err << "error: n must be >= 3\n";
    return kExitUsage;
  }
  if (a.dim < 3 || a.dim > kMaxDim) {
    err << "error: dim must lie in [3, 8]\n";
    return kExitUsage;
  }
  if (a.restarts < 1 || a.max_iters < 1) {
    err << "error: restarts and max-iters must be >= 1\n";
    return kExitUsage;
  }
  OptimizerOptions opt;
  try {
    opt.field = parse_field(a.field);
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  opt.restarts = a.restarts;
  opt.max_iters = a.max_iters;
  opt.seed = resolve_seed(a.seed);
  opt.rank1_measurements = !a.general_povm;
  opt.threads = a.threads;
  try {
    const OptimizationResult res = optimize_scenario(a.dim, a.n, opt);
    Json meta;
    meta["provenance"] = "psiepi optimize";
    meta["seed"] = opt.seed;
    meta["restarts"] = opt.restarts;
    meta["max_iters"] = opt.max_iters;
    meta["rank1_measurements"] = opt.rank1_measurements;
    meta["best_restart_index"] = res.best_restart_index;
    meta["converged"] = res.converged;
    meta["s"] = res.s;
    write_file_atomic(a.out, dump_canonical(to_file(res.scenario, meta)));
    const ScoreReport rep = s_value(res.scenario, res.theory_table);
    out << "S=" << fmt(res.s) << " kappa0_bound=" << fmt(rep.kappa0_bound)
        << " epsilon0=" << fmt(robustness_or_nan(res.scenario, res.theory_table))
        << " eta_threshold=" << fmt(threshold_or_nan(res.scenario, res.theory_table))
        << " converged=" << (res.converged ? 1 : 0) << " best_restart=" << res.best_restart_index
        << '\n';
    return kExitOk;
  } catch (const Error &e) {
    return report(e, err);
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string scenario;
  std::optional<double> eta;
};

inline int cmd_evaluate(const EvaluateArgs &a, std::ostream &out, std::ostream &err) {
  if (a.eta && !(*a.eta >= 0.0 && *a.eta <= 1.0)) {
    err << "error: eta must lie in [0, 1]\n";
    return kExitUsage;
  }
  try {
    const Scenario sc = load_scenario(a.scenario);
    const ProbabilityTable table = born_table(sc);
    const ScoreReport rep = s_value(sc, table);
    out << "S=" << fmt(rep.s) << " kappa0_bound=" << fmt(rep.kappa0_bound)
        << " numerator=" << fmt(rep.numerator) << " denominator=" << fmt(rep.denominator) << '\n';
    for (const auto &[k, v] : rep.per_pair_sums)
      out << "pair " << k.j1 << ' ' << k.j2 << " sum=" << fmt(v) << '\n';
    if (a.eta)
      out << "S_eta=" << fmt(s_eta(sc, table, *a.eta)) << " eta=" << fmt(*a.eta) << '\n';
    return kExitOk;
  } catch (const Error &e) {
    return report(e, err);
  }
}

// ---------------------------------------------------------------- threshold

struct ThresholdArgs {
  std::string scenario;
};

inline int cmd_threshold(const ThresholdArgs &a, std::ostream &out, std::ostream &err) {
  try {
    const Scenario sc = load_scenario(a.scenario);
    const double eta = threshold_or_nan(sc, born_table(sc));
    if (std::isnan(eta))
      out << "no threshold\n";
    else
      out << "eta_threshold=" << fmt(eta) << '\n';
    return kExitOk;
  } catch (const Error &e) {
    return report(e, err);
  }
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string scenario;
  double counts = 2e4;
  int trials = 100;
  int bootstrap = 200;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> noise{"defaults"};
  std::string csv;
  bool timing = false;
};

/// "defaults" or "off" optionally followed by KEY=VAL overrides.
inline NoiseModel parse_noise(const std::vector<std::string> &spec, double counts) {
  NoiseModel m;
  for (const std::string &tok : spec) {
    if (tok == "defaults") {
      m = NoiseModel{};
      continue;
    }
    if (tok == "off") {
      m = NoiseModel::off();
      continue;
    }
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidArgument, "noise token '" + tok + "' is not defaults, off or KEY=VAL");
    const std::string key = tok.substr(0, eq);
    double val = 0.0;
    const std::string rhs = tok.substr(eq + 1);
    auto res = std::from_chars(rhs.data(), rhs.data() + rhs.size(), val);
    if (res.ec != std::errc() || res.ptr != rhs.data() + rhs.size())
      throw Error(ErrorCode::InvalidArgument, "noise value '" + rhs + "' is not a number");
    if (key == "prep_fidelity_mean") m.prep_fidelity_mean = val;
    else if (key == "prep_fidelity_sd") m.prep_fidelity_sd = val;
    else if (key == "meas_fidelity_drop_mean") m.meas_fidelity_drop_mean = val;
    else if (key == "meas_fidelity_drop_sd") m.meas_fidelity_drop_sd = val;
    else if (key == "detection_efficiency") m.detection_efficiency = val;
    else if (key == "drift_sd") m.drift_sd = val;
    else
      throw Error(ErrorCode::InvalidArgument, "unknown noise key '" + key + "'");
  }
  m.counts_per_setting = counts;
  m.validate();
  return m;
}

struct SimulationSummary {
  double mean_s_hat = 0.0;
  double mean_sigma = 0.0;
  double empirical_std = 0.0;
  double mean_abs_deviation = 0.0;
  std::vector<ResultRow> rows;
};

/// Runs `trials` independent noisy experiments on one scenario. Trial t
/// draws its systematic errors, counts and bootstrap resamples from
/// substreams of (seed, t).
inline SimulationSummary run_simulation(const Scenario &sc, const NoiseModel &noise, int trials,
                                        int bootstrap, std::uint64_t seed, bool timing = false) {
  SimulationSummary sum;
  double dev_total = 0.0;
  std::size_t dev_count = 0;
  for (int t = 0; t < trials; ++t) {
    Stopwatch sw;
    const auto tu = static_cast<std::uint64_t>(t);
    const std::uint64_t trial_seed = derive_seed(seed, "trial", tu);
    const ProbabilityTable table = perturb_table(sc, noise, derive_seed(trial_seed, "noise"));
    const CountRecord rec = simulate_counts(table, noise, derive_seed(trial_seed, "counts"));
    const SEstimate est = estimate_s(rec, sc, bootstrap, derive_seed(trial_seed, "bootstrap"));
    for (double dp : deviation_histogram(rec, sc)) {
      dev_total += std::abs(dp);
      ++dev_count;
    }
    ResultRow row;
    row.d = sc.dim();
    row.n = sc.n();
    row.s = est.s_hat;
    row.sigma = est.sigma;
    row.kappa0_bound = std::min(est.s_hat, 1.0);
    row.eta_threshold = threshold_or_nan(sc, est.table_hat);
    row.epsilon0 = robustness_or_nan(sc, est.table_hat);
    row.seed = trial_seed;
    row.wall_ms = timing ? sw.ms() : 0.0;
    sum.rows.push_back(row);
  }
  const double count = static_cast<double>(trials);
  for (const auto &r : sum.rows) {
    sum.mean_s_hat += r.s / count;
    sum.mean_sigma += r.sigma / count;
  }
  double var = 0.0;
  for (const auto &r : sum.rows)
    var += (r.s - sum.mean_s_hat) * (r.s - sum.mean_s_hat);
  sum.empirical_std = trials > 1 ? std::sqrt(var / (count - 1.0)) : 0.0;
  sum.mean_abs_deviation = dev_count ? dev_total / static_cast<double>(dev_count) : 0.0;
  return sum;
}

inline int cmd_simulate(const SimulateArgs &a, std::ostream &out, std::ostream &err) {
  if (a.trials < 1 || a.bootstrap < 1 || !(a.counts > 0.0)) {
    err << "error: trials and bootstrap must be >= 1 and counts positive\n";
    return kExitUsage;
  }
  NoiseModel noise;
  try {
    noise = parse_noise(a.noise, a.counts);
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    Stopwatch total;
    const Scenario sc = load_scenario(a.scenario);
    const std::uint64_t seed = resolve_seed(a.seed);
    const SimulationSummary sum = run_simulation(sc, noise, a.trials, a.bootstrap, seed, a.timing);
    const ProbabilityTable theory = born_table(sc);

    std::string csv = std::string(kResultHeader) + "\n";
    for (const auto &r : sum.rows)
      csv += csv_line(r);
    // Summary row: mean estimate and mean bootstrap sigma, with the theory
    // threshold and margin of the designed scenario.
    ResultRow summary;
    summary.d = sc.dim();
    summary.n = sc.n();
    summary.s = sum.mean_s_hat;
    summary.sigma = sum.mean_sigma;
    summary.kappa0_bound = std::min(sum.mean_s_hat, 1.0);
    summary.eta_threshold = threshold_or_nan(sc, theory);
    summary.epsilon0 = robustness_or_nan(sc, theory);
    summary.seed = seed;
    summary.wall_ms = a.timing ? total.ms() : 0.0;
    csv += csv_line(summary);
    write_file_atomic(a.csv, csv);

    out << "theory_S=" << fmt(s_value(sc, theory).s) << " mean_s_hat=" << fmt(sum.mean_s_hat)
        << " mean_sigma=" << fmt(sum.mean_sigma) << " empirical_std=" << fmt(sum.empirical_std)
        << " mean_abs_dP=" << fmt(sum.mean_abs_deviation) << " trials=" << a.trials << '\n';
    return kExitOk;
  } catch (const Error &e) {
    return report(e, err);
  }
}

// ---------------------------------------------------------------- oracle

struct OracleArgs {
  int lambda = 64;
  int n = 3;
  int trials = 1000;
  std::optional<std::uint64_t> seed;
};

struct OracleSummary {
  int trials = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  int violations = 0;
  int triple_bound_violations = 0;
  int pairwise_bound_violations = 0;
};

/// Checks the model-level inequality and both intermediate bounds on one
/// model, accumulating into `sum`.
inline void check_model(const FiniteOnticModel &m, OracleSummary &sum) {
  const double slack = model_inequality_slack(m);
  sum.min_slack = std::min(sum.min_slack, slack);
  if (slack < -1e-9)
    ++sum.violations;
  const ProbabilityTable t = model_probabilities(m);
  const auto mu0 = m.distribution(0);
  double triple_total = 0.0;
  for (const auto &[k, p] : t.entries) {
    const double tri = triple_overlap(mu0, m.distribution(k.j1), m.distribution(k.j2));
    triple_total += tri;
    if (tri > p[0] + p[1] + p[2] + 1e-12)
      ++sum.triple_bound_violations;
  }
  double pairwise = 0.0;
  for (int j = 1; j <= m.n; ++j)
    pairwise += classical_overlap(mu0, m.distribution(j));
  if (triple_total < pairwise - 1.0 - 1e-9)
    ++sum.pairwise_bound_violations;
  ++sum.trials;
}

inline OracleSummary run_oracle(int lambda, int n, int trials, std::uint64_t seed) {
  OracleSummary sum;
  for (int t = 0; t < trials; ++t)
    check_model(random_model(lambda, n, derive_seed(seed, "oracle", static_cast<std::uint64_t>(t))), sum);
  return sum;
}

inline int cmd_oracle(const OracleArgs &a, std::ostream &out, std::ostream &err) {
  if (a.n < 3) {
    err << "error: n must be >= 3\n";
    return kExitUsage;
  }
  if (a.lambda < 1 || a.lambda > kMaxOnticStates || a.trials < 1) {
    err << "error: lambda must lie in [1, 4096] and trials be >= 1\n";
    return kExitUsage;
  }
  const OracleSummary sum = run_oracle(a.lambda, a.n, a.trials, resolve_seed(a.seed));
  out << "trials=" << sum.trials << " min_slack=" << fmt(sum.min_slack)
      << " violations=" << sum.violations
      << " triple_bound_violations=" << sum.triple_bound_violations
      << " pairwise_bound_violations=" << sum.pairwise_bound_violations << '\n';
  return sum.violations == 0 ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
  int dim = 4;
  int n_min = 3;
  int n_max = 10;
  int restarts = 64;
  int max_iters = 2000;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string csv;
  bool timing = false;
};

inline int cmd_sweep(const SweepArgs &a, std::ostream &out, std::ostream &err) {
  if (a.n_min > a.n_max) {
    err << "error: empty range (n-min > n-max)\n";
    return kExitUsage;
  }
  if (a.n_min < 3) {
    err << "error: n must be >= 3\n";
    return kExitUsage;
  }
  if (a.dim < 3 || a.dim > kMaxDim || a.restarts < 1 || a.max_iters < 1) {
    err << "error: dim must lie in [3, 8]; restarts and max-iters must be >= 1\n";
    return kExitUsage;
  }
  try {
    const std::uint64_t seed = resolve_seed(a.seed);
    std::string csv = std::string(kResultHeader) + "\n";
    for (int n = a.n_min; n <= a.n_max; ++n) {
      Stopwatch sw;
      OptimizerOptions opt;
      opt.restarts = a.restarts;
      opt.max_iters = a.max_iters;
      opt.seed = seed;
      opt.threads = a.threads;
      const OptimizationResult res = optimize_scenario(a.dim, n, opt);
      ResultRow row;
      row.d = a.dim;
      row.n = n;
      row.s = res.s;
      row.sigma = 0.0;
      row.kappa0_bound = std::min(res.s, 1.0);
      row.eta_threshold = threshold_or_nan(res.scenario, res.theory_table);
      row.epsilon0 = robustness_or_nan(res.scenario, res.theory_table);
      row.seed = seed;
      row.wall_ms = a.timing ? sw.ms() : 0.0;
      csv += csv_line(row);
      out << "n=" << n << " S=" << fmt(res.s) << " converged=" << (res.converged ? 1 : 0) << '\n';
    }
    write_file_atomic(a.csv, csv);
    return kExitOk;
  } catch (const Error &e) {
    return report(e, err);
  }
}

} // namespace psiepi::workbench
