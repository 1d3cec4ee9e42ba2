// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "test_support.hpp"
#include "workbench.hpp"

using namespace psiepi;
using namespace psiepi::workbench;

namespace {

int failures = 0;

void verdict(int id, bool ok, const std::string &what, const std::string &detail, double seconds) {
  if (!ok)
    ++failures;
  std::printf("%s criterion %d: %s [%s] (%.1f s)\n", ok ? "PASS" : "FAIL", id, what.c_str(),
              detail.c_str(), seconds);
  std::fflush(stdout);
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

OptimizerOptions full_options() {
  OptimizerOptions o;
  o.restarts = 64;
  o.max_iters = 2000;
  o.seed = 2014;
  return o;
}

std::string kv(const std::string &k, double v) { return k + "=" + fmt(v); }

} // namespace

int main() {
  const auto tmp = std::filesystem::temp_directory_path() / "psiepi_acceptance";
  std::filesystem::create_directories(tmp);

  // 1. Violation with four states in d = 3, through the optimize command.
  {
    const auto t0 = std::chrono::steady_clock::now();
    OptimizeArgs a;
    a.dim = 3;
    a.n = 3;
    a.seed = 2014;
    a.out = (tmp / "d3n3.json").string();
    std::ostringstream out, err;
    const int code = cmd_optimize(a, out, err);
    double s = NAN;
    if (code == kExitOk) {
      const Scenario sc = load_scenario(a.out);
      s = s_value(sc, born_table(sc)).s;
    }
    const double secs = since(t0);
    verdict(1, code == kExitOk && s < 1.0 && secs < 120.0, "optimize --dim 3 --n 3 gives S < 1",
            kv("S", s) + " exit=" + std::to_string(code), secs);
  }

  // 2, 5a. d = 3, n = 5.
  double eps_d3 = NAN;
  Scenario d3n5 = random_scenario(3, 5, 0, Field::real);
  {
    const auto t0 = std::chrono::steady_clock::now();
    const OptimizationResult res = optimize_scenario(3, 5, full_options());
    const double secs = since(t0);
    d3n5 = res.scenario;
    verdict(2, res.s <= 0.9184 && secs < 600.0, "theory S for (d=3, n=5) <= 0.9184", kv("S", res.s), secs);
    eps_d3 = robustness_or_nan(res.scenario, res.theory_table);
  }

  // 3. d = 4, n = 10.
  {
    const auto t0 = std::chrono::steady_clock::now();
    const OptimizationResult res = optimize_scenario(4, 10, full_options());
    const double secs = since(t0);
    verdict(3, res.s <= 0.690 && secs < 1800.0, "theory S for (d=4, n=10) <= 0.690",
            kv("S", res.s) + " converged=" + std::to_string(res.converged), secs);
  }

  // 4, 5b. d = 4, n = 5.
  double eps_d4 = NAN;
  {
    const auto t0 = std::chrono::steady_clock::now();
    const OptimizationResult res = optimize_scenario(4, 5, full_options());
    double eta = NAN, s_at = NAN;
    try {
      eta = efficiency_threshold(res.scenario, res.theory_table);
      s_at = s_eta(res.scenario, res.theory_table, std::clamp(eta, 0.0, 1.0));
    } catch (const Error &) {
    }
    const double secs = since(t0);
    verdict(4, std::abs(eta - 0.976) <= 0.01 && std::abs(s_at - 1.0) <= 1e-9,
            "efficiency threshold for (d=4, n=5) is 0.976 +- 0.01 and S_eta(eta*) = 1",
            kv("S", res.s) + " " + kv("eta", eta) + " " + kv("S_eta-1", s_at - 1.0), secs);
    eps_d4 = robustness_or_nan(res.scenario, res.theory_table);
  }

  verdict(5, std::abs(eps_d3 - 0.005) <= 0.001 && std::abs(eps_d4 - 0.008) <= 0.002,
          "noise robustness 0.005 +- 0.001 (d=3) and 0.008 +- 0.002 (d=4)",
          kv("eps_d3", eps_d3) + " " + kv("eps_d4", eps_d4), 0.0);

  // 6. Error-bar scale under default noise.
  {
    const auto t0 = std::chrono::steady_clock::now();
    NoiseModel noise;
    noise.counts_per_setting = 2e4;
    const SimulationSummary sum = run_simulation(d3n5, noise, 100, 200, 6);
    const double secs = since(t0);
    const bool sigma_ok = sum.mean_sigma >= 0.002 / 3.0 && sum.mean_sigma <= 0.002 * 3.0;
    const bool dp_ok = sum.mean_abs_deviation >= 1e-4 && sum.mean_abs_deviation < 1e-2;
    verdict(6, sigma_ok && dp_ok, "simulated sigma within x3 of 0.002 and mean |dP| of order 1e-3",
            kv("mean_sigma", sum.mean_sigma) + " " + kv("mean_abs_dP", sum.mean_abs_deviation) + " " +
                kv("empirical_std", sum.empirical_std) + " " + kv("mean_s_hat", sum.mean_s_hat),
            secs);
  }

  // 7. Ontic-model oracle.
  {
    const auto t0 = std::chrono::steady_clock::now();
    OracleSummary sum;
    for (int t = 0; t < 10000; ++t) {
      const int lambda = 1 + t % 64;
      const int n = 3 + (t / 64) % 6;
      check_model(random_model(lambda, n, derive_seed(7, "acceptance", static_cast<std::uint64_t>(t))), sum);
    }
    const double secs = since(t0);
    verdict(7,
            sum.trials == 10000 && sum.min_slack >= -1e-9 && sum.violations == 0 &&
                sum.triple_bound_violations == 0 && sum.pairwise_bound_violations == 0 && secs < 60.0,
            "10^4 random ontological models satisfy the inequality and both lemmas",
            kv("min_slack", sum.min_slack) + " violations=" + std::to_string(sum.violations) +
                " triple=" + std::to_string(sum.triple_bound_violations) +
                " pairwise=" + std::to_string(sum.pairwise_bound_violations),
            secs);
  }

  // 8. Condensed property checks.
  {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(8);
    int bad_overlap = 0, bad_povm = 0, bad_affine = 0;
    for (int t = 0; t < 500; ++t) {
      const int d = 2 + t % 7;
      const Field f = t % 2 ? Field::complex : Field::real;
      const PureState a = test::random_state(d, f, rng), b = test::random_state(d, f, rng);
      const double w = quantum_overlap(a, b);
      const CMatrix u = test::random_unitary(d, f, rng);
      const double wu = quantum_overlap(make_state(CVector(u * a.coeffs())), make_state(CVector(u * b.coeffs())));
      if (!(w >= 0.0 && w <= 1.0) || w != quantum_overlap(b, a) || std::abs(w - wu) > 1e-9)
        ++bad_overlap;
      const Measurement m = test::random_povm(d, rng);
      double total = 0.0;
      for (int i = 0; i < 3; ++i)
        total += born_probability(a, m[i]);
      if (std::abs(total - 1.0) > 1e-7)
        ++bad_povm;
    }
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
      const Scenario sc = test::random_povm_scenario(3, 3 + t % 4, Field::real, rng);
      const ProbabilityTable tab = born_table(sc);
      const double e1 = ud(rng), e2 = ud(rng), l = ud(rng);
      if (std::abs(s_eta(sc, tab, l * e1 + (1 - l) * e2) - (l * s_eta(sc, tab, e1) + (1 - l) * s_eta(sc, tab, e2))) >
          1e-12)
        ++bad_affine;
    }
    OptimizerOptions o;
    o.restarts = 3;
    o.max_iters = 400;
    o.seed = 88;
    const OptimizationResult r1 = optimize_scenario(4, 5, o);
    o.threads = 1;
    const OptimizationResult r2 = optimize_scenario(4, 5, o);
    bool monotone = true;
    for (std::size_t i = 1; i < r1.s_trace.size(); ++i)
      monotone = monotone && r1.s_trace[i] <= r1.s_trace[i - 1];
    const bool deterministic = r1.s == r2.s && dump_canonical(to_file(r1.scenario)) == dump_canonical(to_file(r2.scenario));
    const double secs = since(t0);
    verdict(8, bad_overlap == 0 && bad_povm == 0 && bad_affine == 0 && monotone && deterministic,
            "overlap, POVM, affinity, monotonicity and determinism properties",
            "overlap_fail=" + std::to_string(bad_overlap) + " povm_fail=" + std::to_string(bad_povm) +
                " affine_fail=" + std::to_string(bad_affine) + " monotone=" + std::to_string(monotone) +
                " deterministic=" + std::to_string(deterministic),
            secs);
  }

  std::filesystem::remove_all(tmp);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
