#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "psiepi/optimizer.hpp"
#include "psiepi/simulation.hpp"
#include "test_support.hpp"

using namespace psiepi;

namespace {

const OptimizationResult &optimized_3_5() {
  static const OptimizationResult res = [] {
    OptimizerOptions o;
    o.restarts = 4;
    o.max_iters = 2000;
    o.seed = 5;
    o.threads = 1;
    return optimize_scenario(3, 5, o);
  }();
  return res;
}

/// First-order standard deviation of S from binomial counting statistics.
double delta_method_sigma(const Scenario &sc, const CountRecord &rec) {
  double var = 0.0;
  for (const auto &[k, c] : rec.entries) {
    const double p = static_cast<double>(c.clicks) / static_cast<double>(c.heralds);
    var += p * (1.0 - p) / static_cast<double>(c.heralds);
  }
  return std::sqrt(var) / sc.overlap_sum();
}

} // namespace

TEST(PerturbTable, ZeroNoiseGivesBornTable) {
  const Scenario &sc = optimized_3_5().scenario;
  const ProbabilityTable t = perturb_table(sc, NoiseModel::off(), 1);
  const ProbabilityTable born = born_table(sc);
  for (const auto &[k, p] : born.entries)
    for (int i = 0; i < 3; ++i)
      EXPECT_EQ(t.at(k)[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(i)]);
}

TEST(PerturbTable, DeterministicInSeed) {
  const Scenario &sc = optimized_3_5().scenario;
  const ProbabilityTable a = perturb_table(sc, NoiseModel{}, 9);
  const ProbabilityTable b = perturb_table(sc, NoiseModel{}, 9);
  const ProbabilityTable c = perturb_table(sc, NoiseModel{}, 10);
  EXPECT_EQ(a.entries, b.entries);
  EXPECT_NE(a.entries, c.entries);
}

TEST(PerturbState, FidelityDistribution) {
  Rng rng(3);
  const PureState psi = make_state({0.2, -0.5, 0.7, 0.1});
  double sum = 0.0;
  const int draws = 10000;
  for (int k = 0; k < draws; ++k) {
    const PureState p = perturb_state(psi, 0.998, 0.002, Field::real, rng);
    const double f = squared_overlap(psi, p);
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0 + 1e-12);
    sum += f;
  }
  // Truncation at 1 shifts the mean below 0.998 by about 0.0008.
  EXPECT_NEAR(sum / draws, 0.998, 0.001);
}

TEST(PerturbState, ExactFidelityWithoutSpread) {
  Rng rng(4);
  const PureState psi = test::random_state(5, Field::complex, rng);
  for (double f : {0.0, 0.3, 0.99}) {
    const PureState p = perturb_state(psi, f, 0.0, Field::complex, rng);
    EXPECT_NEAR(squared_overlap(psi, p), f, 1e-12);
  }
}

TEST(SimulateCounts, ExtremeProbabilities) {
  const Scenario &sc = optimized_3_5().scenario;
  NoiseModel noise = NoiseModel::off(2e4);
  for (double p : {0.0, 1.0}) {
    const CountRecord rec = simulate_counts(test::constant_table(sc, p), noise, 7);
    for (const auto &[k, c] : rec.entries) {
      EXPECT_GT(c.heralds, 0);
      EXPECT_EQ(c.clicks, p == 0.0 ? 0 : c.heralds);
    }
  }
}

TEST(SimulateCounts, HalfProbabilityFrequencies) {
  const Scenario &sc = optimized_3_5().scenario;
  const NoiseModel noise = NoiseModel::off(2e4);
  int within = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const CountRecord rec = simulate_counts(test::constant_table(sc, 0.5), noise, seed);
    for (const auto &[k, c] : rec.entries) {
      ++total;
      if (std::abs(static_cast<double>(c.clicks) / static_cast<double>(c.heralds) - 0.5) <= 0.011)
        ++within;
    }
  }
  EXPECT_GE(within, static_cast<int>(0.99 * total));
}

TEST(SimulateCounts, HeraldMeanAndVariance) {
  Rng rng(8);
  const double mean = 2e4;
  double s = 0.0, s2 = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const double h = static_cast<double>(detail::poisson(rng, mean));
    s += h;
    s2 += h * h;
  }
  const double m = s / n, var = s2 / n - m * m;
  EXPECT_NEAR(m, mean, 5.0);
  EXPECT_NEAR(var / mean, 1.0, 0.05);
  // Normal branch above 1e6 keeps the same moments.
  double t = 0.0, t2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double h = static_cast<double>(detail::poisson(rng, 4e6));
    t += h;
    t2 += h * h;
  }
  EXPECT_NEAR(t / n, 4e6, 50.0);
  EXPECT_NEAR((t2 / n - (t / n) * (t / n)) / 4e6, 1.0, 0.05);
}

TEST(SimulateCounts, DetectionEfficiencyScalesClicks) {
  const Scenario &sc = optimized_3_5().scenario;
  NoiseModel noise = NoiseModel::off(1e6);
  noise.detection_efficiency = 0.5;
  const CountRecord rec = simulate_counts(test::constant_table(sc, 0.4), noise, 2);
  for (const auto &[k, c] : rec.entries)
    EXPECT_NEAR(static_cast<double>(c.clicks) / static_cast<double>(c.heralds), 0.2, 0.003);
}

TEST(EstimateS, ConvergesAtHighCounts) {
  const OptimizationResult &res = optimized_3_5();
  const CountRecord rec = simulate_counts(res.theory_table, NoiseModel::off(1e9), 11);
  const SEstimate est = estimate_s(rec, res.scenario, 50, 12);
  EXPECT_NEAR(est.s_hat, res.s, 1e-4);
  EXPECT_LT(est.sigma, 1e-4);
}

TEST(EstimateS, SigmaScalesWithInverseRootCounts) {
  const OptimizationResult &res = optimized_3_5();
  const SEstimate a =
      estimate_s(simulate_counts(res.theory_table, NoiseModel::off(1e4), 1), res.scenario, 2000, 2);
  const SEstimate b =
      estimate_s(simulate_counts(res.theory_table, NoiseModel::off(4e4), 1), res.scenario, 2000, 2);
  EXPECT_NEAR(a.sigma / b.sigma, 2.0, 0.2);
}

TEST(EstimateS, BootstrapMatchesDeltaMethod) {
  const OptimizationResult &res = optimized_3_5();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const CountRecord rec = simulate_counts(res.theory_table, NoiseModel::off(2e4), seed);
    const SEstimate est = estimate_s(rec, res.scenario, 2000, seed + 100);
    EXPECT_NEAR(est.sigma / delta_method_sigma(res.scenario, rec), 1.0, 0.1);
  }
}

TEST(EstimateS, SelfConsistentAcrossExperiments) {
  // With noise off, the spread of s_hat over experiments matches the
  // bootstrap sigma of a single experiment.
  const OptimizationResult &res = optimized_3_5();
  std::vector<double> s_hat;
  double sigma_sum = 0.0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const CountRecord rec = simulate_counts(res.theory_table, NoiseModel::off(2e4), 1000 + t);
    const SEstimate est = estimate_s(rec, res.scenario, 200, 5000 + t);
    s_hat.push_back(est.s_hat);
    sigma_sum += est.sigma;
  }
  const double mean = std::accumulate(s_hat.begin(), s_hat.end(), 0.0) / trials;
  double var = 0.0;
  for (double x : s_hat)
    var += (x - mean) * (x - mean);
  const double empirical = std::sqrt(var / (trials - 1));
  EXPECT_NEAR(empirical / (sigma_sum / trials), 1.0, 0.3);
  EXPECT_NEAR(mean, res.s, 4.0 * empirical / std::sqrt(trials));
}

TEST(EstimateS, Errors) {
  const OptimizationResult &res = optimized_3_5();
  CountRecord rec = simulate_counts(res.theory_table, NoiseModel::off(100), 3);
  rec.entries.begin()->second = Counts{0, 0};
  EXPECT_EQ(test::error_code([&] { estimate_s(rec, res.scenario, 10, 1); }), ErrorCode::EmptySetting);
  rec.entries.erase(rec.entries.begin());
  EXPECT_EQ(test::error_code([&] { estimate_s(rec, res.scenario, 10, 1); }), ErrorCode::KeyMismatch);
  EXPECT_EQ(test::error_code([&] {
              estimate_s(simulate_counts(res.theory_table, NoiseModel::off(), 1), res.scenario, 0, 1);
            }),
            ErrorCode::InvalidArgument);
}

TEST(DeviationHistogram, LengthAndMagnitude) {
  const OptimizationResult &res = optimized_3_5();
  const CountRecord rec = simulate_counts(res.theory_table, NoiseModel::off(2e4), 4);
  const auto dev = deviation_histogram(rec, res.scenario);
  ASSERT_EQ(dev.size(), 3u * 10u);
  double mean_abs = 0.0;
  for (double x : dev)
    mean_abs += std::abs(x);
  mean_abs /= static_cast<double>(dev.size());
  EXPECT_LT(mean_abs, 3e-3);
}

TEST(NoiseModel, Validation) {
  NoiseModel m;
  m.counts_per_setting = 0.0;
  EXPECT_EQ(test::error_code([&] { m.validate(); }), ErrorCode::InvalidArgument);
  m = NoiseModel{};
  m.detection_efficiency = 0.0;
  EXPECT_EQ(test::error_code([&] { m.validate(); }), ErrorCode::InvalidArgument);
  m = NoiseModel{};
  m.prep_fidelity_mean = 1.5;
  EXPECT_EQ(test::error_code([&] { m.validate(); }), ErrorCode::InvalidArgument);
}
