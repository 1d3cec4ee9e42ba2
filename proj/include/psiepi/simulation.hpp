#pragma once

// Statistics-level simulation of the photon-counting experiment: systematic
// preparation and measurement errors, Poissonian herald counts, binomial
// clicks, and bootstrap error bars on S.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <vector>

#include "psiepi/inequality.hpp"
#include "psiepi/rng.hpp"

namespace psiepi {

struct NoiseModel {
  /// Expected heralded events per (pair, outcome) setting.
  double counts_per_setting = 2e4;
  double prep_fidelity_mean = 0.998;
  double prep_fidelity_sd = 0.002;
  double meas_fidelity_drop_mean = 0.0007;
  double meas_fidelity_drop_sd = 0.0002;
  double detection_efficiency = 1.0;
  /// Standard deviation of the per-setting multiplicative rate drift.
  double drift_sd = 0.0;

  /// Perfect preparation and measurement; counting noise only.
  static NoiseModel off(double counts = 2e4) {
    NoiseModel m;
    m.counts_per_setting = counts;
    m.prep_fidelity_mean = 1.0;
    m.prep_fidelity_sd = 0.0;
    m.meas_fidelity_drop_mean = 0.0;
    m.meas_fidelity_drop_sd = 0.0;
    return m;
  }

  void validate() const {
    auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!(counts_per_setting > 0.0) || !std::isfinite(counts_per_setting))
      throw Error(ErrorCode::InvalidArgument, "counts_per_setting must be positive");
    if (!unit(prep_fidelity_mean) || !unit(meas_fidelity_drop_mean))
      throw Error(ErrorCode::InvalidArgument, "fidelities must lie in [0, 1]");
    if (!(prep_fidelity_sd >= 0.0) || !(meas_fidelity_drop_sd >= 0.0) || !(drift_sd >= 0.0))
      throw Error(ErrorCode::InvalidArgument, "standard deviations must be >= 0");
    if (!(detection_efficiency > 0.0 && detection_efficiency <= 1.0))
      throw Error(ErrorCode::InvalidArgument, "detection_efficiency must lie in (0, 1]");
  }
};

struct SettingKey {
  PairKey pair;
  int outcome = 0;
  auto operator<=>(const SettingKey &) const = default;
};

struct Counts {
  std::int64_t clicks = 0;
  std::int64_t heralds = 0;
};

struct CountRecord {
  std::map<SettingKey, Counts> entries;
  std::uint64_t seed = 0;
  NoiseModel noise;
};

struct SEstimate {
  double s_hat = 0.0;
  double sigma = 0.0;
  int bootstrap_samples = 0;
  ProbabilityTable table_hat;
};

namespace detail {

/// Normal draw truncated to [lo, hi] by rejection; falls back to clamping.
inline double truncated_normal(Rng &rng, double mean, double sd, double lo, double hi) {
  if (sd == 0.0)
    return std::clamp(mean, lo, hi);
  std::normal_distribution<double> nd(mean, sd);
  for (int k = 0; k < 64; ++k) {
    const double x = nd(rng);
    if (x >= lo && x <= hi)
      return x;
  }
  return std::clamp(mean, lo, hi);
}

/// Poisson sampler: the standard library's exact sampler up to a mean of
/// 1e6, a rounded normal approximation above.
inline std::int64_t poisson(Rng &rng, double mean) {
  if (!(mean > 0.0))
    return 0;
  if (mean <= 1e6) {
    std::poisson_distribution<std::int64_t> pd(mean);
    return pd(rng);
  }
  std::normal_distribution<double> nd(mean, std::sqrt(mean));
  return std::max<std::int64_t>(0, std::llround(nd(rng)));
}

inline std::int64_t binomial(Rng &rng, std::int64_t trials, double p) {
  if (trials <= 0 || p <= 0.0)
    return 0;
  if (p >= 1.0)
    return trials;
  std::binomial_distribution<std::int64_t> bd(trials, p);
  return bd(rng);
}

} // namespace detail

/// Random state at fidelity |<psi|psi'>|^2 = F from `state`, with F drawn
/// from Normal(mean, sd) truncated to [0, 1]. The deviation direction is
/// uniform among unit vectors of the field orthogonal to `state`.
inline PureState perturb_state(const PureState &state, double fidelity_mean, double fidelity_sd,
                               Field field, Rng &rng) {
  const double f = detail::truncated_normal(rng, fidelity_mean, fidelity_sd, 0.0, 1.0);
  const int d = state.dim();
  std::normal_distribution<double> nd(0.0, 1.0);
  CVector dir(d);
  for (int i = 0; i < d; ++i) {
    const double re = nd(rng);
    const double im = field == Field::complex ? nd(rng) : 0.0;
    dir(i) = Complex(re, im);
  }
  if (f == 1.0)
    return state;
  const CVector &psi = state.coeffs();
  dir -= psi.dot(dir) * psi;
  const double nrm = dir.norm();
  if (!(nrm > 1e-12))
    return state;
  dir /= nrm;
  return make_state(CVector(std::sqrt(f) * psi + std::sqrt(1.0 - f) * dir));
}

/// Born table under systematic errors: one perturbed preparation per state,
/// and a depolarizing-style fidelity drop p -> p(1 - f) + f/3 per
/// measurement.
inline ProbabilityTable perturb_table(const Scenario &sc, const NoiseModel &noise,
                                      std::uint64_t seed) {
  noise.validate();
  Rng rng = substream(seed, "noise");
  std::vector<PureState> prepared;
  prepared.reserve(sc.states().size());
  for (const PureState &s : sc.states())
    prepared.push_back(perturb_state(s, noise.prep_fidelity_mean, noise.prep_fidelity_sd,
                                     sc.field(), rng));
  ProbabilityTable t;
  for (const auto &[k, m] : sc.measurements()) {
    const double drop = detail::truncated_normal(rng, noise.meas_fidelity_drop_mean,
                                                 noise.meas_fidelity_drop_sd, 0.0, 1.0);
    Triple p{};
    for (int i = 0; i < 3; ++i) {
      const double born = born_probability(prepared[static_cast<std::size_t>(k.state_for_outcome(i))], m[i]);
      p[static_cast<std::size_t>(i)] = std::clamp(born * (1.0 - drop) + drop / 3.0, 0.0, 1.0);
    }
    t.entries.emplace(k, p);
  }
  return t;
}

/// Heralds ~ Poisson(counts * (1 + drift)), clicks ~ Binomial(heralds,
/// p * detection_efficiency), per setting.
inline CountRecord simulate_counts(const ProbabilityTable &table, const NoiseModel &noise,
                                   std::uint64_t seed) {
  noise.validate();
  Rng rng = substream(seed, "counts");
  std::normal_distribution<double> drift(0.0, 1.0);
  CountRecord rec;
  rec.seed = seed;
  rec.noise = noise;
  for (const auto &[k, p] : table.entries) {
    for (int i = 0; i < 3; ++i) {
      const double prob = p[static_cast<std::size_t>(i)];
      if (!(prob >= 0.0 && prob <= 1.0))
        throw Error(ErrorCode::InvalidTable, "table entry outside [0,1] for " + to_string(k));
      const double factor = std::max(0.0, 1.0 + noise.drift_sd * drift(rng));
      Counts c;
      c.heralds = detail::poisson(rng, noise.counts_per_setting * factor);
      c.clicks = detail::binomial(rng, c.heralds, prob * noise.detection_efficiency);
      rec.entries.emplace(SettingKey{k, i}, c);
    }
  }
  return rec;
}

namespace detail {

inline void check_record(const CountRecord &rec, const Scenario &sc) {
  if (rec.entries.size() != 3 * sc.measurements().size())
    throw Error(ErrorCode::KeyMismatch, "count record does not cover every setting");
  for (const auto &[k, m] : sc.measurements())
    for (int i = 0; i < 3; ++i) {
      auto it = rec.entries.find(SettingKey{k, i});
      if (it == rec.entries.end())
        throw Error(ErrorCode::KeyMismatch,
                    "no counts for pair " + to_string(k) + " outcome " + std::to_string(i));
      if (it->second.heralds <= 0)
        throw Error(ErrorCode::EmptySetting,
                    "no heralded events for pair " + to_string(k) + " outcome " + std::to_string(i));
      if (it->second.clicks < 0 || it->second.clicks > it->second.heralds)
        throw Error(ErrorCode::InvalidArgument,
                    "clicks exceed heralds for pair " + to_string(k));
    }
}

inline ProbabilityTable frequencies(const CountRecord &rec) {
  ProbabilityTable t;
  for (const auto &[key, c] : rec.entries)
    t.entries[key.pair][static_cast<std::size_t>(key.outcome)] =
        static_cast<double>(c.clicks) / static_cast<double>(c.heralds);
  return t;
}

} // namespace detail

/// S from observed click frequencies, with the overlaps taken from the
/// designed states. sigma is the sample standard deviation of S over
/// `bootstrap` parametric resamples (heralds ~ Poisson(h), clicks ~
/// Binomial(heralds, clicks/h)).
inline SEstimate estimate_s(const CountRecord &rec, const Scenario &sc, int bootstrap,
                            std::uint64_t seed) {
  if (bootstrap < 1)
    throw Error(ErrorCode::InvalidArgument, "bootstrap must be >= 1");
  detail::check_record(rec, sc);
  SEstimate est;
  est.table_hat = detail::frequencies(rec);
  est.s_hat = s_value(sc, est.table_hat).s;
  est.bootstrap_samples = bootstrap;

  const double den = sc.overlap_sum();
  double mean = 0.0, m2 = 0.0;
  for (int b = 0; b < bootstrap; ++b) {
    Rng rng = substream(seed, "bootstrap", static_cast<std::uint64_t>(b));
    double num = 1.0;
    for (const auto &[key, c] : rec.entries) {
      const double p = static_cast<double>(c.clicks) / static_cast<double>(c.heralds);
      const std::int64_t h = detail::poisson(rng, static_cast<double>(c.heralds));
      num += h > 0 ? static_cast<double>(detail::binomial(rng, h, p)) / static_cast<double>(h) : p;
    }
    const double s = num / den;
    const double delta = s - mean;
    mean += delta / (b + 1);
    m2 += delta * (s - mean);
  }
  est.sigma = bootstrap > 1 ? std::sqrt(m2 / (bootstrap - 1)) : 0.0;
  return est;
}

/// Estimated minus Born probability per setting, ordered by (j1, j2, i).
inline std::vector<double> deviation_histogram(const CountRecord &rec, const Scenario &sc) {
  detail::check_record(rec, sc);
  const ProbabilityTable born = born_table(sc);
  std::vector<double> out;
  out.reserve(rec.entries.size());
  for (const auto &[key, c] : rec.entries)
    out.push_back(static_cast<double>(c.clicks) / static_cast<double>(c.heralds) -
                  born.at(key.pair)[static_cast<std::size_t>(key.outcome)]);
  return out;
}

} // namespace psiepi
