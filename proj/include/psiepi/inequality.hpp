#pragma once

// The overlap inequality statistic S, its finite-efficiency variant, the
// detection-efficiency threshold and the noise margin.

#include <array>
#include <compare>
#include <map>
#include <string>
#include <vector>

#include "psiepi/quantum.hpp"

namespace psiepi {

/// Measurement label (j1, j2) with 1 <= j1 < j2 <= n.
struct PairKey {
  int j1 = 0;
  int j2 = 0;
  auto operator<=>(const PairKey &) const = default;

  /// State index measured for outcome i: j0 = 0, then j1, j2.
  int state_for_outcome(int i) const { return i == 0 ? 0 : (i == 1 ? j1 : j2); }
};

inline std::string to_string(PairKey k) {
  return "(" + std::to_string(k.j1) + "," + std::to_string(k.j2) + ")";
}

/// All pairs in the order they are summed: (1,2), (1,3), ..., (n-1,n).
inline std::vector<PairKey> pair_keys(int n) {
  std::vector<PairKey> keys;
  keys.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (int a = 1; a <= n; ++a)
    for (int b = a + 1; b <= n; ++b)
      keys.push_back({a, b});
  return keys;
}

inline int pair_count(int n) { return n * (n - 1) / 2; }

using Triple = std::array<double, 3>;

/// P_{M_{j1 j2}}(m_i | psi_{j_i}) for every pair and outcome.
struct ProbabilityTable {
  std::map<PairKey, Triple> entries;

  const Triple &at(PairKey k) const {
    auto it = entries.find(k);
    if (it == entries.end())
      throw Error(ErrorCode::KeyMismatch, "missing pair " + to_string(k));
    return it->second;
  }

  /// Sum over pairs and outcomes.
  double total() const {
    double t = 0.0;
    for (const auto &[k, p] : entries)
      t += p[0] + p[1] + p[2];
    return t;
  }
};

/// States psi_0..psi_n and one measurement per pair, with cached overlaps
/// omega_Q(psi_0, psi_j). Instances always satisfy the structural
/// invariants; create() throws InvalidScenario otherwise.
class Scenario {
public:
  static Scenario create(Field field, std::vector<PureState> states,
                         std::map<PairKey, Measurement> measurements) {
    Scenario s;
    s.field_ = field;
    s.states_ = std::move(states);
    s.measurements_ = std::move(measurements);
    s.validate();
    s.overlaps_.reserve(s.states_.size() - 1);
    for (std::size_t j = 1; j < s.states_.size(); ++j)
      s.overlaps_.push_back(quantum_overlap(s.states_[0], s.states_[j]));
    if (!(s.overlap_sum() > 1e-6))
      throw Error(ErrorCode::DegenerateDenominator,
                  "sum of quantum overlaps with psi_0 is below 1e-6");
    return s;
  }

  int dim() const { return states_.front().dim(); }
  int n() const { return static_cast<int>(states_.size()) - 1; }
  Field field() const { return field_; }
  const std::vector<PureState> &states() const { return states_; }
  const PureState &state(int j) const { return states_[static_cast<std::size_t>(j)]; }
  const std::map<PairKey, Measurement> &measurements() const { return measurements_; }
  const Measurement &measurement(PairKey k) const { return measurements_.at(k); }

  /// omega_Q(psi_0, psi_j) for j = 1..n.
  const std::vector<double> &overlaps() const { return overlaps_; }

  double overlap_sum() const {
    double s = 0.0;
    for (double w : overlaps_)
      s += w;
    return s;
  }

private:
  void validate() const {
    if (states_.size() < 4)
      throw Error(ErrorCode::BadN, "a scenario needs n >= 3 (at least 4 states)");
    const int d = states_.front().dim();
    for (std::size_t j = 0; j < states_.size(); ++j) {
      if (states_[j].dim() != d)
        throw Error(ErrorCode::InvalidScenario,
                    "state " + std::to_string(j) + " has dimension " +
                        std::to_string(states_[j].dim()) + ", expected " +
                        std::to_string(d));
      if (field_ == Field::real && !states_[j].is_real())
        throw Error(ErrorCode::InvalidScenario,
                    "state " + std::to_string(j) + " has imaginary parts in a real scenario");
    }
    const auto keys = pair_keys(n());
    if (measurements_.size() != keys.size())
      throw Error(ErrorCode::InvalidScenario,
                  "expected " + std::to_string(keys.size()) + " measurements, got " +
                      std::to_string(measurements_.size()));
    for (PairKey k : keys) {
      auto it = measurements_.find(k);
      if (it == measurements_.end())
        throw Error(ErrorCode::InvalidScenario, "missing measurement " + to_string(k));
      if (it->second.dim() != d)
        throw Error(ErrorCode::InvalidScenario,
                    "measurement " + to_string(k) + " has the wrong dimension");
      const auto diag = validate_measurement(it->second, kCompletenessTolerance);
      if (!diag.hermitian_ok)
        throw Error(ErrorCode::InvalidScenario,
                    "measurement " + to_string(k) + " has a non-Hermitian effect");
      if (!diag.psd_ok)
        throw Error(ErrorCode::InvalidScenario,
                    "measurement " + to_string(k) + " has an effect with eigenvalues outside [0,1]");
      if (diag.completeness_residual > kCompletenessTolerance)
        throw Error(ErrorCode::InvalidScenario,
                    "measurement " + to_string(k) + " effects do not sum to identity (residual " +
                        std::to_string(diag.completeness_residual) + ")");
    }
  }

  Field field_ = Field::real;
  std::vector<PureState> states_;
  std::map<PairKey, Measurement> measurements_;
  std::vector<double> overlaps_;
};

/// Noiseless Born-rule table of a scenario.
inline ProbabilityTable born_table(const Scenario &sc) {
  ProbabilityTable t;
  for (const auto &[k, m] : sc.measurements()) {
    Triple p{};
    for (int i = 0; i < 3; ++i)
      p[static_cast<std::size_t>(i)] = born_probability(sc.state(k.state_for_outcome(i)), m[i]);
    t.entries.emplace(k, p);
  }
  return t;
}

/// Throws unless the table covers exactly the scenario's pairs and every
/// entry lies in [0, 1] up to 1e-9.
inline void check_table(const Scenario &sc, const ProbabilityTable &table) {
  if (table.entries.size() != sc.measurements().size())
    throw Error(ErrorCode::KeyMismatch,
                "table has " + std::to_string(table.entries.size()) + " pairs, scenario has " +
                    std::to_string(sc.measurements().size()));
  for (const auto &[k, p] : table.entries) {
    if (!sc.measurements().contains(k))
      throw Error(ErrorCode::KeyMismatch, "table pair " + to_string(k) + " not in scenario");
    for (double v : p)
      if (!(v >= -kEffectTolerance && v <= 1.0 + kEffectTolerance))
        throw Error(ErrorCode::InvalidTable,
                    "entry for pair " + to_string(k) + " outside [0,1]: " + std::to_string(v));
  }
}

struct ScoreReport {
  double s = 0.0;
  /// Upper bound on kappa_0 = min_j omega_C / omega_Q, i.e. min(s, 1).
  double kappa0_bound = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
  std::map<PairKey, double> per_pair_sums;
};

/// S = (1 + sum_{pairs} sum_i p_i) / sum_j omega_Q(psi_0, psi_j).
inline ScoreReport s_value(const Scenario &sc, const ProbabilityTable &table) {
  check_table(sc, table);
  ScoreReport r;
  double numerator = 1.0;
  for (const auto &[k, p] : table.entries) {
    const double pair_sum = p[0] + p[1] + p[2];
    r.per_pair_sums.emplace(k, pair_sum);
    numerator += pair_sum;
  }
  r.numerator = numerator;
  r.denominator = sc.overlap_sum();
  if (!(r.denominator > 1e-6))
    throw Error(ErrorCode::DegenerateDenominator, "sum of quantum overlaps is below 1e-6");
  r.s = r.numerator / r.denominator;
  r.kappa0_bound = std::min(r.s, 1.0);
  return r;
}

/// S with detection efficiency eta, where a missing click is recorded as
/// outcome m0. `table` holds the unit-efficiency probabilities.
inline double s_eta(const Scenario &sc, const ProbabilityTable &table, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw Error(ErrorCode::EtaOutOfRange, "eta must lie in [0, 1], got " + std::to_string(eta));
  check_table(sc, table);
  double numerator = 1.0;
  for (const auto &[k, p] : table.entries)
    numerator += (1.0 - eta) + eta * (p[0] + p[1] + p[2]);
  return numerator / sc.overlap_sum();
}

/// Smallest efficiency eta* above which S^(eta) < 1. The value can exceed 1
/// when the scenario does not violate the inequality even at eta = 1.
inline double efficiency_threshold(const Scenario &sc, const ProbabilityTable &table) {
  check_table(sc, table);
  const double pairs = static_cast<double>(pair_count(sc.n()));
  const double denom = pairs - table.total();
  if (!(denom > 0.0))
    throw Error(ErrorCode::NoThreshold,
                "no efficiency makes S^(eta) < 1 (sum of probabilities reaches the pair count)");
  return (1.0 + pairs - sc.overlap_sum()) / denom;
}

/// Uniform per-probability increase epsilon_0 that raises S to exactly 1.
/// S = 1 itself (within 1e-12) is accepted and gives 0.
inline double noise_robustness(const Scenario &sc, const ProbabilityTable &theory_table) {
  const ScoreReport r = s_value(sc, theory_table);
  if (r.s > 1.0 + 1e-12)
    throw Error(ErrorCode::NotViolating,
                "S = " + std::to_string(r.s) + " does not violate the inequality");
  const double slots = 3.0 * pair_count(sc.n());
  return std::max(0.0, (r.denominator - r.numerator) / slots);
}

} // namespace psiepi
