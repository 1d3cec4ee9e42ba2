#pragma once

// Finite ontological models: epistemic distributions mu_j over L ontic
// states and per-measurement response functions xi. Used to check the
// overlap inequality by brute force.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "psiepi/inequality.hpp"
#include "psiepi/rng.hpp"

namespace psiepi {

inline constexpr int kMaxOnticStates = 4096;

using ResponseMatrix = Eigen::Matrix<double, 3, Eigen::Dynamic>;

struct FiniteOnticModel {
  int lambda_count = 0;
  int n = 0;
  /// (n+1) x L, row j is mu_j.
  Eigen::MatrixXd epistemic;
  /// xi[i][lambda] per pair; every column sums to 1.
  std::map<PairKey, ResponseMatrix> responses;

  void validate() const {
    if (n < 3)
      throw Error(ErrorCode::BadN, "ontic model needs n >= 3");
    if (lambda_count < 1 || lambda_count > kMaxOnticStates)
      throw Error(ErrorCode::InvalidModel, "lambda_count must lie in [1, 4096]");
    if (epistemic.rows() != n + 1 || epistemic.cols() != lambda_count)
      throw Error(ErrorCode::InvalidModel, "epistemic matrix has the wrong shape");
    for (int j = 0; j <= n; ++j) {
      if ((epistemic.row(j).array() < 0.0).any())
        throw Error(ErrorCode::InvalidModel, "mu_" + std::to_string(j) + " has negative mass");
      if (std::abs(epistemic.row(j).sum() - 1.0) > 1e-12)
        throw Error(ErrorCode::InvalidModel, "mu_" + std::to_string(j) + " does not sum to 1");
    }
    const auto keys = pair_keys(n);
    if (responses.size() != keys.size())
      throw Error(ErrorCode::InvalidModel, "response functions do not cover every pair");
    for (PairKey k : keys) {
      auto it = responses.find(k);
      if (it == responses.end())
        throw Error(ErrorCode::InvalidModel, "missing response for pair " + to_string(k));
      const ResponseMatrix &xi = it->second;
      if (xi.cols() != lambda_count)
        throw Error(ErrorCode::InvalidModel, "response for " + to_string(k) + " has the wrong width");
      if ((xi.array() < 0.0).any())
        throw Error(ErrorCode::InvalidModel, "negative response for " + to_string(k));
      if (((xi.colwise().sum().array() - 1.0).abs() > 1e-12).any())
        throw Error(ErrorCode::InvalidModel, "response columns for " + to_string(k) + " do not sum to 1");
    }
  }

  /// mu_j as a contiguous vector (rows are strided in column-major storage).
  std::vector<double> distribution(int j) const {
    std::vector<double> out(static_cast<std::size_t>(lambda_count));
    for (int l = 0; l < lambda_count; ++l)
      out[static_cast<std::size_t>(l)] = epistemic(j, l);
    return out;
  }
};

namespace detail {

inline void check_distribution(std::span<const double> a) {
  double sum = 0.0;
  for (double x : a) {
    if (!(x >= 0.0) || !std::isfinite(x))
      throw Error(ErrorCode::NotADistribution, "negative or non-finite probability mass");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw Error(ErrorCode::NotADistribution, "masses sum to " + std::to_string(sum));
}

} // namespace detail

/// omega_C = sum_lambda min(a, b)
inline double classical_overlap(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::LengthMismatch, "distributions have different lengths");
  detail::check_distribution(a);
  detail::check_distribution(b);
  double w = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l)
    w += std::min(a[l], b[l]);
  return std::min(w, 1.0);
}

/// sum_lambda min(a, b, c)
inline double triple_overlap(std::span<const double> a, std::span<const double> b,
                             std::span<const double> c) {
  if (a.size() != b.size() || a.size() != c.size())
    throw Error(ErrorCode::LengthMismatch, "distributions have different lengths");
  double w = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l)
    w += std::min({a[l], b[l], c[l]});
  return std::min(w, 1.0);
}

/// P~(m_i | psi_{j_i}) = sum_lambda xi[i][lambda] mu_{j_i}(lambda)
inline ProbabilityTable model_probabilities(const FiniteOnticModel &model) {
  model.validate();
  ProbabilityTable t;
  for (const auto &[k, xi] : model.responses) {
    Triple p{};
    for (int i = 0; i < 3; ++i)
      p[static_cast<std::size_t>(i)] = xi.row(i).dot(model.epistemic.row(k.state_for_outcome(i)));
    t.entries.emplace(k, p);
  }
  return t;
}

/// 1 + sum_{pairs} sum_i P~ - sum_j omega_C(mu_0, mu_j); never negative for
/// a valid model.
inline double model_inequality_slack(const FiniteOnticModel &model) {
  const ProbabilityTable t = model_probabilities(model);
  const std::vector<double> mu0 = model.distribution(0);
  double overlaps = 0.0;
  for (int j = 1; j <= model.n; ++j)
    overlaps += classical_overlap(mu0, model.distribution(j));
  return 1.0 + t.total() - overlaps;
}

/// psi-ontic model reproducing `table`: mu_j is a point mass on lambda = j,
/// and the response at lambda = j_i returns outcome i with the table's
/// probability, putting the remainder on outcome (i + 1) mod 3.
inline FiniteOnticModel psi_ontic_embedding(const Scenario &sc, const ProbabilityTable &table) {
  check_table(sc, table);
  FiniteOnticModel m;
  m.n = sc.n();
  m.lambda_count = m.n + 1;
  m.epistemic = Eigen::MatrixXd::Identity(m.n + 1, m.n + 1);
  for (const auto &[k, p] : table.entries) {
    ResponseMatrix xi = ResponseMatrix::Zero(3, m.lambda_count);
    xi.row(0).setOnes();
    for (int i = 0; i < 3; ++i) {
      const int lam = k.state_for_outcome(i);
      const double pi = std::clamp(p[static_cast<std::size_t>(i)], 0.0, 1.0);
      xi.col(lam).setZero();
      xi(i, lam) = pi;
      xi((i + 1) % 3, lam) = 1.0 - pi;
    }
    m.responses.emplace(k, xi);
  }
  m.validate();
  return m;
}

namespace detail {

/// Uniform point on the probability simplex of the given size.
inline void dirichlet_uniform(Rng &rng, double *out, int size) {
  std::exponential_distribution<double> ex(1.0);
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    out[i] = ex(rng);
    sum += out[i];
  }
  for (int i = 0; i < size; ++i)
    out[i] /= sum;
}

} // namespace detail

/// Model with Dirichlet-uniform epistemic rows and response columns.
inline FiniteOnticModel random_model(int lambda_count, int n, std::uint64_t seed) {
  if (n < 3)
    throw Error(ErrorCode::BadN, "n must be >= 3");
  if (lambda_count < 1 || lambda_count > kMaxOnticStates)
    throw Error(ErrorCode::InvalidArgument, "lambda_count must lie in [1, 4096]");
  Rng rng = substream(seed, "ontic");
  FiniteOnticModel m;
  m.n = n;
  m.lambda_count = lambda_count;
  m.epistemic.resize(n + 1, lambda_count);
  std::vector<double> row(static_cast<std::size_t>(lambda_count));
  for (int j = 0; j <= n; ++j) {
    detail::dirichlet_uniform(rng, row.data(), lambda_count);
    for (int l = 0; l < lambda_count; ++l)
      m.epistemic(j, l) = row[static_cast<std::size_t>(l)];
  }
  for (PairKey k : pair_keys(n)) {
    ResponseMatrix xi(3, lambda_count);
    for (int l = 0; l < lambda_count; ++l)
      detail::dirichlet_uniform(rng, xi.col(l).data(), 3);
    m.responses.emplace(k, xi);
  }
  return m;
}

} // namespace psiepi
