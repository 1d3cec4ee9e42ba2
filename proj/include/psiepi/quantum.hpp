#pragma once

// Pure states, three-outcome measurements and Born-rule quantities for
// small Hilbert spaces (2 <= d <= 8).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "psiepi/errors.hpp"

namespace psiepi {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr int kMinDim = 2;
inline constexpr int kMaxDim = 8;
inline constexpr double kNormTolerance = 1e-9;
inline constexpr double kEffectTolerance = 1e-9;
inline constexpr double kCompletenessTolerance = 1e-8;

enum class Field { real, complex };

inline std::string to_string(Field f) {
  return f == Field::real ? "real" : "complex";
}

inline Field parse_field(const std::string &s) {
  if (s == "real")
    return Field::real;
  if (s == "complex")
    return Field::complex;
  throw Error(ErrorCode::InvalidArgument, "field must be real or complex, got '" + s + "'");
}

/// Unit vector in C^d. Only constructible through make_state, so every
/// instance is normalized and finite.
class PureState {
public:
  int dim() const { return static_cast<int>(coeffs_.size()); }
  const CVector &coeffs() const { return coeffs_; }
  Complex operator[](int i) const { return coeffs_(i); }

  bool is_real() const {
    return (coeffs_.imag().array() == 0.0).all();
  }

private:
  explicit PureState(CVector v) : coeffs_(std::move(v)) {}
  friend PureState make_state(const CVector &coeffs);

  CVector coeffs_;
};

inline void check_dimension(Eigen::Index dim) {
  if (dim < kMinDim || dim > kMaxDim)
    throw Error(ErrorCode::BadDimension,
                "dimension " + std::to_string(dim) + " outside [2, 8]");
}

/// Returns the normalized copy of `coeffs`. Vectors already of unit norm to
/// rounding are kept bit for bit, so save/load cycles are exact.
inline PureState make_state(const CVector &coeffs) {
  check_dimension(coeffs.size());
  for (Eigen::Index i = 0; i < coeffs.size(); ++i)
    if (!std::isfinite(coeffs(i).real()) || !std::isfinite(coeffs(i).imag()))
      throw Error(ErrorCode::NonFinite,
                  "amplitude " + std::to_string(i) + " is not finite");
  const double norm = coeffs.norm();
  if (!(norm > 1e-12))
    throw Error(ErrorCode::ZeroNorm, "state vector has zero norm");
  if (std::abs(norm - 1.0) <= 8.0 * std::numeric_limits<double>::epsilon())
    return PureState(coeffs);
  return PureState(coeffs / norm);
}

inline PureState make_state(std::span<const double> coeffs) {
  CVector v(static_cast<Eigen::Index>(coeffs.size()));
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = Complex(coeffs[i], 0.0);
  return make_state(v);
}

inline PureState make_state(std::initializer_list<double> coeffs) {
  return make_state(std::span<const double>(coeffs.begin(), coeffs.size()));
}

/// Computational basis vector |k> in dimension d.
inline PureState basis_state(int dim, int k) {
  CVector v = CVector::Zero(dim);
  v(k) = 1.0;
  return make_state(v);
}

/// A measurement effect. Positivity and boundedness are not enforced here;
/// validate_measurement reports them.
class Effect {
public:
  Effect() = default;
  explicit Effect(CMatrix m) : matrix_(std::move(m)) {
    if (matrix_.rows() != matrix_.cols())
      throw Error(ErrorCode::DimensionMismatch, "effect matrix is not square");
    check_dimension(matrix_.rows());
    if (!matrix_.allFinite())
      throw Error(ErrorCode::NonFinite, "effect matrix has non-finite entries");
  }

  int dim() const { return static_cast<int>(matrix_.rows()); }
  const CMatrix &matrix() const { return matrix_; }

  static Effect projector(const PureState &s) {
    return Effect(s.coeffs() * s.coeffs().adjoint());
  }

private:
  CMatrix matrix_;
};

/// Three-outcome measurement (m0, m1, m2).
class Measurement {
public:
  Measurement() = default;
  explicit Measurement(std::array<Effect, 3> effects)
      : effects_(std::move(effects)) {
    const int d = effects_[0].dim();
    if (effects_[1].dim() != d || effects_[2].dim() != d)
      throw Error(ErrorCode::DimensionMismatch,
                  "measurement effects have different dimensions");
  }

  int dim() const { return effects_[0].dim(); }
  const Effect &operator[](int i) const { return effects_[static_cast<std::size_t>(i)]; }
  const std::array<Effect, 3> &effects() const { return effects_; }

private:
  std::array<Effect, 3> effects_;
};

inline double raw_expectation(const PureState &state, const Effect &effect) {
  if (state.dim() != effect.dim())
    throw Error(ErrorCode::DimensionMismatch,
                "state dimension " + std::to_string(state.dim()) +
                    " vs effect dimension " + std::to_string(effect.dim()));
  return state.coeffs().dot(effect.matrix() * state.coeffs()).real();
}

/// <psi|E|psi>, clamped to [0, 1] when it lies within 1e-9 of the interval.
inline double born_probability(const PureState &state, const Effect &effect) {
  const double p = raw_expectation(state, effect);
  if (p < -kEffectTolerance || p > 1.0 + kEffectTolerance)
    throw Error(ErrorCode::ProbabilityOutOfRange,
                "Born probability " + std::to_string(p) + " outside [0,1]");
  return std::clamp(p, 0.0, 1.0);
}

/// |<a|b>|^2
inline double squared_overlap(const PureState &a, const PureState &b) {
  if (a.dim() != b.dim())
    throw Error(ErrorCode::DimensionMismatch, "states have different dimensions");
  return std::min(1.0, std::norm(a.coeffs().dot(b.coeffs())));
}

/// omega_Q = 1 - sqrt(1 - |<a|b>|^2)
inline double quantum_overlap(const PureState &a, const PureState &b) {
  const double c = squared_overlap(a, b);
  return 1.0 - std::sqrt(std::max(0.0, 1.0 - c));
}

/// Optimal success probability of telling a from b with equal priors.
inline double discrimination_success(const PureState &a, const PureState &b) {
  return 1.0 - 0.5 * quantum_overlap(a, b);
}

/// Ascending eigenvalues of the Hermitian part of m.
inline Eigen::VectorXd hermitian_eigenvalues(const CMatrix &m) {
  const CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

struct MeasurementDiagnostics {
  bool psd_ok = false;
  bool hermitian_ok = false;
  double completeness_residual = 0.0;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  double hermitian_residual = 0.0;

  bool valid(double tol) const {
    return psd_ok && hermitian_ok && completeness_residual <= tol;
  }
};

/// Hermiticity, positivity and completeness residuals of a measurement.
/// psd_ok requires every eigenvalue to lie in [-tol, 1 + tol].
inline MeasurementDiagnostics validate_measurement(const Measurement &m,
                                                   double tol) {
  if (!(tol > 0.0))
    throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  const int d = m.dim();
  MeasurementDiagnostics diag;
  diag.min_eigenvalue = std::numeric_limits<double>::infinity();
  diag.max_eigenvalue = -std::numeric_limits<double>::infinity();
  CMatrix sum = CMatrix::Zero(d, d);
  for (const Effect &e : m.effects()) {
    const CMatrix &a = e.matrix();
    diag.hermitian_residual =
        std::max(diag.hermitian_residual, (a - a.adjoint()).cwiseAbs().maxCoeff());
    const Eigen::VectorXd ev = hermitian_eigenvalues(a);
    diag.min_eigenvalue = std::min(diag.min_eigenvalue, ev.minCoeff());
    diag.max_eigenvalue = std::max(diag.max_eigenvalue, ev.maxCoeff());
    sum += a;
  }
  diag.hermitian_ok = diag.hermitian_residual <= tol;
  diag.psd_ok = diag.min_eigenvalue >= -tol && diag.max_eigenvalue <= 1.0 + tol;
  diag.completeness_residual =
      (sum - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff();
  return diag;
}

} // namespace psiepi
