#pragma once

// Multi-start local search for states and three-outcome measurements that
// minimize S for a given (d, n).
//
// Each measurement is stored as an isometry V (m x d, V^dag V = I) whose
// rows are assigned to outcomes; E_i = sum of v_r^dag v_r over rows r with
// outcome i. Any such V is a valid POVM, so the measurement step is plain
// Riemannian gradient descent on a Stiefel manifold. States live on unit
// spheres with psi_0 pinned to |0>.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

#include "psiepi/inequality.hpp"
#include "psiepi/rng.hpp"

namespace psiepi {

struct OptimizerOptions {
  int restarts = 64;
  int max_iters = 2000;
  double step_tolerance = 1e-10;
  double objective_tolerance = 1e-12;
  std::uint64_t seed = 0;
  Field field = Field::real;
  bool rank1_measurements = true;
  /// Worker threads for restarts; 0 picks hardware_concurrency. Output does
  /// not depend on this value.
  int threads = 0;
  /// Armijo steps spent on every measurement per outer iteration.
  int measurement_steps = 4;

  void validate() const {
    if (restarts < 1)
      throw Error(ErrorCode::InvalidArgument, "restarts must be >= 1");
    if (max_iters < 1)
      throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1");
    if (!(step_tolerance > 0.0) || !(objective_tolerance > 0.0))
      throw Error(ErrorCode::InvalidArgument, "tolerances must be positive");
    if (measurement_steps < 1)
      throw Error(ErrorCode::InvalidArgument, "measurement_steps must be >= 1");
  }
};

struct OptimizationResult {
  Scenario scenario;
  double s = 0.0;
  ProbabilityTable theory_table;
  int restarts_run = 0;
  int best_restart_index = 0;
  bool converged = false;
  /// Accepted S values of the winning restart, in order.
  std::vector<double> s_trace;
};

namespace detail {

template <typename Scalar> using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar> using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline double real_part(double x) { return x; }
inline double real_part(const Complex &x) { return x.real(); }

template <typename Scalar> Scalar gaussian(Rng &rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  if constexpr (std::is_same_v<Scalar, double>) {
    return nd(rng);
  } else {
    const double re = nd(rng);
    const double im = nd(rng);
    return Complex(re, im);
  }
}

template <typename Scalar> Vec<Scalar> random_unit(int d, Rng &rng) {
  Vec<Scalar> v(d);
  for (int i = 0; i < d; ++i)
    v(i) = gaussian<Scalar>(rng);
  return v / v.norm();
}

/// Y (Y^dag Y)^{-1/2}: nearest isometry to Y.
template <typename Scalar> Mat<Scalar> polar_isometry(const Mat<Scalar> &y) {
  const Mat<Scalar> gram = y.adjoint() * y;
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(gram);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-300);
  const Mat<Scalar> inv_sqrt = es.eigenvectors() *
                               ev.cwiseSqrt().cwiseInverse().template cast<Scalar>().asDiagonal() *
                               es.eigenvectors().adjoint();
  return y * inv_sqrt;
}

template <typename Scalar> Mat<Scalar> haar_isometry(int rows, int cols, Rng &rng) {
  Mat<Scalar> g(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r)
      g(r, c) = gaussian<Scalar>(rng);
  return polar_isometry<Scalar>(g);
}

template <typename Scalar> double inner(const Mat<Scalar> &a, const Mat<Scalar> &b) {
  return real_part(a.cwiseProduct(b.conjugate()).sum());
}

/// Measurement as an isometry plus a row-to-outcome map.
template <typename Scalar> struct Frame {
  Mat<Scalar> v;
  std::vector<int> outcome;

  int dim() const { return static_cast<int>(v.cols()); }

  /// Rank-1 layout: max(d, 3) rows assigned round robin, so d = 3 gives an
  /// orthonormal basis and larger d gives some higher-rank projectors.
  static Frame rank1(int d, Rng &rng) {
    const int m = std::max(d, 3);
    Frame f{haar_isometry<Scalar>(m, d, rng), std::vector<int>(static_cast<std::size_t>(m))};
    for (int r = 0; r < m; ++r)
      f.outcome[static_cast<std::size_t>(r)] = r % 3;
    return f;
  }

  /// General layout: a d x d Kraus block per outcome.
  static Frame general(int d, Rng &rng) {
    Frame f{haar_isometry<Scalar>(3 * d, d, rng), std::vector<int>(static_cast<std::size_t>(3 * d))};
    for (int r = 0; r < 3 * d; ++r)
      f.outcome[static_cast<std::size_t>(r)] = r / d;
    return f;
  }

  static Frame random(int d, bool rank1_layout, Rng &rng) {
    return rank1_layout ? rank1(d, rng) : general(d, rng);
  }

  /// Computational basis projectors, rows round robin over outcomes.
  static Frame identity(int d) {
    const int m = std::max(d, 3);
    Frame f{Mat<Scalar>::Zero(m, d), std::vector<int>(static_cast<std::size_t>(m))};
    for (int r = 0; r < m; ++r) {
      if (r < d)
        f.v(r, r) = Scalar(1);
      f.outcome[static_cast<std::size_t>(r)] = r % 3;
    }
    // d < 3 leaves a zero row; keep V^dag V = I regardless.
    return f;
  }

  Mat<Scalar> effect(int i) const {
    const int d = dim();
    Mat<Scalar> e = Mat<Scalar>::Zero(d, d);
    for (std::size_t r = 0; r < outcome.size(); ++r)
      if (outcome[r] == i)
        e.noalias() += v.row(static_cast<Eigen::Index>(r)).adjoint() *
                       v.row(static_cast<Eigen::Index>(r));
    return e;
  }

  /// sum_i <psi_i|E_i|psi_i>
  double objective(const std::array<const Vec<Scalar> *, 3> &psi) const {
    double f = 0.0;
    for (std::size_t r = 0; r < outcome.size(); ++r) {
      const Scalar a = (v.row(static_cast<Eigen::Index>(r)) * *psi[static_cast<std::size_t>(outcome[r])])(0);
      f += std::norm(Complex(a));
    }
    return f;
  }

  /// Euclidean gradient, 2 (v_r psi) psi^dag per row.
  Mat<Scalar> gradient(const std::array<const Vec<Scalar> *, 3> &psi) const {
    Mat<Scalar> g(v.rows(), v.cols());
    for (std::size_t r = 0; r < outcome.size(); ++r) {
      const Vec<Scalar> &p = *psi[static_cast<std::size_t>(outcome[r])];
      const Scalar a = (v.row(static_cast<Eigen::Index>(r)) * p)(0);
      g.row(static_cast<Eigen::Index>(r)) = Scalar(2) * a * p.adjoint();
    }
    return g;
  }
};

/// Projects a Euclidean gradient onto the Stiefel tangent space at v.
template <typename Scalar> Mat<Scalar> stiefel_project(const Mat<Scalar> &v, const Mat<Scalar> &g) {
  const Mat<Scalar> vg = v.adjoint() * g;
  return g - v * (0.5 * (vg + vg.adjoint()));
}

/// One Armijo backtracking step on a frame. Returns the accepted objective
/// (unchanged when no decrease was found). `step` carries the trial length
/// between calls.
template <typename Scalar>
double frame_step(Frame<Scalar> &frame, const std::array<const Vec<Scalar> *, 3> &psi,
                  double f0, double &step, double *grad_norm_sq = nullptr) {
  const Mat<Scalar> rg = stiefel_project<Scalar>(frame.v, frame.gradient(psi));
  const double gn2 = inner<Scalar>(rg, rg);
  if (grad_norm_sq)
    *grad_norm_sq = gn2;
  if (gn2 < 1e-30)
    return f0;
  double t = std::clamp(step, 1e-10, 1e3);
  for (int k = 0; k < 40; ++k) {
    Frame<Scalar> trial{polar_isometry<Scalar>(frame.v - t * rg), frame.outcome};
    const double f1 = trial.objective(psi);
    if (f1 <= f0 - 1e-4 * t * gn2) {
      frame = std::move(trial);
      step = 2.0 * t;
      return f1;
    }
    t *= 0.5;
  }
  step = t;
  return f0;
}

template <typename Scalar>
double minimize_frame(Frame<Scalar> &frame, const std::array<const Vec<Scalar> *, 3> &psi,
                      int iters, double grad_tol) {
  double f = frame.objective(psi);
  double step = 0.5;
  for (int it = 0; it < iters; ++it) {
    double gn2 = 0.0;
    const double f_new = frame_step(frame, psi, f, step, &gn2);
    if (gn2 < grad_tol * grad_tol || f_new >= f)
      return f_new;
    f = f_new;
  }
  return f;
}

/// Working copy of a scenario in the optimizer's scalar type.
template <typename Scalar> struct Search {
  int dim = 0;
  int n = 0;
  std::vector<Vec<Scalar>> states;
  std::vector<PairKey> keys;
  std::vector<Frame<Scalar>> frames;
  std::vector<double> pair_values;
  std::vector<double> frame_steps;

  std::array<const Vec<Scalar> *, 3> triple(std::size_t p) const {
    const PairKey k = keys[p];
    return {&states[0], &states[static_cast<std::size_t>(k.j1)],
            &states[static_cast<std::size_t>(k.j2)]};
  }

  double overlap_sum(const std::vector<Vec<Scalar>> &st) const {
    double w = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double c = std::min(1.0, std::norm(Complex(st[0].dot(st[static_cast<std::size_t>(j)]))));
      w += 1.0 - std::sqrt(std::max(0.0, 1.0 - c));
    }
    return w;
  }

  double numerator() const {
    double num = 1.0;
    for (double v : pair_values)
      num += v;
    return num;
  }

  double s() const { return numerator() / overlap_sum(states); }

  void refresh_pair_values() {
    pair_values.resize(keys.size());
    for (std::size_t p = 0; p < keys.size(); ++p)
      pair_values[p] = frames[p].objective(triple(p));
  }

  /// S evaluated with trial states and the current frames.
  double s_with_states(const std::vector<Vec<Scalar>> &st) const {
    double num = 1.0;
    for (std::size_t p = 0; p < keys.size(); ++p) {
      const PairKey k = keys[p];
      num += frames[p].objective({&st[0], &st[static_cast<std::size_t>(k.j1)],
                                  &st[static_cast<std::size_t>(k.j2)]});
    }
    return num / overlap_sum(st);
  }

  /// Riemannian gradient of S with respect to psi_1..psi_n (entry 0 is zero).
  std::vector<Vec<Scalar>> state_gradient() const {
    std::vector<Vec<Scalar>> gnum(states.size(), Vec<Scalar>::Zero(dim));
    for (std::size_t p = 0; p < keys.size(); ++p) {
      const PairKey k = keys[p];
      for (int i = 1; i < 3; ++i) {
        const int j = k.state_for_outcome(i);
        gnum[static_cast<std::size_t>(j)] += Scalar(2) * (frames[p].effect(i) * states[static_cast<std::size_t>(j)]);
      }
    }
    const double num = numerator();
    const double den = overlap_sum(states);
    const double sval = num / den;
    std::vector<Vec<Scalar>> g(states.size(), Vec<Scalar>::Zero(dim));
    for (int j = 1; j <= n; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      const Scalar a = states[0].dot(states[ju]);
      const double c = std::min(1.0, std::norm(Complex(a)));
      const double dw_dc = 0.5 / std::sqrt(std::max(1e-14, 1.0 - c));
      const Vec<Scalar> gden = Scalar(2 * dw_dc) * a * states[0];
      Vec<Scalar> gj = (gnum[ju] - sval * gden) / den;
      gj -= Scalar(real_part(states[ju].dot(gj))) * states[ju];
      g[ju] = gj;
    }
    return g;
  }
};

/// Unitary mapping psi_0 to |0> (after removing its global phase).
template <typename Scalar> Mat<Scalar> gauge_unitary(const Vec<Scalar> &psi0) {
  const int d = static_cast<int>(psi0.size());
  Vec<Scalar> p = psi0;
  if constexpr (!std::is_same_v<Scalar, double>) {
    const double mag = std::abs(p(0));
    if (mag > 0.0)
      p *= std::conj(p(0)) / mag;
  }
  Vec<Scalar> e = Vec<Scalar>::Zero(d);
  e(0) = Scalar(1);
  Vec<Scalar> u = p - e;
  const double un = u.norm();
  Mat<Scalar> h = Mat<Scalar>::Identity(d, d);
  if (un > 1e-14) {
    u /= un;
    h -= Scalar(2) * u * u.adjoint();
  }
  if constexpr (!std::is_same_v<Scalar, double>) {
    // Fold the phase removal into the unitary.
    const double mag = std::abs(psi0(0));
    if (mag > 0.0)
      h *= std::conj(psi0(0)) / mag;
  }
  return h;
}

template <typename Scalar> void apply_gauge(Search<Scalar> &s) {
  const Mat<Scalar> h = gauge_unitary<Scalar>(s.states[0]);
  for (auto &st : s.states)
    st = h * st;
  for (auto &f : s.frames)
    f.v = f.v * h.adjoint();
  s.states[0] = Vec<Scalar>::Zero(s.dim);
  s.states[0](0) = Scalar(1);
}

struct RunOutcome {
  double s = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::vector<double> trace;
};

/// Alternating descent: every outer iteration takes a few Armijo steps on
/// each measurement frame, then one Armijo step on all states jointly. Only
/// decreasing steps are accepted.
template <typename Scalar> RunOutcome descend(Search<Scalar> &s, const OptimizerOptions &opt) {
  RunOutcome out;
  s.frame_steps.assign(s.keys.size(), 0.5);
  s.refresh_pair_values();
  double sval = s.s();
  out.trace.push_back(sval);
  double state_step = 0.1;
  std::vector<Vec<Scalar>> prev_x, prev_g;
  int quiet = 0;

  for (int it = 0; it < opt.max_iters; ++it) {
    const double s_begin = sval;
    double frame_grad2 = 0.0;

    // (a) measurement step
    for (std::size_t p = 0; p < s.keys.size(); ++p) {
      const auto psi = s.triple(p);
      for (int k = 0; k < opt.measurement_steps; ++k) {
        double gn2 = 0.0;
        const double f = frame_step(s.frames[p], psi, s.pair_values[p], s.frame_steps[p], &gn2);
        if (k == 0)
          frame_grad2 += gn2;
        if (f >= s.pair_values[p])
          break;
        s.pair_values[p] = f;
      }
    }
    const double s_mid = s.s();
    if (s_mid < sval) {
      sval = s_mid;
      out.trace.push_back(sval);
    }

    // (b) state step
    const auto g = s.state_gradient();
    double gn2 = 0.0;
    for (int j = 1; j <= s.n; ++j)
      gn2 += g[static_cast<std::size_t>(j)].squaredNorm();

    if (!prev_x.empty()) {
      // Barzilai-Borwein trial length.
      double ss = 0.0, sy = 0.0;
      for (int j = 1; j <= s.n; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const Vec<Scalar> dx = s.states[ju] - prev_x[ju];
        const Vec<Scalar> dg = g[ju] - prev_g[ju];
        ss += dx.squaredNorm();
        sy += real_part(dx.dot(dg));
      }
      if (sy > 0.0 && ss > 0.0)
        state_step = ss / sy;
    }
    prev_x = s.states;
    prev_g = g;

    double accepted_len = 0.0;
    if (gn2 > 1e-30) {
      double t = std::clamp(state_step, 1e-10, 10.0);
      for (int k = 0; k < 40; ++k) {
        std::vector<Vec<Scalar>> trial = s.states;
        for (int j = 1; j <= s.n; ++j) {
          auto &v = trial[static_cast<std::size_t>(j)];
          v -= Scalar(t) * g[static_cast<std::size_t>(j)];
          v /= v.norm();
        }
        const double s_trial = s.s_with_states(trial);
        if (s_trial <= sval - 1e-4 * t * gn2) {
          s.states = std::move(trial);
          s.refresh_pair_values();
          sval = s.s();
          out.trace.push_back(sval);
          accepted_len = t * std::sqrt(gn2);
          state_step = t;
          break;
        }
        t *= 0.5;
      }
    }

    const double decrease = s_begin - sval;
    const double grad_norm = std::sqrt(gn2 + frame_grad2);
    if (decrease < opt.objective_tolerance &&
        (accepted_len < opt.step_tolerance || grad_norm < std::sqrt(opt.step_tolerance))) {
      if (++quiet >= 3) {
        out.converged = true;
        break;
      }
    } else {
      quiet = 0;
    }
  }
  out.s = sval;
  return out;
}

template <typename Scalar> Vec<Scalar> to_scalar(const CVector &v) {
  if constexpr (std::is_same_v<Scalar, double>)
    return v.real();
  else
    return v;
}

template <typename Scalar> CMatrix to_complex(const Mat<Scalar> &m) {
  return m.template cast<Complex>();
}

/// Frame reproducing an existing measurement: rows sqrt(lambda) v^dag from
/// each effect's eigen-decomposition, then re-orthonormalized.
template <typename Scalar> Frame<Scalar> frame_from_measurement(const Measurement &m) {
  const int d = m.dim();
  std::vector<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>> rows;
  std::vector<int> outcome;
  for (int i = 0; i < 3; ++i) {
    Mat<Scalar> e;
    if constexpr (std::is_same_v<Scalar, double>)
      e = m[i].matrix().real();
    else
      e = m[i].matrix();
    e = (0.5 * (e + e.adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(e);
    for (int c = 0; c < d; ++c) {
      const double lam = es.eigenvalues()(c);
      if (lam > 1e-12) {
        rows.push_back(std::sqrt(lam) * es.eigenvectors().col(c).adjoint());
        outcome.push_back(i);
      }
    }
  }
  // Keep at least three rows so every outcome index stays representable.
  while (rows.size() < 3) {
    rows.push_back(Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Zero(d));
    outcome.push_back(static_cast<int>(rows.size() - 1) % 3);
  }
  Mat<Scalar> v(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t r = 0; r < rows.size(); ++r)
    v.row(static_cast<Eigen::Index>(r)) = rows[r];
  return Frame<Scalar>{polar_isometry<Scalar>(v), std::move(outcome)};
}

template <typename Scalar> Search<Scalar> search_from_scenario(const Scenario &sc) {
  Search<Scalar> s;
  s.dim = sc.dim();
  s.n = sc.n();
  for (const PureState &p : sc.states())
    s.states.push_back(to_scalar<Scalar>(p.coeffs()));
  for (const auto &[k, m] : sc.measurements()) {
    s.keys.push_back(k);
    s.frames.push_back(frame_from_measurement<Scalar>(m));
  }
  return s;
}

template <typename Scalar> Scenario scenario_from_search(const Search<Scalar> &s, Field field) {
  std::vector<PureState> states;
  for (const auto &v : s.states)
    states.push_back(make_state(CVector(v.template cast<Complex>())));
  std::map<PairKey, Measurement> ms;
  for (std::size_t p = 0; p < s.keys.size(); ++p) {
    const auto &f = s.frames[p];
    ms.emplace(s.keys[p], Measurement({Effect(to_complex<Scalar>(f.effect(0))),
                                       Effect(to_complex<Scalar>(f.effect(1))),
                                       Effect(to_complex<Scalar>(f.effect(2)))}));
  }
  return Scenario::create(field, std::move(states), std::move(ms));
}

template <typename Scalar> Search<Scalar> random_search(int dim, int n, Rng &rng, bool rank1) {
  Search<Scalar> s;
  s.dim = dim;
  s.n = n;
  for (int j = 0; j <= n; ++j)
    s.states.push_back(random_unit<Scalar>(dim, rng));
  s.keys = pair_keys(n);
  for (std::size_t p = 0; p < s.keys.size(); ++p)
    s.frames.push_back(Frame<Scalar>::random(dim, rank1, rng));
  return s;
}

inline void check_dim_n(int dim, int n) {
  if (dim < 3 || dim > kMaxDim)
    throw Error(ErrorCode::BadDimension, "dim must lie in [3, 8], got " + std::to_string(dim));
  if (n < 3)
    throw Error(ErrorCode::BadN, "n must be >= 3, got " + std::to_string(n));
}

template <typename Scalar>
Search<Scalar> random_search_checked(int dim, int n, std::uint64_t seed, bool rank1) {
  check_dim_n(dim, n);
  Rng rng = substream(seed, "scenario");
  return random_search<Scalar>(dim, n, rng, rank1);
}

template <typename Fn> void parallel_for(int count, int threads, Fn &&fn) {
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, count);
  if (workers == 1) {
    for (int i = 0; i < count; ++i)
      fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++)
        fn(i);
    });
}

struct RestartResult {
  Scenario scenario;
  RunOutcome run;
};

template <typename Scalar>
OptimizationResult optimize_impl(int dim, int n, const OptimizerOptions &opt) {
  std::vector<std::optional<RestartResult>> results(static_cast<std::size_t>(opt.restarts));
  parallel_for(opt.restarts, opt.threads, [&](int r) {
    Rng rng = substream(opt.seed, "optimizer", static_cast<std::uint64_t>(r));
    Search<Scalar> s = random_search<Scalar>(dim, n, rng, opt.rank1_measurements);
    apply_gauge(s);
    RunOutcome run = descend(s, opt);
    try {
      results[static_cast<std::size_t>(r)] = RestartResult{scenario_from_search(s, opt.field), std::move(run)};
    } catch (const Error &) {
      // Degenerate restart (e.g. all states orthogonal to psi_0); skip it.
    }
  });

  int best = -1;
  double best_s = std::numeric_limits<double>::infinity();
  for (int r = 0; r < opt.restarts; ++r) {
    const auto &res = results[static_cast<std::size_t>(r)];
    if (!res)
      continue;
    const double sv = s_value(res->scenario, born_table(res->scenario)).s;
    if (sv < best_s - 1e-12) {
      best_s = sv;
      best = r;
    }
  }
  if (best < 0)
    throw Error(ErrorCode::InvalidScenario, "every restart degenerated");
  RestartResult &win = *results[static_cast<std::size_t>(best)];
  ProbabilityTable table = born_table(win.scenario);
  const double sv = s_value(win.scenario, table).s;
  return OptimizationResult{std::move(win.scenario), sv, std::move(table), opt.restarts,
                            best, win.run.converged, std::move(win.run.trace)};
}

template <typename Scalar>
OptimizationResult reoptimize_impl(const Scenario &sc, const OptimizerOptions &opt) {
  Search<Scalar> s = search_from_scenario<Scalar>(sc);
  apply_gauge(s);
  RunOutcome run = descend(s, opt);
  Scenario out = scenario_from_search(s, sc.field());
  ProbabilityTable table = born_table(out);
  double sv = s_value(out, table).s;
  const double s_in = s_value(sc, born_table(sc)).s;
  if (sv > s_in) {
    // Rounding in the gauge change can only cost ~1e-16; fall back to input.
    out = sc;
    table = born_table(out);
    sv = s_in;
  }
  return OptimizationResult{std::move(out), sv, std::move(table), 1, 0, run.converged,
                            std::move(run.trace)};
}

} // namespace detail

/// Random states (uniform on the unit sphere of the field) and random
/// valid measurements. Deterministic in seed.
inline Scenario random_scenario(int dim, int n, std::uint64_t seed, Field field,
                                bool rank1_measurements = true) {
  if (field == Field::real)
    return detail::scenario_from_search(
        detail::random_search_checked<double>(dim, n, seed, rank1_measurements), field);
  return detail::scenario_from_search(
      detail::random_search_checked<Complex>(dim, n, seed, rank1_measurements), field);
}

/// Objective sum_i <psi_i|E_i|psi_i> of a measurement on (psi_0, psi_A, psi_B).
inline double triple_objective(const Measurement &m, const PureState &psi0,
                               const PureState &psi_a, const PureState &psi_b) {
  return raw_expectation(psi0, m[0]) + raw_expectation(psi_a, m[1]) + raw_expectation(psi_b, m[2]);
}

namespace detail {

template <typename Scalar>
Measurement best_measurement_for_triple(const PureState &psi0, const PureState &psi_a,
                                        const PureState &psi_b, const OptimizerOptions &opt) {
  const int d = psi0.dim();
  const Vec<Scalar> a = to_scalar<Scalar>(psi0.coeffs());
  const Vec<Scalar> b = to_scalar<Scalar>(psi_a.coeffs());
  const Vec<Scalar> c = to_scalar<Scalar>(psi_b.coeffs());
  const std::array<const Vec<Scalar> *, 3> psi{&a, &b, &c};

  // Identity frame first: the result is never worse than basis projectors.
  Frame<Scalar> best = Frame<Scalar>::identity(d);
  double best_f = minimize_frame(best, psi, opt.max_iters, 1e-12);
  const int starts = std::clamp(opt.restarts, 1, 16);
  for (int r = 0; r < starts; ++r) {
    Rng rng = substream(opt.seed, "triple", static_cast<std::uint64_t>(r));
    Frame<Scalar> f = Frame<Scalar>::random(d, opt.rank1_measurements, rng);
    const double v = minimize_frame(f, psi, opt.max_iters, 1e-12);
    if (v < best_f - 1e-15) {
      best_f = v;
      best = std::move(f);
    }
  }
  return Measurement({Effect(to_complex<Scalar>(best.effect(0))),
                      Effect(to_complex<Scalar>(best.effect(1))),
                      Effect(to_complex<Scalar>(best.effect(2)))});
}

} // namespace detail

/// Measurement minimizing sum_i P(m_i | psi_{j_i}) for one triple.
inline Measurement optimize_measurement_for_triple(const PureState &psi0, const PureState &psi_a,
                                                   const PureState &psi_b,
                                                   const OptimizerOptions &options = {}) {
  if (psi0.dim() != psi_a.dim() || psi0.dim() != psi_b.dim())
    throw Error(ErrorCode::DimensionMismatch, "triple states have different dimensions");
  options.validate();
  const bool real = options.field == Field::real && psi0.is_real() && psi_a.is_real() &&
                    psi_b.is_real();
  if (real)
    return detail::best_measurement_for_triple<double>(psi0, psi_a, psi_b, options);
  return detail::best_measurement_for_triple<Complex>(psi0, psi_a, psi_b, options);
}

/// Best S over options.restarts independent local searches. Ties within
/// 1e-12 go to the lowest restart index.
inline OptimizationResult optimize_scenario(int dim, int n, const OptimizerOptions &options = {}) {
  detail::check_dim_n(dim, n);
  options.validate();
  if (options.field == Field::real)
    return detail::optimize_impl<double>(dim, n, options);
  return detail::optimize_impl<Complex>(dim, n, options);
}

/// Warm-started descent from an existing scenario; never returns a larger S.
inline OptimizationResult reoptimize(const Scenario &scenario, const OptimizerOptions &options = {}) {
  options.validate();
  if (scenario.field() == Field::real)
    return detail::reoptimize_impl<double>(scenario, options);
  return detail::reoptimize_impl<Complex>(scenario, options);
}

} // namespace psiepi
