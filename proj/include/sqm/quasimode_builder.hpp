#pragma once
// WKB quasimodes v_h = e^{i xi2 y / h^alpha} sum_m a_m h^{m beta}.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sqm/errors.hpp"
#include "sqm/exponent_calculus.hpp"
#include "sqm/model_symbols.hpp"
#include "sqm/operator_engine.hpp"

namespace sqm {

/// Product cutoff. plateau = 0 gives the bump e^{1 - 1/(1 - s^2)}; plateau in (0,1)
/// gives a C-infinity step equal to 1 for s <= plateau. A positive envelope width
/// multiplies in a Gaussian e^{-d^2 / (2 w^2)} along that axis.
struct CutoffSpec {
  double radius_t = 7.5;
  double radius_y = 7.5;
  double center_t = 0.0;
  double center_y = 0.0;
  double plateau = 0.8;
  double envelope_t = 0.0;
  double envelope_y = 1.0;

  static CutoffSpec bump(double radius) { return {radius, radius, 0.0, 0.0, 0.0, 0.0, 0.0}; }
};

namespace detail {

inline double step_f(double s) { return s > 0 ? std::exp(-1.0 / s) : 0.0; }

inline double cutoff_1d(double d, double radius, double plateau, double envelope) {
  double s = std::abs(d) / radius;
  double v;
  if (s >= 1.0) {
    v = 0.0;
  } else if (plateau <= 0.0) {
    v = std::exp(1.0 - 1.0 / (1.0 - s * s));
  } else if (s <= plateau) {
    v = 1.0;
  } else {
    double u = 1.0 - (s - plateau) / (1.0 - plateau);
    v = step_f(u) / (step_f(u) + step_f(1.0 - u));
  }
  if (envelope > 0.0) v *= std::exp(-d * d / (2.0 * envelope * envelope));
  return v;
}

}  // namespace detail

inline VectorC cutoff_t(const CutoffSpec& c, const Grid& g) {
  VectorC v(g.n);
  for (int i = 0; i < g.n; ++i) v[i] = detail::cutoff_1d(g.x(i) - c.center_t, c.radius_t, c.plateau, c.envelope_t);
  return v;
}
inline VectorC cutoff_y(const CutoffSpec& c, const Grid& g) {
  VectorC v(g.n);
  for (int i = 0; i < g.n; ++i) v[i] = detail::cutoff_1d(g.x(i) - c.center_y, c.radius_y, c.plateau, c.envelope_y);
  return v;
}

/// Whether t lies where the t-cutoff is identically 1.
inline bool on_plateau_t(const CutoffSpec& c, double t) {
  if (c.plateau <= 0.0) return t == c.center_t;
  return std::abs(t - c.center_t) <= c.plateau * c.radius_t;
}

struct QuasimodeRecipe {
  ModelOperatorSpec spec;
  ScalingParams params;
  double xi2 = 1.0;
  int n_power = 2;
  CutoffSpec cutoff;
  int terms = 0;
};

/// Power of xi2 h^beta dividing the phase: j - k, one less when only b1 carries Im b.
inline int transport_power(const ModelOperatorSpec& s) {
  validate(s);
  bool b0 = !s.b.b0.is_zero();
  if (s.kase == Case::Transversal) return b0 ? 1 : 0;
  if (b0) return s.j - s.k;
  if (!s.b.b1.is_zero()) return s.j - s.k - 1;
  return s.j - s.k;
}

inline QuasimodeRecipe make_recipe(const ModelOperatorSpec& spec, const ScalingParams& params, double xi2 = 1.0,
                                   CutoffSpec cutoff = {}, int terms = 0) {
  validate(spec);
  if (std::abs(xi2) < 1e-3) throw InvalidInput("xi2 must be bounded away from 0 (|xi2| >= 1e-3)");
  if (params.j != spec.j) throw InvalidInput("scaling j does not match the spec");
  if (terms < 0) throw InvalidInput("term count must be nonnegative");
  return {spec, params, xi2, transport_power(spec), cutoff, terms};
}

// ---------------------------------------------------------------------------
// Frequency snapping

struct SnappedFrequency {
  double kappa_target = 0;  // xi2 / h^alpha
  double kappa = 0;         // nearest nonzero multiple of pi/L
  double xi2 = 0;           // kappa h^alpha, used in the amplitude equations
  bool clamped = false;     // target below the first nonzero mode
};

inline SnappedFrequency snap_frequency(double xi2, double h, double alpha, double half_width) {
  SnappedFrequency s;
  double dk = M_PI / half_width;
  s.kappa_target = xi2 / std::pow(h, alpha);
  long m = std::lround(s.kappa_target / dk);
  if (m == 0) {
    m = xi2 > 0 ? 1 : -1;
    s.clamped = true;
  }
  s.kappa = m * dk;
  s.xi2 = s.kappa * std::pow(h, alpha);
  return s;
}

// ---------------------------------------------------------------------------
// Phase integral

/// B0(t) = int_0^t b0/q, B1(t) = int_0^t b1/q, sampled.
struct PhaseIntegral {
  std::vector<double> t;
  std::vector<cplx> B0, B1;
  int n_power = 0;
  double xi2 = 1.0;
  double h = 0.0;

  /// Dominant-coefficient integral (the one that drives the construction).
  const std::vector<cplx>& B() const {
    bool b0 = std::any_of(B0.begin(), B0.end(), [](cplx v) { return v != cplx{0.0}; });
    return b0 ? B0 : B1;
  }
};

namespace detail {

/// int_0^t c(s)/q(s) ds; exact for constant q, 24-point Gauss-Legendre otherwise.
inline cplx integral_over_q(const CoefficientFunction& c, const CoefficientFunction& q, double t) {
  if (q.is_constant()) return c.integral_from_zero(t) / q(0.0);
  static const double x[12] = {0.0640568928626056, 0.1911188674736163, 0.3150426796961634, 0.4337935076260451,
                               0.5454214713888395, 0.6480936519369755, 0.7401241915785544, 0.8200019859739029,
                               0.8864155270044010, 0.9382745520027328, 0.9747285559713095, 0.9951872199970214};
  static const double w[12] = {0.1279381953467522, 0.1258374563468283, 0.1216704729278034, 0.1155056680537256,
                               0.1074442701159656, 0.0976186521041139, 0.0861901615319533, 0.0733464814110803,
                               0.0592985849154368, 0.0442774388174198, 0.0285313886289337, 0.0123412297999872};
  cplx acc = 0.0;
  double half = 0.5 * t;
  for (int i = 0; i < 12; ++i)
    for (double sgn : {-1.0, 1.0}) {
      double s = half + sgn * half * x[i];
      cplx qs = q(s);
      if (std::abs(qs) < 1e-12) throw InvalidInput("quadratic coefficient q vanishes on the support");
      acc += w[i] * c(s) / qs;
    }
  return acc * half;
}

}  // namespace detail

inline PhaseIntegral phase_integral(const SubprincipalSymbol& b, const QuasimodeRecipe& r,
                                    const std::vector<double>& t_samples, double h = 0.0) {
  PhaseIntegral p;
  p.t = t_samples;
  p.n_power = r.n_power;
  p.xi2 = r.xi2;
  p.h = h;
  p.B0.reserve(t_samples.size());
  p.B1.reserve(t_samples.size());
  for (double t : t_samples) {
    p.B0.push_back(detail::integral_over_q(b.b0, r.spec.q, t));
    p.B1.push_back(detail::integral_over_q(b.b1, r.spec.q, t));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Amplitudes

struct AmplitudeSet {
  SnappedFrequency freq;
  std::vector<Field> a;  // a_0 .. a_N
  double h = 0.0;
  double beta = 0.0;

  /// sum_{m <= N} a_m h^{m beta}
  Field partial_sum(int N) const {
    Field s = a.at(0);
    for (int m = 1; m <= N; ++m) s.v += std::pow(h, m * beta) * a.at(m).v;
    return s;
  }
};

/// Per-(recipe, h, grid) machinery: closed-form a_0 and the dense t-operator used
/// for the correction equations L0 a_m = -h^{-beta} L_rest a_{m-1}.
class AmplitudeSolver {
public:
  AmplitudeSolver(const QuasimodeRecipe& r, const Grid& g, double h, bool allow_degenerate = false)
      : r_(r), g_(g), h_(h) {
    if (!(h > 0 && h < 1)) throw InvalidInput("h must lie in (0,1)");
    if (is_factorable(r.spec) && !allow_degenerate)
      throw NoSubprincipalControl(
          "factorable spec: the transport solution degenerates to exp(-i int b), independent of h");
    if (r.n_power < 1 && !allow_degenerate)
      throw NoSubprincipalControl("transport power n < 1: no subprincipal control");
    beta_ = r.params.beta.to_double();
    alpha_ = r.params.alpha.to_double();
    freq_ = snap_frequency(r.xi2, h, alpha_, g.half_width);
    build_coefficient();
  }

  const SnappedFrequency& frequency() const { return freq_; }
  double beta() const { return beta_; }

  /// c(t) such that the transport equation reads D_t(w) + c w = 0 with w = q a.
  const VectorC& transport_coefficient() const { return c_; }

  /// chi * (q(0)/q) * exp(-i int_0^t c)
  Field a0() const {
    const auto& s = r_.spec;
    VectorC ct = cutoff_t(r_.cutoff, g_), cy = cutoff_y(r_.cutoff, g_);
    VectorC prof(g_.n);
    cplx q0 = s.q(r_.cutoff.center_t);
    for (int i = 0; i < g_.n; ++i) prof[i] = ct[i] * (q0 / s.q(g_.x(i))) * std::exp(-cplx(0, 1) * phase_[i]);
    return {g_, prof * cy.transpose()};
  }

  /// Conjugated operator minus its transport part.
  Field rest(const Field& a) const {
    Field full = apply_conjugated_operator(r_.spec, a, h_, beta_, freq_.xi2);
    full.v -= transport_matrix() * a.v;
    return full;
  }

  /// Next correction from the previous amplitude.
  Field next(const Field& prev) const {
    ensure_factorized();
    MatrixC rhs = -std::pow(h_, -beta_) * rest(prev).v;
    MatrixC x = solve(rhs);
    if (r_.cutoff.envelope_y > 0) x = filter_y(x);
    return {g_, std::move(x)};
  }

  AmplitudeSet amplitudes(int N) const {
    AmplitudeSet set;
    set.freq = freq_;
    set.h = h_;
    set.beta = beta_;
    set.a.push_back(a0());
    const double n0 = set.a[0].norm();
    for (int m = 1; m <= N; ++m) {
      set.a.push_back(next(set.a.back()));
      double size = set.a.back().norm() * std::pow(h_, m * beta_);
      if (!std::isfinite(size) || size > 1e8 * n0)
        throw IllConditioned("amplitude correction " + std::to_string(m) + " blew up at h = " + std::to_string(h_));
    }
    return set;
  }

  /// Dense n x n transport operator in t: D_t (q xi2^j .) + diag(c q xi2^j).
  const MatrixC& transport_matrix() const {
    if (M_.size() == 0) {
      const auto& s = r_.spec;
      double xj = std::pow(freq_.xi2, s.kase == Case::Transversal ? 1 : s.j);
      VectorC qv = sample(s.q, g_) * xj;
      MatrixC D1 = apply_multiplier(MatrixC::Identity(g_.n, g_.n), 0, detail::derivative_symbol(g_, 1));
      M_ = D1 * qv.asDiagonal();
      for (int i = 0; i < g_.n; ++i) M_(i, i) += c_[i] * qv[i];
    }
    return M_;
  }

private:
  void build_coefficient() {
    const auto& s = r_.spec;
    const double xs = freq_.xi2, b = beta_, h = h_;
    const int j = s.j;
    cplx k0, k1;  // c = (k0 b0 + k1 b1 + ks) / q
    cplx ks = 0.0;
    if (s.kase == Case::Tangential) {
      double pk = std::pow(h, (s.k - j) * b);
      k0 = pk * std::pow(xs, s.k - j);
      k1 = pk * std::pow(h, b) * std::pow(xs, s.k + 1 - j);
      ks = -s.shift * std::pow(h, -1.0 - j * b) / std::pow(xs, j);
    } else {
      k0 = std::pow(h, -b) / xs;
      k1 = 1.0;
      ks = -s.shift * std::pow(h, -1.0 - b) / xs;
    }
    c_.resize(g_.n);
    phase_.resize(g_.n);
    const double tc = r_.cutoff.center_t;
    CoefficientFunction one = CoefficientFunction::constant(1.0);
    for (int i = 0; i < g_.n; ++i) {
      double t = g_.x(i);
      cplx q = s.q(t);
      c_[i] = (k0 * s.b.b0(t) + k1 * s.b.b1(t) + ks) / q;
      phase_[i] = k0 * (detail::integral_over_q(s.b.b0, s.q, t) - detail::integral_over_q(s.b.b0, s.q, tc)) +
                  k1 * (detail::integral_over_q(s.b.b1, s.q, t) - detail::integral_over_q(s.b.b1, s.q, tc)) +
                  ks * (detail::integral_over_q(one, s.q, t) - detail::integral_over_q(one, s.q, tc));
    }
  }

  void ensure_factorized() const {
    if (svd_) return;
    svd_ = std::make_shared<Eigen::BDCSVD<MatrixC>>(transport_matrix(), Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd_->singularValues();
    keep_ = static_cast<int>(g_.n) - 1;  // the smallest triplet spans the discrete transport kernel
    while (keep_ > 0 && sv[keep_ - 1] < sv[0] * 1e-13) --keep_;
    i0_ = g_.index_of(r_.cutoff.center_t);
  }

  /// Least-squares solve on the well-conditioned singular subspace, then fix x(t0, .) = 0
  /// with the near-kernel vector.
  MatrixC solve(const MatrixC& rhs) const {
    const auto& U = svd_->matrixU();
    const auto& V = svd_->matrixV();
    const auto& sv = svd_->singularValues();
    MatrixC c = U.leftCols(keep_).adjoint() * rhs;
    for (int i = 0; i < keep_; ++i) c.row(i) /= sv[i];
    MatrixC x = V.leftCols(keep_) * c;
    VectorC nv = V.col(g_.n - 1);
    if (std::abs(nv[i0_]) > 1e-300) x -= nv * (x.row(i0_) / nv[i0_]);
    return x;
  }

  /// Drops transverse modes the y-envelope cannot carry above round-off.
  MatrixC filter_y(const MatrixC& x) const {
    double kmax = std::sqrt(2.0 * std::log(1e16)) / r_.cutoff.envelope_y;
    std::vector<cplx> m(g_.n);
    for (int i = 0; i < g_.n; ++i) m[i] = std::abs(g_.wavenumber(i)) > kmax ? 0.0 : 1.0;
    return apply_multiplier(x, 1, m);
  }

  QuasimodeRecipe r_;
  Grid g_;
  double h_, beta_ = 0, alpha_ = 0;
  SnappedFrequency freq_;
  VectorC c_;
  std::vector<cplx> phase_;
  mutable MatrixC M_;
  mutable std::shared_ptr<Eigen::BDCSVD<MatrixC>> svd_;
  mutable int keep_ = 0;
  mutable int i0_ = 0;
};

/// Closed-form leading amplitude; refuses factorable specs.
inline Field transport_solution(const QuasimodeRecipe& r, const Grid& g, double h) {
  return AmplitudeSolver(r, g, h).a0();
}

/// Next amplitude a_j from a_0..a_{j-1}.
inline Field higher_amplitudes(const QuasimodeRecipe& r, const Grid& g, double h, const std::vector<Field>& a_prev) {
  if (a_prev.empty()) throw InvalidInput("a_prev must contain a_0");
  return AmplitudeSolver(r, g, h).next(a_prev.back());
}

/// h-independent amplitude exp(-i int b) used to probe factorable specs.
inline AmplitudeSolver degenerate_solver(const QuasimodeRecipe& r, const Grid& g, double h) {
  return AmplitudeSolver(r, g, h, true);
}

struct Quasimode {
  Field v;
  SnappedFrequency freq;
  std::vector<std::string> warnings;
};

inline void check_resolution(const SnappedFrequency& f, const Grid& g) {
  if (std::abs(f.kappa) >= g.nyquist()) {
    int need = g.n;
    while (need * M_PI / (2.0 * g.half_width) <= std::abs(f.kappa)) need *= 2;
    throw ResolutionError("oscillation frequency " + std::to_string(f.kappa) + " is not below the Nyquist limit " +
                          std::to_string(g.nyquist()) + "; need at least " + std::to_string(need) +
                          " points per axis");
  }
}

/// Multiplies an amplitude by the grid-exact plane wave e^{i kappa y}.
inline Field modulate(const Field& a, const SnappedFrequency& f) {
  const Grid& g = a.grid;
  VectorC wave(g.n);
  for (int i = 0; i < g.n; ++i) wave[i] = std::exp(cplx(0, f.kappa * g.x(i)));
  return {g, a.v * wave.asDiagonal()};
}

inline Quasimode build_quasimode(const QuasimodeRecipe& r, const Grid& g, double h) {
  AmplitudeSolver solver(r, g, h);
  Quasimode q;
  q.freq = solver.frequency();
  check_resolution(q.freq, g);
  if (q.freq.clamped) q.warnings.push_back("xi2/h^alpha below the first grid mode; snapped to the smallest nonzero mode");
  q.v = modulate(solver.amplitudes(r.terms).partial_sum(r.terms), q.freq);
  return q;
}

struct NormBoundsReport {
  bool upper_ok = false;
  bool lower_ok = false;
  double measured_norm = 0.0;
  double lower_bound = 0.0;
};

inline NormBoundsReport norm_bounds_check(double measured, const ScalingParams& p, double h, double C = 10.0,
                                          double c = 1e-3) {
  NormBoundsReport rep;
  rep.measured_norm = measured;
  rep.lower_bound = c * std::pow(h, (p.alpha.to_double() + p.beta.to_double()) / 2.0);
  rep.upper_ok = rep.measured_norm <= C;
  rep.lower_ok = rep.measured_norm >= rep.lower_bound;
  return rep;
}

inline NormBoundsReport norm_bounds_check(const Field& v, const ScalingParams& p, double h, double C = 10.0,
                                          double c = 1e-3) {
  return norm_bounds_check(v.norm(), p, h, C, c);
}

}  // namespace sqm
