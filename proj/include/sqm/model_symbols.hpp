#pragma once
// Model operator specifications and the qualitative sign/factorization tests.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sqm/errors.hpp"
#include "sqm/polynomial.hpp"

namespace sqm {

enum class Case { Transversal, Tangential };

inline const char* to_string(Case c) { return c == Case::Transversal ? "transversal" : "tangential"; }

/// b(t, xi2) = b0(t) + b1(t) xi2.
struct SubprincipalSymbol {
  CoefficientFunction b0;
  CoefficientFunction b1;

  double alpha(double t, double xi2) const { return (b0(t) + b1(t) * xi2).real(); }
  double beta(double t, double xi2) const { return (b0(t) + b1(t) * xi2).imag(); }
  double scale() const { return std::max(b0.scale(), b1.scale()); }
  bool is_zero() const { return b0.is_zero() && b1.is_zero(); }
};

/// Tangential:  P = hD1 (hD1 + q (hD2)^j) + h (b0 + b1 hD2) (hD2)^k - shift
/// Transversal: P = h^2 D1 D2 + a1 h^2 D1 + A2 h^2 D2 + h R - shift,
///              with R = b0 and A2 = b1; j = 1, k = 0.
struct ModelOperatorSpec {
  Case kase = Case::Tangential;
  int j = 2;
  int k = 0;
  CoefficientFunction q = CoefficientFunction::constant(1.0);
  SubprincipalSymbol b;
  cplx shift = 0.0;
  CoefficientFunction a1;  // transversal only

  const CoefficientFunction& R() const { return b.b0; }
  const CoefficientFunction& A2() const { return b.b1; }
};

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
};

inline void validate(const ModelOperatorSpec& s) {
  if (s.kase == Case::Transversal) {
    if (s.j != 1 || s.k != 0) throw InvalidInput("transversal spec requires j = 1 and k = 0");
    if (!s.q.is_constant() || s.q(0.0) != cplx{1.0})
      throw InvalidInput("transversal spec has no quadratic coefficient q");
  } else {
    if (s.j < 1 || s.j > 3) throw InvalidInput("tangential j must be in 1..3");
    if (s.k < 0 || s.k > 4) throw InvalidInput("k must be in 0..4");
    if (!s.a1.is_zero()) throw InvalidInput("a1 is only meaningful for the transversal case");
  }
}

// ---------------------------------------------------------------------------
// Sign changes

enum class Direction { PlusToMinus, MinusToPlus };

struct Crossing {
  double t;
  Direction direction;
};

struct SignChangeReport {
  bool has_change = false;
  std::optional<double> t_cross;
  Direction direction = Direction::PlusToMinus;
  double t_max = 0.0;
  bool identically_zero = false;
  std::vector<Crossing> crossings;  // all crossings, ascending

  bool has_plus_to_minus() const {
    for (auto& c : crossings)
      if (c.direction == Direction::PlusToMinus) return true;
    return false;
  }
};

inline constexpr double kZeroTol = 1e-12;

namespace detail {

inline double bisect_root(const std::function<double(double)>& f, double a, double b) {
  double fa = f(a);
  for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
    double m = 0.5 * (a + b);
    double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm > 0) == (fa > 0)) { a = m; fa = fm; } else { b = m; }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Scans f on a uniform grid; crossings are refined by bisection to 1e-12.
/// `scale` sets the identically-zero threshold (kZeroTol * scale).
inline SignChangeReport detect_sign_change(const std::function<double(double)>& f, Interval iv,
                                           int samples, double scale = 1.0) {
  if (!(iv.lo < iv.hi)) throw InvalidInput("degenerate interval");
  if (samples < 16) throw InvalidInput("need at least 16 samples");
  const int m = samples;
  const double dt = (iv.hi - iv.lo) / m;
  std::vector<double> t(m + 1), v(m + 1);
  double vmax = 0.0;
  for (int i = 0; i <= m; ++i) {
    t[i] = iv.lo + dt * i;
    v[i] = f(t[i]);
    vmax = std::max(vmax, std::abs(v[i]));
  }
  SignChangeReport rep;
  const double tol = kZeroTol * std::max(scale, 1e-300);
  if (vmax < tol) {
    rep.identically_zero = true;
    rep.t_max = iv.lo;
    return rep;
  }

  int last = -1;
  for (int i = 0; i <= m; ++i) {
    if (std::abs(v[i]) <= tol) continue;
    if (last >= 0 && (v[i] > 0) != (v[last] > 0)) {
      double r = detail::bisect_root(f, t[last], t[i]);
      rep.crossings.push_back({r, v[last] > 0 ? Direction::PlusToMinus : Direction::MinusToPlus});
    }
    last = i;
  }
  if (!rep.crossings.empty()) {
    rep.has_change = true;
    rep.t_cross = rep.crossings.front().t;
    rep.direction = rep.crossings.front().direction;
  }

  // running integral (composite trapezoid) and its argmax
  double run = 0.0, best = 0.0;
  int ibest = 0;
  for (int i = 1; i <= m; ++i) {
    run += 0.5 * dt * (v[i - 1] + v[i]);
    if (run > best) { best = run; ibest = i; }
  }
  rep.t_max = t[ibest];
  // an interior maximum sits on a +/- crossing; snap to the refined root
  for (auto& c : rep.crossings)
    if (c.direction == Direction::PlusToMinus && std::abs(c.t - rep.t_max) <= dt) rep.t_max = c.t;
  return rep;
}

inline SignChangeReport detect_sign_change(const CoefficientFunction& f, Interval iv, int samples) {
  return detect_sign_change([&](double t) { return f.re(t); }, iv, samples, std::max(f.scale(), 1.0));
}

// ---------------------------------------------------------------------------
// Conditions

enum class Condition { BetaCondition, DxiBetaCondition, NoQuasimodeCondition, AlphaCaseOpen };

inline const char* to_string(Condition c) {
  switch (c) {
    case Condition::BetaCondition: return "BetaCondition";
    case Condition::DxiBetaCondition: return "DxiBetaCondition";
    case Condition::NoQuasimodeCondition: return "NoQuasimodeCondition";
    case Condition::AlphaCaseOpen: return "AlphaCaseOpen";
  }
  return "?";
}

namespace detail {

inline bool im_identically_zero(const CoefficientFunction& c, Interval iv, double scale) {
  return detect_sign_change(c.imag_part(), iv, 512).identically_zero ||
         c.imag_part().scale() <= kZeroTol * std::max(scale, 1e-300);
}

}  // namespace detail

/// Which coefficient carries the imaginary part driving the construction.
enum class ActiveCoefficient { B0, B1, None };

inline ActiveCoefficient active_coefficient(const SubprincipalSymbol& b, Interval iv) {
  double s = std::max(b.scale(), 1.0);
  if (!detail::im_identically_zero(b.b0, iv, s)) return ActiveCoefficient::B0;
  if (!detail::im_identically_zero(b.b1, iv, s)) return ActiveCoefficient::B1;
  return ActiveCoefficient::None;
}

/// Translates b in t so the maximum of the running integral of Im(active coefficient) is at 0.
inline SubprincipalSymbol normalize_origin(const SubprincipalSymbol& b, Interval iv) {
  auto act = active_coefficient(b, iv);
  if (act == ActiveCoefficient::None)
    throw ConditionNotMet("beta condition not met: Im b0 and Im b1 vanish identically");
  const auto& c = act == ActiveCoefficient::B0 ? b.b0 : b.b1;
  const char* name = act == ActiveCoefficient::B0 ? "beta condition" : "dxi-beta condition";
  auto rep = detect_sign_change(c.imag_part(), iv, 2048);
  if (!rep.has_plus_to_minus())
    throw ConditionNotMet(std::string(name) + " not met: imaginary part has no +/- sign change on the interval");
  double s = rep.t_max;
  return {b.b0.shifted(s), b.b1.shifted(s)};
}

inline bool is_factorable(const ModelOperatorSpec& s) {
  if (s.kase == Case::Tangential) return s.k == s.j;
  return s.R().is_zero(kZeroTol * std::max(s.b.scale(), 1.0));
}

inline Condition classify_condition(const ModelOperatorSpec& s, Interval iv) {
  validate(s);
  if (is_factorable(s)) return Condition::NoQuasimodeCondition;
  double scale = std::max(s.b.scale(), 1.0);
  bool im0 = detail::im_identically_zero(s.b.b0, iv, scale);
  bool im1 = detail::im_identically_zero(s.b.b1, iv, scale);
  if (!im0) {
    auto rep = detect_sign_change(s.b.b0.imag_part(), iv, 2048);
    return rep.has_plus_to_minus() ? Condition::BetaCondition : Condition::NoQuasimodeCondition;
  }
  if (!im1) {
    auto rep = detect_sign_change(s.b.b1.imag_part(), iv, 2048);
    return rep.has_plus_to_minus() ? Condition::DxiBetaCondition : Condition::NoQuasimodeCondition;
  }
  if (!s.b.b0.real_part().is_zero(kZeroTol * scale) || !s.b.b1.real_part().is_zero(kZeroTol * scale))
    return Condition::AlphaCaseOpen;
  return Condition::NoQuasimodeCondition;
}

// ---------------------------------------------------------------------------
// Factorization

/// One term c * h^hp * M * (hD2)^d2 where M is mult(t) D1^d1, or D1^d1 mult(t) when deriv_outer.
struct OperatorTerm {
  cplx coeff = 1.0;
  int h_power = 0;
  CoefficientFunction mult = CoefficientFunction::constant(1.0);
  int d1 = 0;
  bool deriv_outer = false;
  int d2 = 0;
};

struct OperatorDescription {
  std::string text;
  std::vector<OperatorTerm> terms;
};

enum class RequiredCondition { Beta, DxiBeta, HigherDerivative, None };

inline const char* to_string(RequiredCondition r) {
  switch (r) {
    case RequiredCondition::Beta: return "Beta";
    case RequiredCondition::DxiBeta: return "DxiBeta";
    case RequiredCondition::HigherDerivative: return "HigherDerivative";
    case RequiredCondition::None: return "None";
  }
  return "?";
}

struct FactorabilityVerdict {
  bool factorable = false;
  int n = 0;  // power of xi2 in the quadratic part minus the power attached to B
  OperatorDescription p1, p2;
  RequiredCondition required_condition = RequiredCondition::None;
};

inline std::pair<OperatorDescription, OperatorDescription> build_factors(const ModelOperatorSpec& s) {
  validate(s);
  if (!is_factorable(s)) throw PreconditionError("spec is not factorable");
  OperatorDescription p1, p2;
  if (s.kase == Case::Transversal) {
    // P = (h(hD2) + h^2 a1)(D1 + A2) modulo h^2 a1 A2
    p1.text = "D1 + A2(t)";
    p1.terms = {{1.0, 0, CoefficientFunction::constant(1.0), 1, false, 0}, {1.0, 0, s.A2(), 0, false, 0}};
    p2.text = "h^2 (D2 + a1(t))";
    p2.terms = {{1.0, 1, CoefficientFunction::constant(1.0), 0, false, 1}, {1.0, 2, s.a1, 0, false, 0}};
    return {p1, p2};
  }
  if (!s.q.is_constant()) throw Unsupported("factorization requires a constant quadratic coefficient q");
  cplx c = s.q(0.0);
  if (std::abs(c) < 1e-12) throw InvalidInput("quadratic coefficient q vanishes");
  // B = b0 + b1 hD2; P1 = h(D1 + B/q), P2 = h(D1 - 2B/q) + q (hD2)^j
  auto b0 = s.b.b0.scaled(1.0 / c), b1 = s.b.b1.scaled(1.0 / c);
  auto one = CoefficientFunction::constant(1.0);
  p1.text = "h (D1 + B)";
  p1.terms = {{1.0, 1, one, 1, false, 0}, {1.0, 1, b0, 0, false, 0}, {1.0, 1, b1, 0, false, 1}};
  p2.text = "h (D1 - 2B) + q (hD2)^" + std::to_string(s.j);
  p2.terms = {{1.0, 1, one, 1, false, 0},
              {-2.0, 1, b0, 0, false, 0},
              {-2.0, 1, b1, 0, false, 1},
              {c, 0, one, 0, false, s.j}};
  return {p1, p2};
}

inline FactorabilityVerdict classify_factorability(const ModelOperatorSpec& s) {
  validate(s);
  FactorabilityVerdict v;
  v.n = s.j - s.k;
  v.factorable = is_factorable(s);
  if (v.factorable) {
    if (s.kase == Case::Tangential && !s.q.is_constant()) {
      v.p1.text = v.p2.text = "(non-constant q: factors not built)";
    } else {
      auto [p1, p2] = build_factors(s);
      v.p1 = std::move(p1);
      v.p2 = std::move(p2);
    }
    return v;
  }
  if (v.n >= 1) {
    double scale = std::max(s.b.scale(), 1.0);
    if (!s.b.b0.imag_part().is_zero(kZeroTol * scale)) v.required_condition = RequiredCondition::Beta;
    else if (!s.b.b1.imag_part().is_zero(kZeroTol * scale)) v.required_condition = RequiredCondition::DxiBeta;
    else v.required_condition = RequiredCondition::HigherDerivative;
  }
  return v;
}

}  // namespace sqm
