#pragma once
// Exact bookkeeping of h-exponents of the form c + b*beta.

#include <algorithm>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sqm/errors.hpp"
#include "sqm/model_symbols.hpp"
#include "sqm/rational.hpp"

namespace sqm {

struct HExponent {
  Rational const_part;
  Rational beta_part;

  double eval(double beta) const { return const_part.to_double() + beta_part.to_double() * beta; }
  Rational eval(Rational beta) const { return const_part + beta_part * beta; }

  friend HExponent operator+(HExponent a, HExponent b) {
    return {a.const_part + b.const_part, a.beta_part + b.beta_part};
  }
  friend bool operator==(const HExponent&, const HExponent&) = default;

  std::string str() const {
    std::ostringstream os;
    bool c = const_part != Rational(0);
    if (c) os << const_part;
    if (beta_part != Rational(0)) {
      if (beta_part < Rational(0)) os << "-";
      else if (c) os << "+";
      Rational m = beta_part < Rational(0) ? -beta_part : beta_part;
      if (m != Rational(1)) os << m;
      os << "b";
    }
    if (!c && beta_part == Rational(0)) os << "0";
    return os.str();
  }
  friend std::ostream& operator<<(std::ostream& os, const HExponent& e) { return os << e.str(); }
};

struct ScalingParams {
  int j = 2;
  Rational beta, alpha, gamma;
};

inline ScalingParams solve_scaling(int j, Rational beta) {
  if (j < 1 || j > 3) throw InvalidScaling("j must be in 1..3 (got " + std::to_string(j) + ")");
  Rational upper(1, j + 2);
  if (!(beta > Rational(0) && beta < upper))
    throw InvalidScaling("beta = " + beta.str() + " is outside the admissible range (0, " + upper.str() +
                         ") for j = " + std::to_string(j) + ", where alpha = 1-(j+2)beta must stay positive");
  ScalingParams p;
  p.j = j;
  p.beta = beta;
  p.alpha = Rational(1) - Rational(j + 2) * beta;
  p.gamma = Rational(j + 1) * beta;
  return p;
}

/// Order of a remainder term inside the factored prefactor h^{1+j beta}.
inline HExponent remainder_order(int kappa, int lambda, int mu, int j) {
  return {Rational(lambda + mu - 1), Rational(kappa - (j + 1) * mu - j)};
}

struct TermOrder {
  std::string label;
  HExponent raw;   // before the transport solution is substituted
  HExponent post;  // after substitution
  bool cancelled = false;  // removed by the transport equation
};

using TermTable = std::vector<TermOrder>;

/// Hard-coded expansion of the conjugated operator for the supported model families.
inline TermTable expansion_term_orders(const ModelOperatorSpec& s, const ScalingParams& p) {
  validate(s);
  const bool tangential2 = s.kase == Case::Tangential && s.j == 2 && p.j == 2;
  const bool transversal1 = s.kase == Case::Transversal && p.j == 1;
  if (!tangential2 && !transversal1)
    throw Unsupported("term tables exist for tangential j=2 and transversal j=1 only");

  const int j = p.j;
  const bool b1_active = s.b.b0.is_zero() && !s.b.b1.is_zero();
  // transport power n: each D1 landing on the amplitude costs -n beta
  const int n = j - s.k - (b1_active ? 1 : 0);
  const HExponent alpha{Rational(1), Rational(-(j + 2))};
  const HExponent d1cost{Rational(0), Rational(-n)};
  const HExponent taylor{Rational(0), Rational(1)};

  TermTable t;
  const HExponent bterm{Rational(0), Rational(n == 0 ? 0 : -n)};
  t.push_back({"b_term", bterm, bterm, true});
  if (s.kase == Case::Tangential) {
    t.push_back({"xi2^2 D1", {}, {}, true});
    HExponent d11{Rational(1), Rational(-j)};
    t.push_back({"D1^2", d11, d11 + d1cost + d1cost, false});
    t.push_back({"xi2 D1 D2", alpha, alpha + d1cost, false});
    HExponent two_alpha = alpha + alpha;
    t.push_back({"D1 D2^2", two_alpha, two_alpha + d1cost, false});
    if (b1_active) {
      HExponent b1d2 = bterm + alpha;
      t.push_back({"b1 D2", b1d2, b1d2, false});
    }
  } else {
    t.push_back({"xi2 D1", {}, {}, true});
    HExponent a1d1{Rational(1), Rational(-1)};
    t.push_back({"a1 D1", a1d1, a1d1 + d1cost, false});
    t.push_back({"D1 D2", alpha, alpha + d1cost, false});
    t.push_back({"A2 D2", alpha, alpha, false});
  }
  t.push_back({"taylor_remainder", taylor, taylor, false});
  return t;
}

struct DominantOrder {
  HExponent order;
  std::vector<std::string> labels;  // all minimizers
};

/// Minimum exponent at beta_value; with post_substitution the cancelled terms are skipped.
inline DominantOrder dominant_order(const TermTable& table, Rational beta_value, bool post_substitution = true) {
  if (table.empty()) throw InvalidInput("empty term table");
  if (!(beta_value > Rational(0) && beta_value < Rational(1))) throw InvalidInput("beta must lie in (0,1)");
  DominantOrder d;
  bool have = false;
  Rational best;
  for (auto& row : table) {
    if (post_substitution && row.cancelled) continue;
    const HExponent& e = post_substitution ? row.post : row.raw;
    Rational v = e.eval(beta_value);
    if (!have || v < best) {
      have = true;
      best = v;
      d.order = e;
      d.labels = {row.label};
    } else if (v == best) {
      d.labels.push_back(row.label);
    }
  }
  if (!have) throw InvalidInput("every term is cancelled");
  return d;
}

inline std::string term_table_csv(const TermTable& table, Rational beta_value) {
  std::ostringstream os;
  os << "label,const_part,beta_part,evaluated,raw_const_part,raw_beta_part,cancelled\n";
  for (auto& r : table) {
    os << r.label << ',' << r.post.const_part << ',' << r.post.beta_part << ','
       << r.post.eval(beta_value.to_double()) << ',' << r.raw.const_part << ',' << r.raw.beta_part << ','
       << (r.cancelled ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace sqm
