#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "sqm/exponent_calculus.hpp"

using namespace sqm;

namespace {
ModelOperatorSpec tangential(int j, int k) {
  ModelOperatorSpec s;
  s.kase = Case::Tangential;
  s.j = j;
  s.k = k;
  s.b.b0 = CoefficientFunction({0.0, cplx(0.0, -1.0)});
  return s;
}
const TermOrder& row(const TermTable& t, const std::string& label) {
  auto it = std::find_if(t.begin(), t.end(), [&](auto& r) { return r.label == label; });
  REQUIRE(it != t.end());
  return *it;
}
}  // namespace

TEST_CASE("scaling exponents") {
  auto p = solve_scaling(2, Rational(1, 8));
  CHECK(p.alpha == Rational(1, 2));
  CHECK(p.gamma == Rational(3, 8));
  auto q = solve_scaling(1, Rational(1, 4));
  CHECK(q.alpha == Rational(1, 4));
  CHECK(q.gamma == Rational(1, 2));
  CHECK_THROWS_AS(solve_scaling(2, Rational(1, 4)), InvalidScaling);
  CHECK_THROWS_AS(solve_scaling(2, Rational(1, 3)), InvalidScaling);
  CHECK_THROWS_AS(solve_scaling(2, Rational(0)), InvalidScaling);
  try {
    solve_scaling(2, Rational(1, 3));
  } catch (const InvalidScaling& e) {
    CHECK(std::string(e.what()).find("(0, 1/4)") != std::string::npos);
  }
}

TEST_CASE("scaling identities hold for every admissible beta") {
  for (int j = 1; j <= 3; ++j)
    for (int den = j + 3; den < 40; ++den) {
      auto p = solve_scaling(j, Rational(1, den));
      CHECK(p.alpha + Rational(j + 2) * p.beta == Rational(1));
      CHECK(p.gamma == Rational(j + 1) * p.beta);
      CHECK(p.alpha > Rational(0));
    }
}

TEST_CASE("remainder orders") {
  CHECK(remainder_order(0, 2, 0, 2).str() == "1-2b");
  CHECK(remainder_order(0, 1, 1, 2).str() == "1-5b");
  CHECK(remainder_order(1, 0, 0, 2).str() == "-1-b");
  auto e = remainder_order(0, 1, 1, 2);
  CHECK(e.const_part == Rational(1));
  CHECK(e.beta_part == Rational(-5));
}

TEST_CASE("remainder order is additive in (kappa, lambda, mu)") {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> U(0, 6);
  for (int i = 0; i < 50; ++i) {
    int k1 = U(rng), l1 = U(rng), m1 = U(rng), k2 = U(rng), l2 = U(rng), m2 = U(rng);
    auto sum = remainder_order(k1 + k2, l1 + l2, m1 + m2, 2);
    auto parts = remainder_order(k1, l1, m1, 2) + remainder_order(k2, l2, m2, 2);
    // the "-1" and "-j" offsets appear once in sum, twice in parts
    CHECK(sum.const_part == parts.const_part + Rational(1));
    CHECK(sum.beta_part == parts.beta_part + Rational(2));
  }
}

TEST_CASE("tangential j=2 term table") {
  auto t = expansion_term_orders(tangential(2, 0), solve_scaling(2, Rational(1, 8)));
  CHECK(row(t, "b_term").cancelled);
  CHECK(row(t, "xi2^2 D1").cancelled);
  CHECK(row(t, "D1^2").post.str() == "1-6b");
  CHECK(row(t, "xi2 D1 D2").post.str() == "1-6b");
  CHECK(row(t, "D1 D2^2").post.str() == "2-10b");
  CHECK(row(t, "taylor_remainder").post.str() == "b");
  auto d = dominant_order(t, Rational(1, 8));
  CHECK(d.labels == std::vector<std::string>{"taylor_remainder"});
  CHECK(d.order.eval(Rational(1, 8)) == Rational(1, 8));
}

TEST_CASE("dominant order at the crossover beta = 1/7 is a tie") {
  auto t = expansion_term_orders(tangential(2, 0), solve_scaling(2, Rational(1, 8)));
  auto d = dominant_order(t, Rational(1, 7));
  CHECK(d.labels.size() == 3);
  CHECK(d.order.eval(Rational(1, 7)) == Rational(1, 7));
  auto d2 = dominant_order(t, Rational(1, 5));
  CHECK(d2.order.eval(Rational(1, 5)) == Rational(-1, 5));
  CHECK_THROWS_AS(dominant_order({}, Rational(1, 8)), InvalidInput);
}

TEST_CASE("surviving orders dominate beta for beta <= 1/7") {
  auto t = expansion_term_orders(tangential(2, 0), solve_scaling(2, Rational(1, 8)));
  for (int den = 7; den <= 60; ++den) {
    Rational b(1, den);
    for (auto& r : t)
      if (!r.cancelled) CHECK(r.post.eval(b) >= b);
  }
}

TEST_CASE("transversal j=1 term table") {
  ModelOperatorSpec s;
  s.kase = Case::Transversal;
  s.j = 1;
  s.k = 0;
  s.b.b0 = CoefficientFunction({0.0, cplx(0.0, -1.0)});
  s.a1 = CoefficientFunction({1.0});
  auto t = expansion_term_orders(s, solve_scaling(1, Rational(1, 8)));
  CHECK(row(t, "a1 D1").post.str() == "1-2b");
  CHECK(row(t, "D1 D2").post.str() == "1-4b");
  CHECK(row(t, "A2 D2").post.str() == "1-3b");
}

TEST_CASE("unsupported families and CSV export") {
  CHECK_THROWS_AS(expansion_term_orders(tangential(3, 0), solve_scaling(3, Rational(1, 8))), Unsupported);
  auto t = expansion_term_orders(tangential(2, 0), solve_scaling(2, Rational(1, 8)));
  auto csv = term_table_csv(t, Rational(1, 8));
  CHECK(csv.rfind("label,const_part,beta_part,evaluated", 0) == 0);
  CHECK(csv.find("D1^2,1,-6,0.25") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(t.size()) + 1);
}
