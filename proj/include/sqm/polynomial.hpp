#pragma once
// Complex polynomials in t with ascending coefficients.

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace sqm {

using cplx = std::complex<double>;

inline constexpr int kMaxDegree = 8;

class CoefficientFunction {
public:
  CoefficientFunction() : c_{cplx{0.0}} {}
  CoefficientFunction(std::vector<cplx> coeffs) : c_(std::move(coeffs)) {
    if (c_.empty()) c_.push_back(0.0);
    if (degree() > kMaxDegree) throw std::invalid_argument("coefficient polynomial degree exceeds 8");
  }
  static CoefficientFunction constant(cplx v) { return CoefficientFunction({v}); }

  const std::vector<cplx>& coeffs() const { return c_; }
  int degree() const { return static_cast<int>(c_.size()) - 1; }

  cplx operator()(double t) const {
    cplx acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * t + *it;
    return acc;
  }
  double re(double t) const { return (*this)(t).real(); }
  double im(double t) const { return (*this)(t).imag(); }

  /// Largest coefficient modulus; used as the scale for "identically zero" tests.
  double scale() const {
    double s = 0.0;
    for (auto& v : c_) s = std::max(s, std::abs(v));
    return s;
  }
  bool is_zero(double tol = 0.0) const {
    return std::all_of(c_.begin(), c_.end(), [&](cplx v) { return std::abs(v) <= tol; });
  }
  bool is_constant() const {
    return std::all_of(c_.begin() + 1, c_.end(), [](cplx v) { return v == cplx{0.0}; });
  }

  CoefficientFunction real_part() const { return map([](cplx v) { return cplx{v.real(), 0.0}; }); }
  CoefficientFunction imag_part() const { return map([](cplx v) { return cplx{v.imag(), 0.0}; }); }

  CoefficientFunction derivative() const {
    if (c_.size() == 1) return {};
    std::vector<cplx> d(c_.size() - 1);
    for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = c_[i] * static_cast<double>(i);
    return CoefficientFunction(std::move(d));
  }

  /// Antiderivative vanishing at t = 0 (degree may reach 9, so no degree guard).
  std::vector<cplx> antiderivative_coeffs() const {
    std::vector<cplx> a(c_.size() + 1, 0.0);
    for (std::size_t i = 0; i < c_.size(); ++i) a[i + 1] = c_[i] / static_cast<double>(i + 1);
    return a;
  }
  cplx integral_from_zero(double t) const {
    auto a = antiderivative_coeffs();
    cplx acc = 0.0;
    for (auto it = a.rbegin(); it != a.rend(); ++it) acc = acc * t + *it;
    return acc;
  }

  /// Returns g with g(t) = f(t + s).
  CoefficientFunction shifted(double s) const {
    std::vector<cplx> out(c_.size(), 0.0);
    // Horner in polynomial form: out = (...(c_n (t+s) + c_{n-1})(t+s) + ...)
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) {
      std::vector<cplx> next(c_.size(), 0.0);
      for (std::size_t i = 0; i + 1 < out.size(); ++i) {
        next[i + 1] += out[i];
        next[i] += out[i] * s;
      }
      next[0] += *it;
      out = std::move(next);
    }
    return CoefficientFunction(std::move(out));
  }

  CoefficientFunction scaled(cplx r) const { return map([r](cplx v) { return v * r; }); }

  friend bool operator==(const CoefficientFunction&, const CoefficientFunction&) = default;

private:
  template <class F>
  CoefficientFunction map(F f) const {
    std::vector<cplx> o(c_.size());
    std::transform(c_.begin(), c_.end(), o.begin(), f);
    return CoefficientFunction(std::move(o));
  }
  std::vector<cplx> c_;
};

}  // namespace sqm
