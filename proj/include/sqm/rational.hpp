#pragma once
// Exact rational numbers over 64-bit integers.

#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace sqm {

class Rational {
public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t n) : num_(n), den_(1) {}
  Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) { normalize(); }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  /// Parses "p/q", "p" or a terminating decimal like "0.125".
  static Rational parse(const std::string& s) {
    auto slash = s.find('/');
    try {
      if (slash != std::string::npos)
        return {std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1))};
      auto dot = s.find('.');
      if (dot == std::string::npos) return Rational(std::stoll(s));
      std::string digits = s.substr(0, dot) + s.substr(dot + 1);
      std::int64_t den = 1;
      for (std::size_t i = dot + 1; i < s.size(); ++i) den *= 10;
      return {std::stoll(digits), den};
    } catch (const std::logic_error&) {
      throw std::invalid_argument("not a rational number: '" + s + "'");
    }
  }

  std::string str() const {
    return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
  }

  friend Rational operator+(Rational a, Rational b) {
    return {a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_};
  }
  friend Rational operator-(Rational a, Rational b) {
    return {a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_};
  }
  friend Rational operator*(Rational a, Rational b) { return {a.num_ * b.num_, a.den_ * b.den_}; }
  friend Rational operator/(Rational a, Rational b) {
    if (b.num_ == 0) throw std::domain_error("rational division by zero");
    return {a.num_ * b.den_, a.den_ * b.num_};
  }
  Rational operator-() const { return {-num_, den_}; }
  Rational& operator+=(Rational o) { return *this = *this + o; }
  Rational& operator-=(Rational o) { return *this = *this - o; }

  friend bool operator==(Rational a, Rational b) { return a.num_ == b.num_ && a.den_ == b.den_; }
  friend auto operator<=>(Rational a, Rational b) {
    return static_cast<__int128>(a.num_) * b.den_ <=> static_cast<__int128>(b.num_) * a.den_;
  }
  friend std::ostream& operator<<(std::ostream& os, Rational r) { return os << r.str(); }

private:
  void normalize() {
    if (den_ == 0) throw std::domain_error("rational with zero denominator");
    if (den_ < 0) { num_ = -num_; den_ = -den_; }
    auto g = std::gcd(num_, den_);
    if (g > 1) { num_ /= g; den_ /= g; }
  }
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace sqm
