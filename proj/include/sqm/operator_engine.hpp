#pragma once
// Periodic spectral discretization of the model operators and a dense-matrix oracle.
//
// Grid rows index t = x1, columns index the transverse coordinate. The transverse
// semiclassical derivative is hD2 := h^{d2_power} D_y: d2_power = 1 is the plain
// operator, d2_power = 1 - gamma is the dilated frame x2 = h^gamma y used by quasimodes.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "sqm/errors.hpp"
#include "sqm/model_symbols.hpp"

namespace sqm {

using MatrixC = Eigen::MatrixXcd;
using VectorC = Eigen::VectorXcd;

struct Grid {
  double half_width = 8.0;
  int n = 256;

  Grid() = default;
  Grid(double L, int points) : half_width(L), n(points) {
    // any even size works with the mixed-radix FFT; powers of two are the fast path
    if (points < 4 || points % 2 != 0) throw InvalidInput("points_per_axis must be even and >= 4");
    if (!(L > 0)) throw InvalidInput("half_width must be positive");
  }
  double spacing() const { return 2.0 * half_width / n; }
  double x(int i) const { return -half_width + spacing() * i; }
  double dk() const { return M_PI / half_width; }
  /// Integer multiple of pi/L; the unmatched Nyquist mode is -n/2.
  double wavenumber(int i) const { return dk() * (i < n / 2 ? i : i - n); }
  double nyquist() const { return dk() * (n / 2); }
  int index_of(double t) const { return static_cast<int>(std::lround((t + half_width) / spacing())); }
};

struct Field {
  Grid grid;
  MatrixC v;  // v(i_t, i_y)

  Field() = default;
  explicit Field(const Grid& g) : grid(g), v(MatrixC::Zero(g.n, g.n)) {}
  Field(const Grid& g, MatrixC values) : grid(g), v(std::move(values)) {}

  double norm() const { return v.norm() * grid.spacing(); }
  Field& operator+=(const Field& o) { v += o.v; return *this; }
};

namespace detail {

class Fft {
public:
  void forward(const VectorC& in, VectorC& out) { fft_.fwd(out, in); }
  void inverse(const VectorC& in, VectorC& out) { fft_.inv(out, in); }
private:
  Eigen::FFT<double> fft_;
};

/// Multiplier for D^order (D = -i d/dx); odd orders drop the Nyquist mode.
inline std::vector<cplx> derivative_symbol(const Grid& g, int order, double factor = 1.0) {
  std::vector<cplx> m(g.n);
  for (int i = 0; i < g.n; ++i) {
    double k = factor * g.wavenumber(i);
    m[i] = (order % 2 == 1 && i == g.n / 2) ? 0.0 : std::pow(k, order);
  }
  return m;
}

}  // namespace detail

/// Applies a Fourier multiplier along axis 0 (t) or 1 (y).
inline MatrixC apply_multiplier(const MatrixC& f, int axis, const std::vector<cplx>& mult) {
  const Eigen::Index n = axis == 0 ? f.rows() : f.cols();
  const Eigen::Index m = axis == 0 ? f.cols() : f.rows();
  detail::Fft fft;
  MatrixC out(f.rows(), f.cols());
  VectorC in(n), spec(n), back(n);
  for (Eigen::Index c = 0; c < m; ++c) {
    in = axis == 0 ? VectorC(f.col(c)) : VectorC(f.row(c).transpose());
    fft.forward(in, spec);
    for (Eigen::Index i = 0; i < n; ++i) spec[i] *= mult[i];
    fft.inverse(spec, back);
    if (axis == 0) out.col(c) = back;
    else out.row(c) = back.transpose();
  }
  return out;
}

/// (hD)^order along an axis.
inline Field fourier_derivative(const Field& f, int axis, int order, double h) {
  if (order < 1) throw InvalidInput("derivative order must be >= 1");
  if (axis != 0 && axis != 1) throw InvalidInput("axis must be 0 or 1");
  return {f.grid, apply_multiplier(f.v, axis, detail::derivative_symbol(f.grid, order, h))};
}

inline VectorC sample(const CoefficientFunction& c, const Grid& g) {
  VectorC s(g.n);
  for (int i = 0; i < g.n; ++i) s[i] = c(g.x(i));
  return s;
}

namespace detail {

inline MatrixC times_t(const VectorC& w, const MatrixC& f) { return w.asDiagonal() * f; }

inline MatrixC hd2_pow(const MatrixC& f, const Grid& g, int p, double hd2) {
  if (p == 0) return f;
  return apply_multiplier(f, 1, derivative_symbol(g, p, hd2));
}

}  // namespace detail

/// P(h) f - shift f, composing multipliers exactly as the model is written.
inline Field apply_full_operator(const ModelOperatorSpec& s, const Field& f, double h, double d2_power = 1.0) {
  validate(s);
  const Grid& g = f.grid;
  const double hd2 = std::pow(h, d2_power);
  const auto d1 = detail::derivative_symbol(g, 1, h);  // hD1
  MatrixC out;
  if (s.kase == Case::Tangential) {
    MatrixC inner = apply_multiplier(f.v, 0, d1) +
                    detail::times_t(sample(s.q, g), detail::hd2_pow(f.v, g, s.j, hd2));
    out = apply_multiplier(inner, 0, d1);
    MatrixC dk = detail::hd2_pow(f.v, g, s.k, hd2);
    out += h * detail::times_t(sample(s.b.b0, g), dk);
    if (!s.b.b1.is_zero())
      out += h * detail::times_t(sample(s.b.b1, g), detail::hd2_pow(dk, g, 1, hd2));
  } else {
    MatrixC d2f = detail::hd2_pow(f.v, g, 1, hd2);
    out = apply_multiplier(d2f, 0, d1);
    if (!s.a1.is_zero()) out += h * detail::times_t(sample(s.a1, g), apply_multiplier(f.v, 0, d1));
    out += h * detail::times_t(sample(s.A2(), g), d2f);
    out += h * detail::times_t(sample(s.R(), g), f.v);
  }
  if (s.shift != cplx{0.0}) out -= s.shift * f.v;
  return {g, std::move(out)};
}

/// Xi^p a with Xi = xi2 + h^alpha D_y.
inline MatrixC xi_power(const MatrixC& a, const Grid& g, int p, double xi2, double h_alpha) {
  if (p == 0) return a;
  std::vector<cplx> m(g.n);
  for (int i = 0; i < g.n; ++i) m[i] = std::pow(xi2 + h_alpha * g.wavenumber(i), p);
  return apply_multiplier(a, 1, m);
}

/// Scaled, phase-conjugated operator acting on an amplitude a, with the prefactor
/// h^{1 + j beta} removed: P(e^{i xi2 y / h^alpha} a) = h^{1+j beta} e^{...} [result].
inline Field apply_conjugated_operator(const ModelOperatorSpec& s, const Field& a, double h, double beta,
                                       double xi2) {
  validate(s);
  const Grid& g = a.grid;
  const int j = s.j;
  const double alpha = 1.0 - (j + 2) * beta;
  const double ha = std::pow(h, alpha);
  const auto d1 = detail::derivative_symbol(g, 1);
  MatrixC out;
  if (s.kase == Case::Tangential) {
    MatrixC inner = detail::times_t(sample(s.q, g), xi_power(a.v, g, j, xi2, ha));
    out = std::pow(h, 1.0 - j * beta) * apply_multiplier(a.v, 0, detail::derivative_symbol(g, 2)) +
          apply_multiplier(inner, 0, d1);
    MatrixC xk = xi_power(a.v, g, s.k, xi2, ha);
    const double pk = std::pow(h, (s.k - j) * beta);
    out += pk * detail::times_t(sample(s.b.b0, g), xk);
    if (!s.b.b1.is_zero())
      out += pk * std::pow(h, beta) * detail::times_t(sample(s.b.b1, g), xi_power(xk, g, 1, xi2, ha));
  } else {
    MatrixC x1 = xi_power(a.v, g, 1, xi2, ha);
    out = apply_multiplier(x1, 0, d1);
    if (!s.a1.is_zero())
      out += std::pow(h, 1.0 - beta) * detail::times_t(sample(s.a1, g), apply_multiplier(a.v, 0, d1));
    out += detail::times_t(sample(s.A2(), g), x1);
    out += std::pow(h, -beta) * detail::times_t(sample(s.R(), g), a.v);
  }
  if (s.shift != cplx{0.0}) out -= s.shift * std::pow(h, -1.0 - j * beta) * a.v;
  return {g, std::move(out)};
}

// ---------------------------------------------------------------------------
// Dense oracle. Flattening is column-major: index = i_t + n * i_y.

inline constexpr int kDenseLimit = 64;

namespace detail {

/// 1-D matrix of a Fourier multiplier, built column by column from the FFT path.
inline MatrixC multiplier_matrix(const Grid& g, const std::vector<cplx>& mult) {
  return apply_multiplier(MatrixC::Identity(g.n, g.n), 0, mult);
}

inline MatrixC kron(const MatrixC& a, const MatrixC& b) {
  MatrixC out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

struct DenseParts {
  MatrixC It, Iy;
  MatrixC D1;  // D_t (no h)
  MatrixC Dy;  // D_y (no h)
  const Grid* g;

  explicit DenseParts(const Grid& grid) : g(&grid) {
    It = MatrixC::Identity(grid.n, grid.n);
    Iy = It;
    D1 = multiplier_matrix(grid, derivative_symbol(grid, 1));
    Dy = D1;
  }
  MatrixC t_op(const MatrixC& T) const { return kron(Iy, T); }
  MatrixC y_op(const MatrixC& Y) const { return kron(Y, It); }
  MatrixC mult(const CoefficientFunction& c) const { return t_op(sample(c, *g).asDiagonal().toDenseMatrix()); }
  MatrixC hd2_pow(int p, double hd2) const {
    return y_op(multiplier_matrix(*g, derivative_symbol(*g, p, hd2)));
  }
  MatrixC hd1_pow(int p, double h) const { return t_op(multiplier_matrix(*g, derivative_symbol(*g, p, h))); }
};

inline void check_dense_size(const Grid& g) {
  if (g.n > kDenseLimit)
    throw ResourceError("dense oracle limited to " + std::to_string(kDenseLimit) + " points per axis (got " +
                        std::to_string(g.n) + ")");
}

}  // namespace detail

inline MatrixC assemble_dense(const ModelOperatorSpec& s, const Grid& g, double h, double d2_power = 1.0) {
  validate(s);
  detail::check_dense_size(g);
  detail::DenseParts P(g);
  const double hd2 = std::pow(h, d2_power);
  MatrixC hD1 = P.hd1_pow(1, h);
  MatrixC A;
  if (s.kase == Case::Tangential) {
    A = hD1 * (hD1 + P.mult(s.q) * P.hd2_pow(s.j, hd2));
    MatrixC dk = s.k == 0 ? MatrixC::Identity(g.n * g.n, g.n * g.n) : P.hd2_pow(s.k, hd2);
    A += h * P.mult(s.b.b0) * dk;
    if (!s.b.b1.is_zero()) A += h * P.mult(s.b.b1) * P.hd2_pow(1, hd2) * dk;
  } else {
    MatrixC d2 = P.hd2_pow(1, hd2);
    A = hD1 * d2;
    if (!s.a1.is_zero()) A += h * P.mult(s.a1) * hD1;
    A += h * P.mult(s.A2()) * d2 + h * P.mult(s.R());
  }
  if (s.shift != cplx{0.0}) A -= s.shift * MatrixC::Identity(A.rows(), A.cols());
  return A;
}

inline VectorC flatten(const Field& f) { return Eigen::Map<const VectorC>(f.v.data(), f.v.size()); }
inline Field unflatten(const Grid& g, const VectorC& v) {
  return {g, Eigen::Map<const MatrixC>(v.data(), g.n, g.n)};
}

inline void check_finite(const MatrixC& A) {
  if (!A.allFinite()) throw InvalidInput("matrix has non-finite entries");
}

inline double smallest_singular_value(const MatrixC& A) {
  check_finite(A);
  if (A.size() == 0) throw InvalidInput("empty matrix");
  Eigen::BDCSVD<MatrixC> svd(A);
  return svd.singularValues().minCoeff();
}

inline double spectral_norm(const MatrixC& A) {
  check_finite(A);
  Eigen::BDCSVD<MatrixC> svd(A);
  return svd.singularValues().maxCoeff();
}

/// Smallest singular value of A restricted to fields with zero mean in y
/// (removes the xi2 = 0 sector, which lies outside the region where xi2 is bounded away from 0).
inline double smallest_singular_value_nonzero_y_modes(const MatrixC& A, const Grid& g) {
  check_finite(A);
  Eigen::HouseholderQR<MatrixC> qr(MatrixC::Ones(g.n, 1));
  MatrixC Q = qr.householderQ() * MatrixC::Identity(g.n, g.n);
  MatrixC Qy = Q.rightCols(g.n - 1);
  MatrixC basis = detail::kron(Qy, MatrixC::Identity(g.n, g.n));
  Eigen::BDCSVD<MatrixC> svd(A * basis);
  return svd.singularValues().minCoeff();
}

inline MatrixC assemble_description(const OperatorDescription& d, const Grid& g, double h, double d2_power = 1.0) {
  detail::check_dense_size(g);
  detail::DenseParts P(g);
  const double hd2 = std::pow(h, d2_power);
  const Eigen::Index N = static_cast<Eigen::Index>(g.n) * g.n;
  MatrixC A = MatrixC::Zero(N, N);
  for (auto& term : d.terms) {
    MatrixC m = P.mult(term.mult);
    MatrixC d1 = term.d1 == 0 ? MatrixC::Identity(N, N) : P.hd1_pow(term.d1, 1.0);
    MatrixC core = term.deriv_outer ? MatrixC(d1 * m) : MatrixC(m * d1);
    if (term.d2 > 0) core = core * P.hd2_pow(term.d2, hd2);
    A += term.coeff * std::pow(h, term.h_power) * core;
  }
  return A;
}

/// Spectral norm of dense(P) - dense(P2) dense(P1), shift excluded.
inline double factorization_defect(const ModelOperatorSpec& s, const Grid& g, double h, double d2_power = 1.0) {
  auto [p1, p2] = build_factors(s);
  ModelOperatorSpec unshifted = s;
  unshifted.shift = 0.0;
  MatrixC A = assemble_dense(unshifted, g, h, d2_power);
  MatrixC F = assemble_description(p2, g, h, d2_power) * assemble_description(p1, g, h, d2_power);
  return spectral_norm(A - F);
}

}  // namespace sqm
