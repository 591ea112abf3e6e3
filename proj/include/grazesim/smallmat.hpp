#pragma once

// Self-contained fixed-size linear algebra for the 2x2 and 3x3 matrices
// that appear throughout the library. No general n-by-n support.

#include <array>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <limits>

#include "grazesim/errors.hpp"

namespace grazesim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double norm() const { return std::hypot(x, y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

struct Vec3 {
  std::array<double, 3> v{0.0, 0.0, 0.0};

  Vec3() = default;
  Vec3(double a, double b, double c) : v{a, b, c} {}

  double& operator[](int i) { return v[static_cast<size_t>(i)]; }
  double operator[](int i) const { return v[static_cast<size_t>(i)]; }
  Vec3 operator-(const Vec3& o) const { return {v[0] - o.v[0], v[1] - o.v[1], v[2] - o.v[2]}; }
  double norm() const { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }
};

// Row-major 2x2 real matrix.
struct Mat2 {
  double m11 = 0.0, m12 = 0.0, m21 = 0.0, m22 = 0.0;

  Mat2() = default;
  Mat2(double a, double b, double c, double d) : m11(a), m12(b), m21(c), m22(d) {}

  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static Mat2 zero() { return {}; }

  double trace() const { return m11 + m22; }
  double det() const { return m11 * m22 - m12 * m21; }
  Mat2 transpose() const { return {m11, m21, m12, m22}; }

  Mat2 operator+(const Mat2& o) const { return {m11 + o.m11, m12 + o.m12, m21 + o.m21, m22 + o.m22}; }
  Mat2 operator-(const Mat2& o) const { return {m11 - o.m11, m12 - o.m12, m21 - o.m21, m22 - o.m22}; }
  Mat2 operator*(double s) const { return {m11 * s, m12 * s, m21 * s, m22 * s}; }
  Mat2 operator*(const Mat2& o) const {
    return {m11 * o.m11 + m12 * o.m21, m11 * o.m12 + m12 * o.m22,
            m21 * o.m11 + m22 * o.m21, m21 * o.m12 + m22 * o.m22};
  }
  Vec2 operator*(const Vec2& v) const { return {m11 * v.x + m12 * v.y, m21 * v.x + m22 * v.y}; }

  double max_abs() const {
    return std::max(std::max(std::abs(m11), std::abs(m12)), std::max(std::abs(m21), std::abs(m22)));
  }
};

inline Mat2 operator*(double s, const Mat2& m) { return m * s; }

// Symmetric 2x2 matrix stored as (s11, s12, s22).
struct SymMat2 {
  double s11 = 0.0, s12 = 0.0, s22 = 0.0;

  SymMat2() = default;
  SymMat2(double a, double b, double c) : s11(a), s12(b), s22(c) {}

  static SymMat2 identity() { return {1.0, 0.0, 1.0}; }
  static SymMat2 zero() { return {}; }

  Mat2 to_mat2() const { return {s11, s12, s12, s22}; }
  double trace() const { return s11 + s22; }
  double det() const { return s11 * s22 - s12 * s12; }

  SymMat2 operator+(const SymMat2& o) const { return {s11 + o.s11, s12 + o.s12, s22 + o.s22}; }
  SymMat2 operator-(const SymMat2& o) const { return {s11 - o.s11, s12 - o.s12, s22 - o.s22}; }
  SymMat2 operator*(double s) const { return {s11 * s, s12 * s, s22 * s}; }

  double max_abs() const { return std::max(std::abs(s11), std::max(std::abs(s12), std::abs(s22))); }

  // Relative PSD test: entries of Theta span orders of magnitude, so the
  // determinant tolerance scales with the entry sizes.
  bool is_psd(double tol = 1e-12) const {
    const double scale = std::max(1.0, std::abs(s11 * s22) + s12 * s12);
    return s11 >= -tol * scale && s22 >= -tol * scale && det() >= -tol * scale;
  }
};

inline SymMat2 operator*(double s, const SymMat2& m) { return m * s; }

// A * S * A^T for symmetric S; the result is symmetric by construction.
inline SymMat2 congruence(const Mat2& a, const SymMat2& s) {
  const Mat2 full = a * s.to_mat2() * a.transpose();
  return {full.m11, 0.5 * (full.m12 + full.m21), full.m22};
}

struct Mat3 {
  std::array<std::array<double, 3>, 3> m{};

  Mat3() = default;

  static Mat3 identity() {
    Mat3 r;
    r.m[0][0] = r.m[1][1] = r.m[2][2] = 1.0;
    return r;
  }

  double& operator()(int i, int j) { return m[static_cast<size_t>(i)][static_cast<size_t>(j)]; }
  double operator()(int i, int j) const { return m[static_cast<size_t>(i)][static_cast<size_t>(j)]; }

  Mat3 operator-(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = (*this)(i, j) - o(i, j);
    return r;
  }

  Vec3 operator*(const Vec3& v) const {
    Vec3 r;
    for (int i = 0; i < 3; ++i) r[i] = (*this)(i, 0) * v[0] + (*this)(i, 1) * v[1] + (*this)(i, 2) * v[2];
    return r;
  }

  double det() const {
    const auto& a = m;
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
           a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  }
};

// exp(m * t) via the three closed-form 2x2 branches, keyed on the sign of
// trace^2 - 4 det. The repeated-root branch has a small absolute width to
// avoid cancellation near critical damping.
inline Mat2 mat2_exp(const Mat2& m, double t) {
  const Mat2 mt = m * t;
  const double half_tr = 0.5 * mt.trace();
  const double disc = mt.trace() * mt.trace() - 4.0 * mt.det();  // (2 rho)^2
  const double ea = std::exp(half_tr);
  const Mat2 dev = mt - Mat2::identity() * half_tr;  // mt - (tr/2) I
  const double width = 1e-12 * std::max(1.0, mt.trace() * mt.trace());

  if (disc > width) {
    const double rho = 0.5 * std::sqrt(disc);
    return ea * (std::cosh(rho) * Mat2::identity() + (std::sinh(rho) / rho) * dev);
  }
  if (disc < -width) {
    const double beta = 0.5 * std::sqrt(-disc);
    return ea * (std::cos(beta) * Mat2::identity() + (std::sin(beta) / beta) * dev);
  }
  return ea * (Mat2::identity() + dev);
}

// Eigenvalues of a 2x2 matrix, ordered by descending modulus; ties broken
// by descending imaginary part.
inline std::array<std::complex<double>, 2> eig2(const Mat2& m) {
  const double tr = m.trace();
  const double disc = tr * tr - 4.0 * m.det();
  std::complex<double> l1, l2;
  if (disc >= 0.0) {
    // Stable quadratic: larger-magnitude root directly, the other via the product.
    const double r = std::sqrt(disc);
    const double big = 0.5 * (tr + (tr >= 0.0 ? r : -r));
    l1 = big;
    l2 = (big != 0.0) ? m.det() / big : 0.5 * (tr - (tr >= 0.0 ? -r : r));
  } else {
    const double im = 0.5 * std::sqrt(-disc);
    l1 = {0.5 * tr, im};
    l2 = {0.5 * tr, -im};
  }
  const auto mod = [](const std::complex<double>& z) { return std::abs(z); };
  if (mod(l1) < mod(l2) || (mod(l1) == mod(l2) && l1.imag() < l2.imag())) std::swap(l1, l2);
  return {l1, l2};
}

// Solve m x = v by Gaussian elimination with partial pivoting.
// Throws SingularMatrix when a pivot collapses relative to the row norms,
// which downstream signals an eigenvalue of K on the unit circle.
inline Vec3 solve3(const Mat3& m, const Vec3& v) {
  double a[3][4];
  double max_row_norm = 0.0;
  for (int i = 0; i < 3; ++i) {
    double rn = 0.0;
    for (int j = 0; j < 3; ++j) {
      a[i][j] = m(i, j);
      rn = std::max(rn, std::abs(a[i][j]));
    }
    a[i][3] = v[i];
    max_row_norm = std::max(max_row_norm, rn);
  }
  const double pivot_floor = 1e-14 * std::max(max_row_norm, std::numeric_limits<double>::min());

  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < pivot_floor) throw SingularMatrix("solve3: pivot below threshold");
    if (piv != col)
      for (int j = 0; j < 4; ++j) std::swap(a[piv][j], a[col][j]);
    for (int r = col + 1; r < 3; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int j = col; j < 4; ++j) a[r][j] -= f * a[col][j];
    }
  }
  Vec3 x;
  for (int i = 2; i >= 0; --i) {
    double s = a[i][3];
    for (int j = i + 1; j < 3; ++j) s -= a[i][j] * x[j];
    x[i] = s / a[i][i];
  }
  return x;
}

// Lower-triangular L with L L^T = s, for positive-semidefinite s.
// A degenerate first direction (s11 = 0) yields a zero first column.
inline Mat2 chol2(const SymMat2& s) {
  const double scale = std::abs(s.s11 * s.s22) + s.s12 * s.s12;
  if (s.s11 < -1e-12 * std::max(1.0, scale) || s.det() < -1e-12 * std::max(1.0, scale))
    throw NotPSD("chol2: input is not positive-semidefinite");
  if (s.s11 <= 0.0) {
    return {0.0, 0.0, 0.0, std::sqrt(std::max(0.0, s.s22))};
  }
  const double l11 = std::sqrt(s.s11);
  const double l21 = s.s12 / l11;
  const double l22 = std::sqrt(std::max(0.0, s.s22 - l21 * l21));
  return {l11, 0.0, l21, l22};
}

}  // namespace grazesim
