#pragma once

// Small-noise exit asymptotics: the first-variation covariance Omega(t)
// accumulated along a deterministic orbit, its projection onto a
// transversal section at the exit point, and the assembly of the grazing
// noise covariance Theta from the section-level covariance Theta_G.

#include <array>
#include <cmath>
#include <functional>
#include <type_traits>
#include <vector>

#include "grazesim/smallmat.hpp"
#include "grazesim/errors.hpp"

namespace grazesim {

// Dense NxN matrix for the linearized-flow machinery (N = 2 or 3 in
// practice). Kept separate from Mat2/Mat3, which carry map-specific API.
template <int N>
struct SmallMat {
  std::array<std::array<double, N>, N> m{};

  static SmallMat identity() {
    SmallMat r;
    for (int i = 0; i < N; ++i) r.m[i][i] = 1.0;
    return r;
  }
  double& operator()(int i, int j) { return m[static_cast<size_t>(i)][static_cast<size_t>(j)]; }
  double operator()(int i, int j) const { return m[static_cast<size_t>(i)][static_cast<size_t>(j)]; }

  SmallMat operator+(const SmallMat& o) const {
    SmallMat r;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) r.m[i][j] = m[i][j] + o.m[i][j];
    return r;
  }
  SmallMat operator-(const SmallMat& o) const {
    SmallMat r;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) r.m[i][j] = m[i][j] - o.m[i][j];
    return r;
  }
  SmallMat operator*(const SmallMat& o) const {
    SmallMat r;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        double s = 0.0;
        for (int k = 0; k < N; ++k) s += m[i][k] * o.m[k][j];
        r.m[i][j] = s;
      }
    return r;
  }
  SmallMat operator*(double c) const {
    SmallMat r;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) r.m[i][j] = m[i][j] * c;
    return r;
  }
  SmallMat transpose() const {
    SmallMat r;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) r.m[i][j] = m[j][i];
    return r;
  }
  double max_abs() const {
    double a = 0.0;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) a = std::max(a, std::abs(m[i][j]));
    return a;
  }
};

template <int N>
using SmallVec = std::array<double, N>;

// The vector argument is a non-deduced context: std::array's size is a
// size_t while N is an int, so deduction must come from the matrix.
template <int N>
inline SmallVec<N> operator*(const SmallMat<N>& a, const std::type_identity_t<SmallVec<N>>& v) {
  SmallVec<N> r{};
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) r[static_cast<size_t>(i)] += a(i, j) * v[static_cast<size_t>(j)];
  return r;
}

// Matrix exponential by scaling-and-squaring on a truncated Taylor
// series. Arguments here are Jacobians times a mesh width, so the norm
// after scaling is tiny and 13 terms are ample.
template <int N>
inline SmallMat<N> small_mat_exp(const SmallMat<N>& a) {
  double norm = 0.0;
  for (int i = 0; i < N; ++i) {
    double row = 0.0;
    for (int j = 0; j < N; ++j) row += std::abs(a(i, j));
    norm = std::max(norm, row);
  }
  int squarings = 0;
  double scale = 1.0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    scale = std::ldexp(1.0, -squarings);
  }
  const SmallMat<N> x = a * scale;
  SmallMat<N> result = SmallMat<N>::identity();
  SmallMat<N> term = SmallMat<N>::identity();
  for (int k = 1; k <= 13; ++k) {
    term = term * x * (1.0 / k);
    result = result + term;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

// Linearization data along the deterministic orbit v0(s), s in [0, T0]:
// jacobian(s) = D_v f(v0(s)), diffusion(s) = B(v0(s)).
template <int N>
struct LinearizedFlow {
  std::function<SmallMat<N>(double)> jacobian;
  std::function<SmallMat<N>(double)> diffusion;
  double horizon = 0.0;  // T0 > 0

  void validate() const {
    if (!(horizon > 0.0)) throw std::invalid_argument("LinearizedFlow: horizon must be positive");
    if (!jacobian || !diffusion)
      throw std::invalid_argument("LinearizedFlow: jacobian and diffusion callbacks required");
  }
};

// Time-ordered propagator Phi(s0, s1) as a product of per-subinterval
// exponentials evaluated at midpoints (exact when the Jacobian is
// constant in time).
template <int N>
inline SmallMat<N> propagator(const LinearizedFlow<N>& flow, double s0, double s1, int steps) {
  const double h = (s1 - s0) / steps;
  SmallMat<N> phi = SmallMat<N>::identity();
  for (int k = 0; k < steps; ++k) {
    const double mid = s0 + (k + 0.5) * h;
    phi = small_mat_exp(flow.jacobian(mid) * h) * phi;
  }
  return phi;
}

template <int N>
struct OmegaResult {
  SmallMat<N> omega;
  double error_estimate = 0.0;  // Richardson estimate from step doubling
};

namespace detail {

// Composite Simpson on a uniform mesh of `steps` intervals (steps even).
// Propagators Phi(s_k, T0) come from a backward recurrence so each node
// costs one midpoint exponential.
template <int N>
inline SmallMat<N> omega_simpson(const LinearizedFlow<N>& flow, int steps) {
  const double h = flow.horizon / steps;
  std::vector<SmallMat<N>> integrand(static_cast<size_t>(steps) + 1);
  SmallMat<N> phi = SmallMat<N>::identity();  // Phi(s_k, T0), starting at k = steps
  for (int k = steps; k >= 0; --k) {
    const double s = k * h;
    const SmallMat<N> hmat = phi * flow.diffusion(s);
    integrand[static_cast<size_t>(k)] = hmat * hmat.transpose();
    if (k > 0) phi = phi * small_mat_exp(flow.jacobian(s - 0.5 * h) * h);
  }
  SmallMat<N> acc = integrand[0] + integrand[static_cast<size_t>(steps)];
  for (int k = 1; k < steps; ++k)
    acc = acc + integrand[static_cast<size_t>(k)] * (k % 2 == 1 ? 4.0 : 2.0);
  return acc * (h / 3.0);
}

}  // namespace detail

// Omega(T0) = integral over [0, T0] of H(s, T0) H(s, T0)^T ds with
// H(s, t) = Phi(s, t) B(v0(s)). Computed at `steps` and `2*steps` panels;
// throws when the doubling changes the result by more than 1e-6 relative.
template <int N>
inline OmegaResult<N> omega_quadrature(const LinearizedFlow<N>& flow, int steps = 1024) {
  flow.validate();
  if (steps < 16) throw std::invalid_argument("omega_quadrature: steps must be >= 16");
  if (steps % 2 != 0) ++steps;
  const SmallMat<N> coarse = detail::omega_simpson(flow, steps);
  const SmallMat<N> fine = detail::omega_simpson(flow, 2 * steps);
  const double scale = std::max(fine.max_abs(), 1e-300);
  const double rel = (fine - coarse).max_abs() / scale;
  if (rel > 1e-6)
    throw QuadratureNotConverged("omega_quadrature: step doubling changed the result by more than 1e-6 relative");
  // Simpson converges at fourth order, so the residual error of the fine
  // mesh is about 1/15 of the observed doubling difference.
  return {fine, rel / 15.0};
}

/// Section geometry at the exit point: p is the section normal, q the
// drift. Transversality p^T q != 0 is required.
template <int N>
struct ExitGeometry {
  SmallVec<N> p{};
  SmallVec<N> q{};
};

// (I - q p^T / p^T q) Omega (I - q p^T / p^T q)^T: the covariance of the
// exit location on the section, with the drift direction projected out.
template <int N>
inline SmallMat<N> exit_covariance(const SmallMat<N>& omega, const ExitGeometry<N>& geom) {
  double pq = 0.0, pnorm2 = 0.0, qnorm2 = 0.0;
  for (int i = 0; i < N; ++i) {
    pq += geom.p[static_cast<size_t>(i)] * geom.q[static_cast<size_t>(i)];
    pnorm2 += geom.p[static_cast<size_t>(i)] * geom.p[static_cast<size_t>(i)];
    qnorm2 += geom.q[static_cast<size_t>(i)] * geom.q[static_cast<size_t>(i)];
  }
  if (std::abs(pq) <= 1e-12 * std::sqrt(pnorm2 * qnorm2))
    throw Tangential("exit_covariance: section normal nearly orthogonal to drift");
  SmallMat<N> proj = SmallMat<N>::identity();
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      proj(i, j) -= geom.q[static_cast<size_t>(i)] * geom.p[static_cast<size_t>(j)] / pq;
  return proj * omega * proj.transpose();
}

// Covariance of the section-level Gaussian kick, assembled from the
// entries of the projected Omega and the section slope data.
inline SymMat2 theta_g(double w11, double w12, double w13, double w22, double w23, double w33,
                       double zeta_l, double gamma_l) {
  if (gamma_l == 0.0) throw std::invalid_argument("theta_g: gamma_l must be nonzero");
  const double r = zeta_l / gamma_l;
  return {w11, r * w12 + w13, r * r * w22 + 2.0 * r * w23 + w33};
}

// Theta = (1 / (a12_hat^4 c^4)) [[1, 0], [-a22_hat, a12_hat]] Theta_G
/// [[1, -a22_hat], [0, a12_hat]]: the section covariance pushed through
// the normal-form coordinate change.
inline SymMat2 theta_from_theta_g(const SymMat2& tg, double a12_hat, double a22_hat, double c) {
  if (std::abs(a12_hat * c) < 1e-14)
    throw DegenerateNormalForm("theta_from_theta_g: a12_hat * c vanishes, coordinate change undefined");
  const Mat2 l{1.0, 0.0, -a22_hat, a12_hat};
  const SymMat2 raw = congruence(l, tg);
  const double scale = 1.0 / (a12_hat * a12_hat * a12_hat * a12_hat * c * c * c * c);
  return {scale * raw.s11, scale * raw.s12, scale * raw.s22};
}

}  // namespace grazesim
