#pragma once

// Analytical covariance machinery for the Gaussian invariant-density
// approximation: the n-step noise covariance Theta^(n), the 2x2 discrete
// Lyapunov solve via the 3x3 reduction, the per-point Lambda^(i) chain,
// the near-grazing approximation, and the infinite-horizon Theta^(inf).

#include <cmath>
#include <vector>

#include "grazesim/periodic.hpp"

namespace grazesim {

// Theta^(n) = sum_{i=0}^{n-1} A^i Theta (A^T)^i.
inline SymMat2 theta_n(const Mat2& a, const SymMat2& theta, int n) {
  if (n < 1) throw std::invalid_argument("theta_n: n must be >= 1");
  SymMat2 acc = theta;
  SymMat2 term = theta;
  for (int i = 1; i < n; ++i) {
    term = congruence(a, term);
    acc = acc + term;
  }
  return acc;
}

// M is the 3x3 matrix acting on the stacked vector (l11, l12, l22) that
// represents Lambda -> K Lambda K^T.
inline Mat3 lyapunov_m(const Mat2& k) {
  Mat3 m;
  m(0, 0) = k.m11 * k.m11;
  m(0, 1) = 2.0 * k.m11 * k.m12;
  m(0, 2) = k.m12 * k.m12;
  m(1, 0) = k.m11 * k.m21;
  m(1, 1) = k.m11 * k.m22 + k.m12 * k.m21;
  m(1, 2) = k.m12 * k.m22;
  m(2, 0) = k.m21 * k.m21;
  m(2, 1) = 2.0 * k.m21 * k.m22;
  m(2, 2) = k.m22 * k.m22;
  return m;
}

// (det K - tr K + 1)(det K + tr K + 1)(1 - det K); equal to det(I - M),
// and zero exactly when K has an eigenvalue on the unit circle.
inline double det_guard_identity(const Mat2& k) {
  const double d = k.det();
  const double t = k.trace();
  return (d - t + 1.0) * (d + t + 1.0) * (1.0 - d);
}

struct LyapunovResult {
  SymMat2 lambda;
  double det_guard;  // det(I - M)
};

// Solves Lambda = K Lambda K^T + Theta^(n) through the stacked 3x3 system
// (I - M) (l11, l12, l22)^T = (th11, th12, th22)^T.
// Note the right-hand side reads from Theta^(n), not Theta.
inline LyapunovResult solve_lyapunov(const Mat2& k, const SymMat2& theta_n_mat) {
  const Mat3 im = Mat3::identity() - lyapunov_m(k);
  const double guard = im.det();
  if (std::abs(guard) < 1e-12)
    throw OnUnitCircle("solve_lyapunov: K has an eigenvalue on (or near) the unit circle");
  Vec3 l;
  try {
    l = solve3(im, {theta_n_mat.s11, theta_n_mat.s12, theta_n_mat.s22});
  } catch (const SingularMatrix&) {
    throw OnUnitCircle("solve_lyapunov: (I - M) numerically singular");
  }
  // Symmetric by construction of the stacked system; nothing to scrub here,
  // the stacking already collapsed the off-diagonal pair.
  return {{l[0], l[1], l[2]}, guard};
}

// Plain chain Lambda^{i+1} = A Lambda^{i} A^T + Theta (no square-root
// correction, no closure check). Returns n entries starting at lambda0.
inline std::vector<SymMat2> lambda_chain(const Mat2& a, const SymMat2& theta,
                                         const SymMat2& lambda0, int n) {
  if (n < 1) throw std::invalid_argument("lambda_chain: n must be >= 1");
  std::vector<SymMat2> chain;
  chain.reserve(static_cast<size_t>(n));
  chain.push_back(lambda0);
  for (int i = 1; i < n; ++i) chain.push_back(congruence(a, chain.back()) + theta);
  return chain;
}

struct CovarianceChain {
  int n = 1;
  SymMat2 theta_n;               // n-step noise covariance
  std::vector<SymMat2> lambda;   // Lambda^(0) .. Lambda^(n-1), index 0 at x > 0
  double det_guard = 0.0;        // det(I - M)
};

// Full chain for a maximal period-n solution with right-half-plane point
// x*. Lambda^(0) solves the Lyapunov equation with K; stepping from the
// x > 0 point picks up the square-root branch Jacobian A [[1,0],[-chi/(2
// sqrt(x*)),1]], after which the left half-map contributes plain A steps.
// The closure Lambda^(n) = Lambda^(0) is checked and enforced to 1e-8.
inline CovarianceChain covariance_chain(const MapParams& p, int n, double x_star,
                                        const SymMat2& theta) {
  if (x_star <= 0.0) throw ZeroXStar("covariance_chain: x* must be positive");
  const Mat2 a = p.A();
  CovarianceChain chain;
  chain.n = n;
  chain.theta_n = theta_n(a, theta, n);
  const StabilityInfo info = stability(p, n, x_star);
  const LyapunovResult lyap = solve_lyapunov(info.k, chain.theta_n);
  chain.det_guard = lyap.det_guard;
  chain.lambda.reserve(static_cast<size_t>(n));
  chain.lambda.push_back(lyap.lambda);
  if (n > 1) {
    const Mat2 corr{1.0, 0.0, -p.chi / (2.0 * std::sqrt(x_star)), 1.0};
    chain.lambda.push_back(congruence(a * corr, lyap.lambda) + theta);
    for (int i = 2; i < n; ++i) chain.lambda.push_back(congruence(a, chain.lambda.back()) + theta);
    const SymMat2 closed = congruence(a, chain.lambda.back()) + theta;
    const double err = (closed - lyap.lambda).max_abs();
    if (err > 1e-8 * std::max(1e-300, lyap.lambda.max_abs()))
      throw ChainInconsistent("covariance_chain: Lambda^(n) does not close onto Lambda^(0)");
  }
  return chain;
}

// Near-grazing approximation Lambda ~ Theta^(n) + th11/(4x* - a12^2) *
// [[a12^2, a12 a22], [a12 a22, a22^2]].
inline SymMat2 lambda_approx(const NthPowerData& npd, double x_star, const SymMat2& theta_n_mat) {
  const double a12 = npd.an.m12;
  const double a22 = npd.an.m22;
  const double denom = 4.0 * x_star - a12 * a12;
  if (std::abs(denom) < 1e-14)
    throw DegenerateDenominator("lambda_approx: 4 x* - a12^2 vanishes");
  const double f = theta_n_mat.s11 / denom;
  return theta_n_mat + SymMat2{f * a12 * a12, f * a12 * a22, f * a22 * a22};
}

// Closed-form Theta^(inf) = sum_i A^i Theta (A^T)^i, valid when both
// eigenvalues of A are strictly inside the unit circle.
inline SymMat2 theta_inf(double tau, double delta, const SymMat2& theta) {
  const double d = (delta - tau + 1.0) * (delta + tau + 1.0) * (1.0 - delta);
  if (d <= 0.0 || std::abs(delta) >= 1.0)
    throw Unstable("theta_inf: A has an eigenvalue on or outside the unit circle");
  const double t11 = theta.s11, t12 = theta.s12, t22 = theta.s22;
  const double i11 = ((1.0 + delta) * t11 + 2.0 * tau * t12 + (1.0 + delta) * t22) / d;
  const double i12 = (-tau * delta * t11 + (1.0 - tau * tau - delta * delta) * t12 - tau * delta * t22) / d;
  const double i22 = ((delta * delta + delta * delta * delta) * t11 + 2.0 * tau * delta * delta * t12 +
                      (1.0 + delta - tau * tau + tau * tau * delta) * t22) / d;
  return {i11, i12, i22};
}

// Trace-normalized variant: theta11 constrained to 2 - theta22, so the
// result depends only on (tau, delta, theta12, theta22).
inline SymMat2 theta_inf_trace2(double tau, double delta, double theta12, double theta22) {
  const double d = (delta - tau + 1.0) * (delta + tau + 1.0) * (1.0 - delta);
  if (d <= 0.0 || std::abs(delta) >= 1.0)
    throw Unstable("theta_inf_trace2: A has an eigenvalue on or outside the unit circle");
  const double i11 = 2.0 * (1.0 + delta + tau * theta12) / d;
  const double i12 = (-2.0 * tau * delta + (1.0 - tau * tau - delta * delta) * theta12) / d;
  const double i22 = 2.0 * delta * delta * (1.0 + delta + tau * theta12) / d + theta22;
  return {i11, i12, i22};
}

}  // namespace grazesim
