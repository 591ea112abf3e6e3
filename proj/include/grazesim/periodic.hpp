#pragma once

// Analytical maximal periodic solutions of the deterministic Nordmark map:
// period-n solutions with exactly one point in the right half-plane, their
// stability multipliers, admissibility, and mu-parameterized branches.
//
// Note on the fixed-point algebra: the published formula for mu in terms of
// x* prints a coefficient "a_2" where re-deriving the fixed-point condition
// from the n-th iterate gives a_12 (the (1,2)-entry of A^n). This module
// implements a_12. See solve_for_mu.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "grazesim/nordmark.hpp"

namespace grazesim {

struct NthPowerData {
  Mat2 an;  // A^n
  Vec2 b;   // (I + A + ... + A^{n-1}) (0,1)^T
};

inline NthPowerData nth_power_data(const MapParams& p, int n) {
  if (n < 1) throw std::invalid_argument("nth_power_data: n must be >= 1");
  const Mat2 a = p.A();
  Mat2 an = Mat2::identity();
  Vec2 b{0.0, 0.0};
  for (int i = 0; i < n; ++i) {
    b = a * b + Vec2{0.0, 1.0};
    an = a * an;
  }
  return {an, b};
}

struct MuSolution {
  double mu;
  double y_star;
};

// Given x* >= 0 for a period-n solution, returns the mu on which it lives
// and the matching y*.
inline MuSolution solve_for_mu(const MapParams& p, int n, double x_star) {
  const auto [an, b] = nth_power_data(p, n);
  const double denom = (1.0 - an.m22) * b.x + an.m12 * b.y;
  if (std::abs(denom) < 1e-14)
    throw DegenerateDenominator("solve_for_mu: (1-a22) b1 + a12 b2 vanishes");
  const double s = std::sqrt(x_star);
  const double c2 = (1.0 - an.m11) * (1.0 - an.m22) - an.m12 * an.m21;
  const double mu = (an.m12 * p.chi * s + c2 * x_star) / denom;
  const double y_star =
      ((an.m12 * b.y - an.m22 * b.x) * p.chi * s + ((1.0 - an.m11) * b.y + an.m21 * b.x) * x_star) /
      denom;
  return {mu, y_star};
}

// Inverts the mu(x*) relation: solves the quadratic in s = sqrt(x*) >= 0 and
// returns all admissible-sign roots as x* = s^2. Uses the cancellation-free
// quadratic form since both roots approach 0 near grazing.
inline std::vector<double> solve_for_x(const MapParams& p, int n) {
  const auto [an, b] = nth_power_data(p, n);
  const double denom = (1.0 - an.m22) * b.x + an.m12 * b.y;
  const double c2 = (1.0 - an.m11) * (1.0 - an.m22) - an.m12 * an.m21;
  const double c1 = an.m12 * p.chi;
  const double c0 = -p.mu * denom;  // c2 s^2 + c1 s + c0 = 0

  std::vector<double> roots;
  if (std::abs(c2) < 1e-300) {
    if (std::abs(c1) > 0.0) {
      const double s = -c0 / c1;
      if (s >= 0.0) roots.push_back(s * s);
    }
    return roots;
  }
  const double disc = c1 * c1 - 4.0 * c2 * c0;
  if (disc < 0.0) return roots;
  const double r = std::sqrt(disc);
  const double q = -0.5 * (c1 + (c1 >= 0.0 ? r : -r));
  const double s1 = q / c2;
  const double s2 = (q != 0.0) ? c0 / q : 0.0;
  for (double s : {s1, s2})
    if (s >= 0.0) roots.push_back(s * s);
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  return roots;
}

struct StabilityInfo {
  Mat2 k;
  std::array<std::complex<double>, 2> multipliers;
  bool stable = false;
  bool marginal = false;
};

// K = A^n [[1,0],[-chi/(2 sqrt(x*)), 1]]; stable iff both multipliers are
// strictly inside the unit circle (modulus < 1 - 1e-12; the boundary band
// is flagged marginal instead).
inline StabilityInfo stability(const MapParams& p, int n, double x_star) {
  if (x_star <= 0.0) throw ZeroXStar("stability: x* must be positive");
  const Mat2 an = nth_power_data(p, n).an;
  const Mat2 corr{1.0, 0.0, -p.chi / (2.0 * std::sqrt(x_star)), 1.0};
  StabilityInfo info;
  info.k = an * corr;
  info.multipliers = eig2(info.k);
  const double m0 = std::abs(info.multipliers[0]);
  const double m1 = std::abs(info.multipliers[1]);
  const double mmax = std::max(m0, m1);
  info.stable = mmax < 1.0 - 1e-12;
  info.marginal = !info.stable && mmax < 1.0 + 1e-12;
  return info;
}

struct PeriodicSolution {
  int n = 1;
  std::vector<State2> points;  // points[0] is the right-half-plane point
  double x_star = 0.0;
  double y_star = 0.0;
  double mu = 0.0;
  std::array<std::complex<double>, 2> multipliers{};
  bool stable = false;
  bool admissible = false;
  bool impacting = true;  // false for the non-impacting left fixed point
};

// Admissibility of a maximal solution: x_0 >= 0 and the remaining n-1
// iterates stay in the left half-plane.
inline bool admissibility(const PeriodicSolution& sol) {
  if (sol.points.empty() || sol.points[0].x < 0.0) return false;
  for (size_t i = 1; i < sol.points.size(); ++i)
    if (sol.points[i].x > 0.0) return false;
  return true;
}

// Assembles the full period-n solution living at the mu implied by x*.
inline PeriodicSolution make_solution(const MapParams& p, int n, double x_star) {
  const MuSolution ms = solve_for_mu(p, n, x_star);
  MapParams q = p;
  q.mu = ms.mu;

  PeriodicSolution sol;
  sol.n = n;
  sol.x_star = x_star;
  sol.y_star = ms.y_star;
  sol.mu = ms.mu;
  sol.points.reserve(static_cast<size_t>(n));
  sol.points.push_back({x_star, ms.y_star});
  for (int i = 1; i < n; ++i) sol.points.push_back(step_det(q, sol.points.back()));
  sol.admissible = admissibility(sol);
  if (x_star > 0.0) {
    const StabilityInfo info = stability(p, n, x_star);
    sol.multipliers = info.multipliers;
    sol.stable = info.stable;
  }
  return sol;
}

// All admissible, stable maximal solutions with period <= n_max at the mu
// carried by p (plus the left fixed point when admissible).
inline std::vector<PeriodicSolution> solutions_at_mu(const MapParams& p, int n_max) {
  std::vector<PeriodicSolution> out;

  const FixedPoint fp = left_fixed_point(p);
  if (fp.admissible) {
    PeriodicSolution sol;
    sol.n = 1;
    sol.points = {fp.point};
    sol.x_star = fp.point.x;
    sol.y_star = fp.point.y;
    sol.mu = p.mu;
    sol.multipliers = eig2(p.A());
    sol.stable = std::abs(sol.multipliers[0]) < 1.0 - 1e-12;
    sol.admissible = true;
    sol.impacting = false;
    out.push_back(sol);
  }

  for (int n = 1; n <= n_max; ++n) {
    for (double x_star : solve_for_x(p, n)) {
      if (x_star <= 0.0) continue;
      PeriodicSolution sol = make_solution(p, n, x_star);
      if (std::abs(sol.mu - p.mu) > 1e-9 * std::max(1.0, std::abs(p.mu))) continue;
      if (sol.admissible && sol.stable) out.push_back(sol);
    }
  }
  return out;
}

struct BranchPoint {
  double mu;
  std::vector<PeriodicSolution> solutions;
};

// The analytic branch data behind the bifurcation diagrams: for each mu grid
// point, every admissible stable solution with period <= n_max.
inline std::vector<BranchPoint> branch_sweep(const MapParams& p, int n_max, double mu_lo,
                                             double mu_hi, int samples) {
  if (samples <= 0) return {};  // empty grid, empty table
  if (samples == 1) return {{mu_lo, solutions_at_mu(MapParams{p.tau, p.delta, p.chi, mu_lo}, n_max)}};
  std::vector<BranchPoint> table;
  table.reserve(static_cast<size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    MapParams q = p;
    q.mu = mu_lo + (mu_hi - mu_lo) * i / (samples - 1);
    table.push_back({q.mu, solutions_at_mu(q, n_max)});
  }
  return table;
}

}  // namespace grazesim
