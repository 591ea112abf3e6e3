#pragma once

// Shared helpers for the unit and acceptance tests: tolerance checks and
// independent random generation (std::mt19937_64, deliberately distinct
// from the library's own generator so randomized oracles are not
// self-referential).

#include <cmath>
#include <random>

#include "grazesim/smallmat.hpp"

namespace testutil {

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline bool close_rel(double a, double b, double rtol) {
  return std::abs(a - b) <= rtol * std::max({1e-300, std::abs(a), std::abs(b)});
}

inline bool close_sym(const grazesim::SymMat2& a, const grazesim::SymMat2& b, double tol) {
  return (a - b).max_abs() <= tol;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline grazesim::Mat2 random_mat2(std::mt19937_64& rng, double scale = 1.0) {
  return {uniform(rng, -scale, scale), uniform(rng, -scale, scale),
          uniform(rng, -scale, scale), uniform(rng, -scale, scale)};
}

// Random matrix with spectral radius strictly below `radius`.
inline grazesim::Mat2 random_stable_mat2(std::mt19937_64& rng, double radius = 0.95) {
  for (;;) {
    grazesim::Mat2 m = random_mat2(rng);
    const auto ev = grazesim::eig2(m);
    const double rho = std::abs(ev[0]);
    if (rho < 1e-8) continue;
    const double target = uniform(rng, 0.1, radius);
    m = m * (target / rho);
    return m;
  }
}

// Random PSD matrix L L^T with entries O(scale^2).
inline grazesim::SymMat2 random_psd(std::mt19937_64& rng, double scale = 1.0) {
  const grazesim::Mat2 l = random_mat2(rng, scale);
  return {l.m11 * l.m11 + l.m12 * l.m12, l.m11 * l.m21 + l.m12 * l.m22,
          l.m21 * l.m21 + l.m22 * l.m22};
}

}  // namespace testutil
