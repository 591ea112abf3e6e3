#pragma once

// Deterministic and stochastic Nordmark map kernels and orbit iteration.
//
// The map acts on (x, y): left of the switching manifold (x <= 0) it is the
// affine map A (x,y)' + (0,1)' mu; right of it the square-root term kicks in,
// A (x, y - chi sqrt(x))' + (0,1)' mu. Both branches agree at x = 0.

#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

#include "grazesim/noise.hpp"
#include "grazesim/smallmat.hpp"

namespace grazesim {

struct State2 {
  double x = 0.0;
  double y = 0.0;
};

struct MapParams {
  double tau = 0.0;
  double delta = 0.0;
  int chi = 1;  // +1 or -1
  double mu = 0.0;

  MapParams() = default;
  MapParams(double tau_, double delta_, int chi_, double mu_)
      : tau(tau_), delta(delta_), chi(chi_), mu(mu_) {
    if (chi != 1 && chi != -1) throw std::invalid_argument("MapParams: chi must be +1 or -1");
  }

  Mat2 A() const { return {tau, 1.0, -delta, 0.0}; }

  // Both eigenvalues of A inside the unit circle; recorded, not enforced.
  bool attracting_grazing_orbit() const {
    return std::abs(delta) < 1.0 && std::abs(tau) < 1.0 + delta;
  }
};

inline State2 step_det(const MapParams& p, const State2& s) {
  double yy = s.y;
  if (s.x > 0.0) {
    yy -= p.chi * std::sqrt(s.x);
  }
  // x <= 0 takes the left branch; both branches coincide at x = 0.
  return {p.tau * s.x + yy, -p.delta * s.x + p.mu};
}

inline State2 step_stoch(const MapParams& p, const NoiseSpec& noise, NoiseStream& stream,
                         const State2& s) {
  State2 next = step_det(p, s);
  if (noise.eps() == 0.0) return next;  // exactly the deterministic path
  const Vec2 xi = sample_xi(noise, stream);
  next.x += noise.eps() * xi.x;
  next.y += noise.eps() * xi.y;
  return next;
}

struct FixedPoint {
  State2 point;
  bool admissible = false;  // x <= 0
};

// Fixed point of the left half-map, mu/(1 - tau + delta) * (1, 1 - tau).
inline FixedPoint left_fixed_point(const MapParams& p) {
  const double denom = 1.0 - p.tau + p.delta;
  if (std::abs(denom) < 1e-14)
    throw DegenerateDenominator("left_fixed_point: 1 - tau + delta vanishes");
  const State2 fp{p.mu / denom, (1.0 - p.tau) * p.mu / denom};
  return {fp, fp.x <= 0.0};
}

inline constexpr double kDivergenceGuard = 1e6;

// Streams `count` post-transient iterates into `sink(State2)`.
// The normal form is a local truncation; orbits escaping past the guard
// indicate parameters outside its validity neighbourhood.
template <typename Sink>
void iterate(const MapParams& p, const NoiseSpec& noise, NoiseStream& stream, State2 s0,
             uint64_t count, uint64_t discard, Sink&& sink) {
  if (count < 1) throw std::invalid_argument("iterate: count must be >= 1");
  State2 s = s0;
  for (uint64_t i = 0; i < discard + count; ++i) {
    s = step_stoch(p, noise, stream, s);
    if (std::abs(s.x) > kDivergenceGuard || std::abs(s.y) > kDivergenceGuard)
      throw Diverged("iterate: orbit left the map's validity neighbourhood");
    if (i >= discard) sink(s);
  }
}

inline std::vector<State2> iterate(const MapParams& p, const NoiseSpec& noise, NoiseStream& stream,
                                   State2 s0, uint64_t count, uint64_t discard) {
  std::vector<State2> orbit;
  orbit.reserve(count);
  iterate(p, noise, stream, s0, count, discard, [&](const State2& s) { orbit.push_back(s); });
  return orbit;
}

}  // namespace grazesim
