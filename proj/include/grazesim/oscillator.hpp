#pragma once

// Prestressed-support impact oscillator: SDE simulation with
// compliant-impact drift switching, Poincare-section extraction (real and
// virtual intersections), the closed-form left flow, and derivation of
// the normal-form data (tau, delta, chi, Theta) with the accompanying
// linear coordinate change.

#include <cmath>
#include <numbers>
#include <vector>

#include "grazesim/exitmap.hpp"
#include "grazesim/noise.hpp"
#include "grazesim/nordmark.hpp"
#include "grazesim/smallmat.hpp"

namespace grazesim {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct OscillatorParams {
  double k_osc = 5.0;
  double b_osc = 0.5;
  double k_supp = 10.0;
  double b_supp = 0.0;
  double d = 0.1;   // prestress gap
  double F = 0.0;   // forcing amplitude
  double eps = 0.0; // noise amplitude

  void validate() const {
    if (k_osc < 0.0 || b_osc < 0.0 || k_supp < 0.0 || b_supp < 0.0 || F < 0.0 || eps < 0.0)
      throw std::invalid_argument("OscillatorParams: stiffness/damping/forcing/noise must be >= 0");
    if (!(d > 0.0)) throw std::invalid_argument("OscillatorParams: prestress gap d must be positive");
    if (!(b_osc * b_osc / 4.0 < k_osc))
      throw std::invalid_argument("OscillatorParams: requires b_osc^2/4 < k_osc (complex multipliers)");
  }

  // Grazing forcing amplitude and the forcing phase at the grazing
  // tangency. The two-argument arctangent keeps the phase consistent on
  // both sides of k_osc = 1.
  double f_graz() const { return std::sqrt(b_osc * b_osc + (1.0 - k_osc) * (1.0 - k_osc)); }
  double t_graz() const { return std::atan2(b_osc, k_osc - 1.0); }
};

struct OscState {
  double u = 0.0;
  double udot = 0.0;
  double t = 0.0;
};

// Closed-form omega entries at time t for the oscillator's linearized
// flow (constant Jacobian, unit noise on the velocity only).
struct OmegaClosedForm {
  double w11 = 0.0, w12 = 0.0, w22 = 0.0;
};

inline OmegaClosedForm omega_closed_form(double k_osc, double b_osc, double t) {
  const double alpha = -b_osc / 2.0;
  const double beta = std::sqrt(k_osc - b_osc * b_osc / 4.0);
  const double e2at = std::exp(2.0 * alpha * t);
  const double c2bt = std::cos(2.0 * beta * t);
  const double s2bt = std::sin(2.0 * beta * t);
  // (e^{2 alpha t} - 1) / (4 alpha beta^2), with its alpha -> 0 limit.
  const double f1 = std::abs(alpha) > 1e-12 ? std::expm1(2.0 * alpha * t) / (4.0 * alpha * beta * beta)
                                            : t / (2.0 * beta * beta);
  OmegaClosedForm w;
  w.w11 = f1 - alpha * (e2at * c2bt - 1.0) / (4.0 * k_osc * beta * beta) -
          e2at * s2bt / (4.0 * k_osc * beta);
  w.w12 = -e2at * (c2bt - 1.0) / (4.0 * beta * beta);
  w.w22 = k_osc * f1 - alpha * (e2at * c2bt - 1.0) / (4.0 * beta * beta) + e2at * s2bt / (4.0 * beta);
  return w;
}

// Linearized flow of the non-impacting oscillator over one forcing
// period: constant Jacobian J, noise on the velocity component only.
inline LinearizedFlow<2> oscillator_linearized_flow(const OscillatorParams& p) {
  const SmallMat<2> j = [&] {
    SmallMat<2> m;
    m(0, 0) = 0.0;
    m(0, 1) = 1.0;
    m(1, 0) = -p.k_osc;
    m(1, 1) = -p.b_osc;
    return m;
  }();
  SmallMat<2> b;
  b(1, 1) = 1.0;
  return {[j](double) { return j; }, [b](double) { return b; }, kTwoPi};
}

// Normal-form data derived from the oscillator parameters, including the
// linear change of variables (u1, w1, eta) -> (x, y, mu).
struct DerivedNormalForm {
  double f_graz = 0.0;
  double t_graz = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  Mat2 a_hat;       // e^{2 pi J}
  Vec2 b_hat{};     // forcing response over one period, per unit eta
  double c = 0.0;   // square-root coefficient of the discontinuity map
  double tau = 0.0;
  double delta = 0.0;
  int chi = 1;
  OmegaClosedForm omega;  // at t = 2 pi
  SymMat2 theta_g_mat;
  SymMat2 theta;
  Mat3 change;      // (u1, w1, eta) -> (x, y, mu)
  Mat3 change_inv;

  MapParams map_params(double eta) const {
    // mu depends only on eta: third row of the change matrix.
    return {tau, delta, chi, change(2, 2) * eta};
  }
};

inline DerivedNormalForm derive_normal_form(const OscillatorParams& p) {
  p.validate();
  if (!(p.k_supp * p.d > 0.0))
    throw GrazingDegenerate("derive_normal_form: k_supp * d must be positive (c = 0)");
  DerivedNormalForm nf;
  nf.f_graz = p.f_graz();
  nf.t_graz = p.t_graz();
  nf.alpha = -p.b_osc / 2.0;
  nf.beta = std::sqrt(p.k_osc - p.b_osc * p.b_osc / 4.0);
  const Mat2 j{0.0, 1.0, -p.k_osc, -p.b_osc};
  nf.a_hat = mat2_exp(j, kTwoPi);
  nf.b_hat = {(1.0 - nf.a_hat.m11) / nf.f_graz, -nf.a_hat.m21 / nf.f_graz};
  nf.c = 2.0 * std::sqrt(2.0) * p.k_supp * p.d / (1.0 + p.k_supp * p.d);
  nf.tau = 2.0 * std::exp(kTwoPi * nf.alpha) * std::cos(kTwoPi * nf.beta);
  nf.delta = std::exp(2.0 * kTwoPi * nf.alpha);
  if (nf.a_hat.m12 == 0.0 || nf.c == 0.0)
    throw GrazingDegenerate("derive_normal_form: a12_hat or c vanishes, normal form undefined");
  nf.chi = nf.a_hat.m12 * nf.c > 0.0 ? 1 : -1;
  nf.omega = omega_closed_form(p.k_osc, p.b_osc, kTwoPi);
  // Section-level kick covariance; the remaining omega entries vanish
  // because the phase coordinate carries no noise, and the section slope
  // data are both 1 for this system.
  nf.theta_g_mat = {nf.omega.w11, nf.omega.w12, nf.omega.w22};
  nf.theta = theta_from_theta_g(nf.theta_g_mat, nf.a_hat.m12, nf.a_hat.m22, nf.c);

  const double scale = 1.0 / (nf.a_hat.m12 * nf.a_hat.m12 * nf.c * nf.c);
  const double mu_coef = (1.0 - nf.a_hat.m22) * nf.b_hat.x + nf.a_hat.m12 * nf.b_hat.y;
  nf.change = Mat3::identity();
  nf.change(0, 0) = scale;
  nf.change(0, 1) = 0.0;
  nf.change(0, 2) = 0.0;
  nf.change(1, 0) = -scale * nf.a_hat.m22;
  nf.change(1, 1) = scale * nf.a_hat.m12;
  nf.change(1, 2) = scale * nf.b_hat.x;
  nf.change(2, 0) = 0.0;
  nf.change(2, 1) = 0.0;
  nf.change(2, 2) = scale * mu_coef;
  if (std::abs(nf.change(2, 2)) < 1e-300 || std::abs(nf.change(1, 1)) < 1e-300)
    throw GrazingDegenerate("derive_normal_form: coordinate change not invertible");
  // Lower-triangular structure inverts in closed form.
  nf.change_inv = Mat3::identity();
  nf.change_inv(0, 0) = 1.0 / nf.change(0, 0);
  nf.change_inv(2, 2) = 1.0 / nf.change(2, 2);
  nf.change_inv(1, 0) = -nf.change(1, 0) / (nf.change(0, 0) * nf.change(1, 1));
  nf.change_inv(1, 1) = 1.0 / nf.change(1, 1);
  nf.change_inv(1, 2) = -nf.change(1, 2) / (nf.change(1, 1) * nf.change(2, 2));
  return nf;
}

inline Vec3 to_normal_form(const DerivedNormalForm& nf, double u1, double w1, double eta) {
  return {nf.change(0, 0) * u1,
          nf.change(1, 0) * u1 + nf.change(1, 1) * w1 + nf.change(1, 2) * eta,
          nf.change(2, 2) * eta};
}

inline Vec3 from_normal_form(const DerivedNormalForm& nf, double x, double y, double mu) {
  return {nf.change_inv(0, 0) * x,
          nf.change_inv(1, 0) * x + nf.change_inv(1, 1) * y + nf.change_inv(1, 2) * mu,
          nf.change_inv(2, 2) * mu};
}

// Exact evolution of the non-impacting (u < 0) deterministic flow for
// time dt: particular harmonic response plus e^{J dt} times the
// homogeneous remainder.
inline OscState left_flow_closed(const OscillatorParams& p, const OscState& s, double dt) {
  double kap1 = 0.0, kap2 = 0.0;
  if (p.F != 0.0) {
    const double dd = (p.k_osc - 1.0) * (p.k_osc - 1.0) + p.b_osc * p.b_osc;
    if (dd < 1e-14)
      throw std::invalid_argument("left_flow_closed: resonant forcing (k_osc = 1, b_osc = 0)");
    kap1 = p.F * (p.k_osc - 1.0) / dd;
    kap2 = p.F * p.b_osc / dd;
  }
  const auto particular = [&](double t) {
    return Vec2{-1.0 + kap1 * std::cos(t) + kap2 * std::sin(t),
                -kap1 * std::sin(t) + kap2 * std::cos(t)};
  };
  const Vec2 p0 = particular(s.t);
  const Vec2 h0{s.u - p0.x, s.udot - p0.y};
  const Mat2 j{0.0, 1.0, -p.k_osc, -p.b_osc};
  const Vec2 h1 = mat2_exp(j, dt) * h0;
  const Vec2 p1 = particular(s.t + dt);
  return {p1.x + h1.x, p1.y + h1.y, s.t + dt};
}

struct OscEvent {
  double t = 0.0;
  double u = 0.0;
  double udot = 0.0;
  int direction = 0;  // +1 upward crossing of u = 0, -1 downward
};

namespace detail {

inline Vec2 osc_drift(const OscillatorParams& p, double u, double udot, double t) {
  double acc = -p.k_osc * (u + 1.0) - p.b_osc * udot + p.F * std::cos(t);
  if (u > 0.0) acc += -p.b_supp * udot - p.k_supp * (u + p.d);
  return {udot, acc};
}

// Deterministic within-step interpolant: Euler substeps of the
// branch-switching drift from the step's start state. Returns u at
// fraction theta of the step of width h.
inline double step_interpolant_u(const OscillatorParams& p, const OscState& s, double h,
                                 double theta, int substeps) {
  double u = s.u, v = s.udot, t = s.t;
  const double dt = theta * h / substeps;
  for (int i = 0; i < substeps; ++i) {
    const Vec2 a = osc_drift(p, u, v, t);
    u += dt * a.x;
    v += dt * a.y;
    t += dt;
  }
  return u;
}

}  // namespace detail

// Euler--Maruyama on the impact oscillator, with crossings of u = 0
// located on the deterministic within-step interpolant. on_state is
// called with the initial state and after every step; on_event with each
// located crossing. Throws StepTooLarge if one step crosses u = 0 more
// than once under interpolation refinement.
template <class StateSink, class EventSink>
inline void simulate_sde(const OscillatorParams& p, NoiseStream& stream, OscState s,
                         double t_end, double h, StateSink&& on_state, EventSink&& on_event) {
  p.validate();
  if (!(h > 0.0)) throw std::invalid_argument("simulate_sde: step h must be positive");
  constexpr int kRefine = 16;
  const double sqrt_h = std::sqrt(h);
  on_state(s);
  while (s.t < t_end - 0.5 * h) {
    const Vec2 a = detail::osc_drift(p, s.u, s.udot, s.t);
    OscState next{s.u + h * a.x, s.udot + h * a.y + p.eps * sqrt_h * stream.next_normal(), s.t + h};
    if ((s.u > 0.0) != (next.u > 0.0)) {
      // Count crossings on the refined deterministic interpolant.
      int crossings = 0;
      double lo = 0.0, hi = 1.0;
      double prev_u = s.u;
      for (int i = 1; i <= kRefine; ++i) {
        const double theta = static_cast<double>(i) / kRefine;
        const double ui = detail::step_interpolant_u(p, s, h, theta, i);
        if ((prev_u > 0.0) != (ui > 0.0)) {
          ++crossings;
          lo = static_cast<double>(i - 1) / kRefine;
          hi = theta;
        }
        prev_u = ui;
      }
      if (crossings > 1)
        throw StepTooLarge("simulate_sde: step crosses u = 0 more than once; reduce h");
      if (crossings == 1) {
        const bool lo_pos = detail::step_interpolant_u(p, s, h, lo, kRefine) > 0.0;
        for (int it = 0; it < 80 && hi - lo > 1e-16; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double um = detail::step_interpolant_u(p, s, h, mid, kRefine);
          if (std::abs(um) < 1e-10) {
            lo = hi = mid;
            break;
          }
          if ((um > 0.0) == lo_pos) lo = mid; else hi = mid;
        }
        const double theta = 0.5 * (lo + hi);
        // Velocity at the crossing from the same interpolant's final slope.
        double uu = s.u, vv = s.udot, tt = s.t;
        const double dt = theta * h / kRefine;
        for (int i = 0; i < kRefine; ++i) {
          const Vec2 ai = detail::osc_drift(p, uu, vv, tt);
          uu += dt * ai.x;
          vv += dt * ai.y;
          tt += dt;
        }
        on_event(OscEvent{s.t + theta * h, uu, vv, next.u > 0.0 ? 1 : -1});
      }
    }
    s = next;
    on_state(s);
  }
}

struct OscPath {
  std::vector<OscState> states;
  std::vector<OscEvent> events;
};

inline OscPath simulate_sde(const OscillatorParams& p, NoiseStream& stream, const OscState& s0,
                            double t_end, double h) {
  OscPath path;
  simulate_sde(p, stream, s0, t_end, h,
               [&](const OscState& s) { path.states.push_back(s); },
               [&](const OscEvent& e) { path.events.push_back(e); });
  return path;
}

// Phase relative to the grazing phase, wrapped to (-pi, pi].
inline double wrap_phase(double t, double t_graz) {
  double w = std::fmod(t - t_graz, kTwoPi);
  if (w > std::numbers::pi) w -= kTwoPi;
  if (w <= -std::numbers::pi) w += kTwoPi;
  return w;
}

namespace detail {

// Bisect the closed-form left flow from state s for udot = 0 within
// [0, dt_max]; requires a sign change of udot across the interval.
inline OscState left_flow_udot_zero(const OscillatorParams& p, const OscState& s, double dt_max) {
  double lo = 0.0, hi = dt_max;
  const bool lo_pos = s.udot > 0.0;
  for (int it = 0; it < 80 && hi - lo > 1e-15 * std::max(1.0, dt_max); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double vm = left_flow_closed(p, s, mid).udot;
    if ((vm > 0.0) == lo_pos) lo = mid; else hi = mid;
  }
  return left_flow_closed(p, s, 0.5 * (lo + hi));
}

}  // namespace detail

// Streaming detector for the section Pi: local minima of u with u < -1,
// refined on the closed-form left flow within the detecting step.
class PiCollector {
 public:
  struct Point {
    double t = 0.0;
    double u = 0.0;
  };

  explicit PiCollector(const OscillatorParams& p) : p_(p) {}

  void push(const OscState& s) {
    if (has_prev_ && prev_.udot < 0.0 && s.udot >= 0.0 && prev_.u < -1.0) {
      const OscState at = detail::left_flow_udot_zero(p_, prev_, s.t - prev_.t);
      points_.push_back({at.t, at.u});
    }
    prev_ = s;
    has_prev_ = true;
  }

  const std::vector<Point>& points() const { return points_; }

 private:
  OscillatorParams p_;
  OscState prev_;
  bool has_prev_ = false;
  std::vector<Point> points_;
};

inline std::vector<PiCollector::Point> section_pi(const OscillatorParams& p, const OscPath& path) {
  PiCollector c(p);
  for (const OscState& s : path.states) c.push(s);
  return c.points();
}

// Streaming detector for the section Pi': udot = 0 local maxima of u.
// Real points come from the left flow (u < 0); each upward crossing of
// u = 0 instead contributes a virtual point obtained by extending the
// deterministic left flow past the crossing to its udot = 0 turning
// point. Real maxima are suppressed while the mass is in contact.
class PiPrimeCollector {
 public:
  struct Point {
    double u1 = 0.0;
    double w1 = 0.0;   // phase relative to grazing, wrapped to (-pi, pi]
    bool virtual_point = false;
  };

  PiPrimeCollector(const OscillatorParams& p, double t_graz) : p_(p), t_graz_(t_graz) {}

  void push_state(const OscState& s) {
    if (has_prev_ && !in_contact_ && prev_.udot > 0.0 && s.udot <= 0.0 && prev_.u < 0.0 &&
        s.u < 0.0) {
      const OscState at = detail::left_flow_udot_zero(p_, prev_, s.t - prev_.t);
      points_.push_back({at.u, wrap_phase(at.t, t_graz_), false});
    }
    prev_ = s;
    has_prev_ = true;
  }

  void push_event(const OscEvent& e) {
    if (e.direction > 0) {
      in_contact_ = true;
      // Extend the deterministic left flow until the velocity turns;
      // scan ahead in coarse increments and bisect the bracketing one.
      const OscState start{0.0, e.udot, e.t};
      const double scan = kTwoPi / 256.0;
      double dt = 0.0;
      double v_prev = start.udot;
      for (int i = 1; i <= 512; ++i) {
        const double v = left_flow_closed(p_, start, i * scan).udot;
        if (v_prev > 0.0 && v <= 0.0) {
          dt = i * scan;
          break;
        }
        v_prev = v;
      }
      if (dt > 0.0) {
        const OscState brk{0.0, e.udot, e.t};
        const OscState before = left_flow_closed(p_, brk, dt - scan);
        const OscState at = detail::left_flow_udot_zero(p_, before, scan);
        points_.push_back({at.u, wrap_phase(at.t, t_graz_), true});
      }
    } else {
      in_contact_ = false;
    }
  }

  const std::vector<Point>& points() const { return points_; }

 private:
  OscillatorParams p_;
  double t_graz_;
  OscState prev_;
  bool has_prev_ = false;
  bool in_contact_ = false;
  std::vector<Point> points_;
};

inline std::vector<PiPrimeCollector::Point> section_pi_prime(const OscillatorParams& p,
                                                             double t_graz, const OscPath& path) {
  PiPrimeCollector c(p, t_graz);
  size_t ei = 0;
  for (const OscState& s : path.states) {
    while (ei < path.events.size() && path.events[ei].t <= s.t) c.push_event(path.events[ei++]);
    c.push_state(s);
  }
  while (ei < path.events.size()) c.push_event(path.events[ei++]);
  return c.points();
}

}  // namespace grazesim
