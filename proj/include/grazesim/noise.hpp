#pragma once

// Deterministic, splittable generation of correlated Gaussian increments.
// A counter-based generator (Philox4x32-10) keyed on (seed, stream-id)
// drives an inverse-CDF normal transform, so identical (seed, stream-id)
// reproduce bit-identical sequences and distinct stream-ids give
// statistically independent ones.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "grazesim/smallmat.hpp"

namespace grazesim {

namespace detail {

struct PhiloxBlock {
  std::array<uint32_t, 4> c;
};

inline PhiloxBlock philox4x32_10(uint64_t counter, uint64_t stream_id, uint64_t seed) {
  uint32_t c0 = static_cast<uint32_t>(counter);
  uint32_t c1 = static_cast<uint32_t>(counter >> 32);
  uint32_t c2 = static_cast<uint32_t>(stream_id);
  uint32_t c3 = static_cast<uint32_t>(stream_id >> 32);
  uint32_t k0 = static_cast<uint32_t>(seed);
  uint32_t k1 = static_cast<uint32_t>(seed >> 32);
  for (int round = 0; round < 10; ++round) {
    const uint64_t p0 = 0xD2511F53ULL * c0;
    const uint64_t p1 = 0xCD9E8D57ULL * c2;
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
    c0 = hi1 ^ c1 ^ k0;
    c1 = lo1;
    c2 = hi0 ^ c3 ^ k1;
    c3 = lo0;
    k0 += 0x9E3779B9U;
    k1 += 0xBB67AE85U;
  }
  return {{c0, c1, c2, c3}};
}

inline uint64_t splitmix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Inverse standard-normal CDF: Acklam's rational approximation refined by
// one Halley step against erfc, accurate to a few ulp over (0,1).
inline double normal_icdf(double p) {
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement.
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

}  // namespace detail

// Single-owner stream of uniform/normal variates. Parallelism goes through
// split(); a consumed parent refuses further draws.
class NoiseStream {
 public:
  NoiseStream() = default;
  NoiseStream(uint64_t seed, uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {}

  uint64_t seed() const { return seed_; }
  uint64_t stream_id() const { return stream_id_; }

  uint64_t next_u64() {
    require_live();
    if (!have_half_) {
      block_ = detail::philox4x32_10(counter_++, stream_id_, seed_);
      have_half_ = true;
      return (static_cast<uint64_t>(block_.c[1]) << 32) | block_.c[0];
    }
    have_half_ = false;
    return (static_cast<uint64_t>(block_.c[3]) << 32) | block_.c[2];
  }

  // Uniform variate strictly inside (0, 1).
  double next_uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double next_normal() { return detail::normal_icdf(next_uniform()); }

  // Derives k independent child streams; the parent is consumed.
  std::vector<NoiseStream> split(size_t k) {
    require_live();
    if (k < 1) throw std::invalid_argument("NoiseStream::split: k must be >= 1");
    std::vector<NoiseStream> children;
    children.reserve(k);
    const uint64_t base = detail::splitmix64(stream_id_ ^ detail::splitmix64(counter_));
    for (size_t i = 0; i < k; ++i)
      children.emplace_back(seed_, detail::splitmix64(base + 0x9E3779B97F4A7C15ULL * (i + 1)));
    consumed_ = true;
    return children;
  }

 private:
  void require_live() const {
    if (consumed_) throw std::logic_error("NoiseStream: stream was consumed by split()");
  }

  uint64_t seed_ = 0;
  uint64_t stream_id_ = 0;
  uint64_t counter_ = 0;
  detail::PhiloxBlock block_{};
  bool have_half_ = false;
  bool consumed_ = false;
};

// Noise amplitude and covariance; the Cholesky factor of Theta is cached.
class NoiseSpec {
 public:
  NoiseSpec() : NoiseSpec(0.0, SymMat2::zero()) {}
  NoiseSpec(double eps, const SymMat2& theta) : eps_(eps), theta_(theta), chol_(chol2(theta)) {
    if (eps < 0.0) throw std::invalid_argument("NoiseSpec: eps must be >= 0");
    if (!theta.is_psd()) throw NotPSD("NoiseSpec: theta is not positive-semidefinite");
  }

  double eps() const { return eps_; }
  const SymMat2& theta() const { return theta_; }
  const Mat2& chol() const { return chol_; }

 private:
  double eps_;
  SymMat2 theta_;
  Mat2 chol_;
};

// One draw of xi ~ N(0, Theta). Callers apply the eps scaling.
inline Vec2 sample_xi(const NoiseSpec& spec, NoiseStream& stream) {
  const double z1 = stream.next_normal();
  const double z2 = stream.next_normal();
  const Mat2& l = spec.chol();
  return {l.m11 * z1, l.m21 * z1 + l.m22 * z2};
}

}  // namespace grazesim
