#pragma once

// Monte Carlo estimation of invariant densities and the empirical
// statistics used to validate them: 2D histograms, per-cluster Gaussian
// fits, period-return fractions, marginal standard deviations, and the
// analytic Gaussian-mixture approximation with a grid-level
// total-variation comparison.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "grazesim/covariance.hpp"
#include "grazesim/nordmark.hpp"
#include "grazesim/periodic.hpp"

namespace grazesim {

struct Histogram2D {
  double x_lo = 0.0, x_hi = 1.0;
  double y_lo = 0.0, y_hi = 1.0;
  int nx = 512, ny = 512;
  std::vector<std::uint64_t> counts;  // row-major, nx * ny
  std::uint64_t total = 0;
  std::uint64_t out_of_range = 0;

  Histogram2D() = default;
  Histogram2D(double xlo, double xhi, double ylo, double yhi, int nx_, int ny_)
      : x_lo(xlo), x_hi(xhi), y_lo(ylo), y_hi(yhi), nx(nx_), ny(ny_) {
    if (!(x_hi > x_lo) || !(y_hi > y_lo) || nx < 1 || ny < 1)
      throw std::invalid_argument("Histogram2D: empty range or non-positive bin count");
    counts.assign(static_cast<size_t>(nx) * static_cast<size_t>(ny), 0);
  }

  void add(double x, double y) {
    ++total;
    const int ix = static_cast<int>(std::floor((x - x_lo) / (x_hi - x_lo) * nx));
    const int iy = static_cast<int>(std::floor((y - y_lo) / (y_hi - y_lo) * ny));
    if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) {
      ++out_of_range;
      return;
    }
    ++counts[static_cast<size_t>(ix) * static_cast<size_t>(ny) + static_cast<size_t>(iy)];
  }

  // Fraction of all samples landing in bin (ix, iy); the normalized view
  // sums to (total - out_of_range) / total.
  double probability(int ix, int iy) const {
    if (total == 0) return 0.0;
    return static_cast<double>(
               counts[static_cast<size_t>(ix) * static_cast<size_t>(ny) + static_cast<size_t>(iy)]) /
           static_cast<double>(total);
  }
  double x_center(int ix) const { return x_lo + (ix + 0.5) * (x_hi - x_lo) / nx; }
  double y_center(int iy) const { return y_lo + (iy + 0.5) * (y_hi - y_lo) / ny; }
};

// Streaming mean/covariance accumulator (Welford) for orbit samples.
struct MomentAccumulator {
  std::uint64_t n = 0;
  double mean_x = 0.0, mean_y = 0.0;
  double m_xx = 0.0, m_xy = 0.0, m_yy = 0.0;

  void push(const State2& s) {
    ++n;
    const double dx = s.x - mean_x;
    const double dy = s.y - mean_y;
    mean_x += dx / static_cast<double>(n);
    mean_y += dy / static_cast<double>(n);
    m_xx += dx * (s.x - mean_x);
    m_xy += dx * (s.y - mean_y);
    m_yy += dy * (s.y - mean_y);
  }
  State2 mean() const { return {mean_x, mean_y}; }
  SymMat2 covariance() const {
    if (n < 2) return {0.0, 0.0, 0.0};
    const double inv = 1.0 / static_cast<double>(n - 1);
    return {m_xx * inv, m_xy * inv, m_yy * inv};
  }
};

// Axis ranges mean +/- 5 std from a probe orbit; used when the caller
// does not fix the histogram window.
struct AxisRanges {
  double x_lo, x_hi, y_lo, y_hi;
};

inline AxisRanges auto_range(const MapParams& p, const NoiseSpec& noise, NoiseStream& stream,
                             State2 s0, std::uint64_t probe_iterates, std::uint64_t discard) {
  MomentAccumulator acc;
  State2 s = s0;
  for (std::uint64_t i = 0; i < discard; ++i) s = step_stoch(p, noise, stream, s);
  for (std::uint64_t i = 0; i < probe_iterates; ++i) {
    s = step_stoch(p, noise, stream, s);
    acc.push(s);
  }
  const SymMat2 cov = acc.covariance();
  const double sx = std::max(std::sqrt(std::max(cov.s11, 0.0)), 1e-12);
  const double sy = std::max(std::sqrt(std::max(cov.s22, 0.0)), 1e-12);
  return {acc.mean_x - 5.0 * sx, acc.mean_x + 5.0 * sx, acc.mean_y - 5.0 * sy,
          acc.mean_y + 5.0 * sy};
}

inline Histogram2D estimate_density(const MapParams& p, const NoiseSpec& noise, NoiseStream& stream,
                                    State2 s0, std::uint64_t iterates, std::uint64_t discard,
                                    Histogram2D grid) {
  if (iterates < 1) throw std::invalid_argument("estimate_density: iterates must be >= 1");
  State2 s = s0;
  for (std::uint64_t i = 0; i < discard; ++i) s = step_stoch(p, noise, stream, s);
  for (std::uint64_t i = 0; i < iterates; ++i) {
    s = step_stoch(p, noise, stream, s);
    if (std::abs(s.x) > kDivergenceGuard || std::abs(s.y) > kDivergenceGuard)
      throw Diverged("estimate_density: orbit escaped the divergence guard");
    grid.add(s.x, s.y);
  }
  return grid;
}

struct ClusterStats {
  State2 center{};  // assigned deterministic orbit point
  State2 mean{};
  SymMat2 cov{};
  double weight = 0.0;
};

struct ClusterReport {
  std::vector<ClusterStats> clusters;
  double unassigned = 0.0;  // weights + unassigned sum to 1 exactly
};

// Default assignment radius: half the minimum pairwise distance between
// the solution's points (unambiguous for well-separated clusters). A
// non-positive `radius` keeps this default; infinity disables the cutoff.
inline double default_cluster_radius(const std::vector<State2>& points) {
  double dmin = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < points.size(); ++i)
    for (size_t j = i + 1; j < points.size(); ++j) {
      const double dx = points[i].x - points[j].x;
      const double dy = points[i].y - points[j].y;
      dmin = std::min(dmin, std::hypot(dx, dy));
    }
  return std::isfinite(dmin) ? 0.5 * dmin : std::numeric_limits<double>::infinity();
}

// Streams an orbit and attributes each iterate to the nearest solution
// point within the assignment radius.
class ClusterAccumulator {
 public:
  ClusterAccumulator(std::vector<State2> centers, double radius)
      : centers_(std::move(centers)),
        radius_(radius > 0.0 ? radius : default_cluster_radius(centers_)),
        acc_(centers_.size()) {
    if (centers_.empty()) throw std::invalid_argument("ClusterAccumulator: no centers");
  }

  void push(const State2& s) {
    ++total_;
    size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < centers_.size(); ++i) {
      const double d = std::hypot(s.x - centers_[i].x, s.y - centers_[i].y);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    if (best_d <= radius_)
      acc_[best].push(s);
    else
      ++unassigned_;
  }

  ClusterReport report() const {
    ClusterReport r;
    const double tot = total_ > 0 ? static_cast<double>(total_) : 1.0;
    for (size_t i = 0; i < centers_.size(); ++i)
      r.clusters.push_back({centers_[i], acc_[i].mean(), acc_[i].covariance(),
                            static_cast<double>(acc_[i].n) / tot});
    r.unassigned = static_cast<double>(unassigned_) / tot;
    return r;
  }

 private:
  std::vector<State2> centers_;
  double radius_;
  std::vector<MomentAccumulator> acc_;
  std::uint64_t total_ = 0;
  std::uint64_t unassigned_ = 0;
};

inline ClusterReport cluster_stats(const MapParams& p, const NoiseSpec& noise, NoiseStream& stream,
                                   State2 s0, std::uint64_t iterates, std::uint64_t discard,
                                   const PeriodicSolution& solution, double radius = 0.0) {
  ClusterAccumulator acc(solution.points, radius);
  State2 s = s0;
  for (std::uint64_t i = 0; i < discard; ++i) s = step_stoch(p, noise, stream, s);
  for (std::uint64_t i = 0; i < iterates; ++i) {
    s = step_stoch(p, noise, stream, s);
    acc.push(s);
  }
  return acc.report();
}

// Over all orbit points with x > 0, the fraction whose next return to
// x > 0 takes exactly n steps.
inline double period_fraction(const MapParams& p, const NoiseSpec& noise, NoiseStream& stream,
                              State2 s0, int n, std::uint64_t iterates,
                              std::uint64_t discard = 10000) {
  if (iterates < 10000) throw std::invalid_argument("period_fraction: iterates must be >= 1e4");
  State2 s = s0;
  for (std::uint64_t i = 0; i < discard; ++i) s = step_stoch(p, noise, stream, s);
  std::uint64_t gaps = 0, hits = 0;
  std::int64_t last_right = -1;
  for (std::uint64_t i = 0; i < iterates; ++i) {
    s = step_stoch(p, noise, stream, s);
    if (s.x > 0.0) {
      if (last_right >= 0) {
        ++gaps;
        if (static_cast<std::int64_t>(i) - last_right == n) ++hits;
      }
      last_right = static_cast<std::int64_t>(i);
    }
  }
  if (last_right < 0) throw NoReturns("period_fraction: orbit never entered the right half-plane");
  if (gaps == 0) throw NoReturns("period_fraction: only one right-half-plane visit observed");
  return static_cast<double>(hits) / static_cast<double>(gaps);
}

struct MarginalStd {
  double eps = 0.0;
  double std_x = 0.0;
  double std_y = 0.0;
};

// Stationary marginal standard deviations for each noise amplitude; each
// entry runs on its own split sub-stream so the sweep is reproducible
// independent of ordering.
inline std::vector<MarginalStd> marginal_std_sweep(const MapParams& p, const SymMat2& theta,
                                                   NoiseStream& stream,
                                                   const std::vector<double>& eps_list,
                                                   State2 s0, std::uint64_t iterates,
                                                   std::uint64_t discard = 10000) {
  std::vector<MarginalStd> out;
  out.reserve(eps_list.size());
  std::vector<NoiseStream> streams = stream.split(eps_list.size());
  for (size_t k = 0; k < eps_list.size(); ++k) {
    const double eps = eps_list[k];
    if (!(eps > 0.0)) throw std::invalid_argument("marginal_std_sweep: all eps must be positive");
    const NoiseSpec noise(eps, theta);
    MomentAccumulator acc;
    State2 s = s0;
    for (std::uint64_t i = 0; i < discard; ++i) s = step_stoch(p, noise, streams[k], s);
    for (std::uint64_t i = 0; i < iterates; ++i) {
      s = step_stoch(p, noise, streams[k], s);
      acc.push(s);
    }
    const SymMat2 cov = acc.covariance();
    out.push_back({eps, std::sqrt(std::max(cov.s11, 0.0)), std::sqrt(std::max(cov.s22, 0.0))});
  }
  return out;
}

struct GaussianComponent {
  State2 mean{};
  SymMat2 cov{};
};

struct GaussianMixture {
  std::vector<GaussianComponent> components;  // equal weights 1/n

  double pdf(double x, double y) const {
    double acc = 0.0;
    for (const GaussianComponent& g : components) {
      const double det = g.cov.s11 * g.cov.s22 - g.cov.s12 * g.cov.s12;
      if (det <= 0.0) continue;  // degenerate component carries no density
      const double dx = x - g.mean.x;
      const double dy = y - g.mean.y;
      const double q = (g.cov.s22 * dx * dx - 2.0 * g.cov.s12 * dx * dy + g.cov.s11 * dy * dy) / det;
      acc += std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
    }
    return components.empty() ? 0.0 : acc / static_cast<double>(components.size());
  }
};

// Means from the deterministic solution, covariances eps^2 Lambda^(i),
// equal weights.
inline GaussianMixture mixture_from_chain(const PeriodicSolution& solution,
                                          const CovarianceChain& chain, double eps) {
  if (static_cast<int>(solution.points.size()) != chain.n ||
      chain.lambda.size() != solution.points.size())
    throw std::invalid_argument("mixture_from_chain: chain length must equal the solution period");
  GaussianMixture mix;
  mix.components.reserve(solution.points.size());
  for (size_t i = 0; i < solution.points.size(); ++i)
    mix.components.push_back({solution.points[i], eps * eps * chain.lambda[i]});
  return mix;
}

// Total-variation distance on the histogram grid; the mixture's mass per
// bin is integrated by a 2-point Gauss rule per axis.
inline double tv_distance(const Histogram2D& hist, const GaussianMixture& mix) {
  const double hx = (hist.x_hi - hist.x_lo) / hist.nx;
  const double hy = (hist.y_hi - hist.y_lo) / hist.ny;
  const double off = 0.5 / std::sqrt(3.0);  // Gauss-Legendre nodes at center +/- off*width
  double acc = 0.0;
  double mix_mass = 0.0;
  for (int ix = 0; ix < hist.nx; ++ix) {
    const double xc = hist.x_center(ix);
    for (int iy = 0; iy < hist.ny; ++iy) {
      const double yc = hist.y_center(iy);
      double m = 0.0;
      for (int a = -1; a <= 1; a += 2)
        for (int b = -1; b <= 1; b += 2) m += mix.pdf(xc + a * off * hx, yc + b * off * hy);
      m *= 0.25 * hx * hy;
      mix_mass += m;
      acc += std::abs(hist.probability(ix, iy) - m);
    }
  }
  // Mass outside the grid, from either distribution, also separates them.
  const double hist_out =
      hist.total > 0
          ? static_cast<double>(hist.out_of_range) / static_cast<double>(hist.total)
          : 0.0;
  const double mix_out = std::max(0.0, 1.0 - mix_mass);
  return 0.5 * (acc + hist_out + mix_out);
}

}  // namespace grazesim
