#include <doctest.h>

#include <cmath>

#include "grazesim/density.hpp"
#include "test_util.hpp"

using namespace grazesim;
using testutil::close;
using testutil::close_rel;

namespace {

const MapParams kBase{0.5, 0.05, 1, 0.005};  // has the unique period-4 orbit
const SymMat2 kTheta{2.0, 0.5, 1.0};

PeriodicSolution period4_solution() {
  for (const PeriodicSolution& s : solutions_at_mu(kBase, 5)) {
    if (s.impacting && s.stable && s.admissible) return s;
  }
  throw std::logic_error("period-4 solution not found");
}

}  // namespace

TEST_CASE("Histogram2D: binning, probability, and validation") {
  Histogram2D h(0.0, 1.0, 0.0, 1.0, 4, 4);
  h.add(0.1, 0.1);
  h.add(0.1, 0.12);
  h.add(0.9, 0.9);
  h.add(2.0, 0.5);  // out of range
  CHECK(h.total == 4);
  CHECK(h.out_of_range == 1);
  CHECK(close(h.probability(0, 0), 0.5, 1e-15));
  CHECK(close(h.probability(3, 3), 0.25, 1e-15));
  CHECK(close(h.x_center(0), 0.125, 1e-15));
  CHECK_THROWS(Histogram2D(1.0, 0.0, 0.0, 1.0, 4, 4));
  CHECK_THROWS(Histogram2D(0.0, 1.0, 0.0, 1.0, 0, 4));
}

TEST_CASE("MomentAccumulator: matches two-pass statistics") {
  std::mt19937_64 rng(41);
  std::vector<State2> pts;
  MomentAccumulator acc;
  for (int i = 0; i < 5000; ++i) {
    const State2 s{testutil::uniform(rng, -2.0, 3.0), testutil::uniform(rng, 0.0, 1.0)};
    pts.push_back(s);
    acc.push(s);
  }
  double mx = 0.0, my = 0.0;
  for (const State2& s : pts) {
    mx += s.x;
    my += s.y;
  }
  mx /= pts.size();
  my /= pts.size();
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const State2& s : pts) {
    sxx += (s.x - mx) * (s.x - mx);
    sxy += (s.x - mx) * (s.y - my);
    syy += (s.y - my) * (s.y - my);
  }
  const double inv = 1.0 / (pts.size() - 1.0);
  CHECK(close_rel(acc.mean().x, mx, 1e-12));
  CHECK(close_rel(acc.mean().y, my, 1e-12));
  CHECK(close_rel(acc.covariance().s11, sxx * inv, 1e-10));
  CHECK(close(acc.covariance().s12, sxy * inv, 1e-10));
  CHECK(close_rel(acc.covariance().s22, syy * inv, 1e-10));
}

TEST_CASE("estimate_density: noiseless contracting orbit lands in a single bin") {
  const MapParams p{0.5, 0.05, 1, -0.01};  // left fixed point attracts
  const FixedPoint fp = left_fixed_point(p);
  const NoiseSpec noise(0.0, kTheta);
  NoiseStream stream(21, 0);
  const Histogram2D h = estimate_density(p, noise, stream, {fp.point.x + 1e-3, fp.point.y}, 20000,
                                         5000, Histogram2D(-0.1, 0.1, -0.1, 0.1, 64, 64));
  CHECK(h.out_of_range == 0);
  std::uint64_t occupied = 0;
  for (std::uint64_t c : h.counts) occupied += (c > 0);
  CHECK(occupied == 1);
}

TEST_CASE("estimate_density: identical seeds give identical histograms") {
  const NoiseSpec noise(0.01, kTheta);
  const Histogram2D grid(-0.2, 0.2, -0.2, 0.2, 32, 32);
  NoiseStream s1(99, 3), s2(99, 3);
  const Histogram2D h1 = estimate_density(kBase, noise, s1, {0.0, 0.0}, 50000, 1000, grid);
  const Histogram2D h2 = estimate_density(kBase, noise, s2, {0.0, 0.0}, 50000, 1000, grid);
  CHECK(h1.counts == h2.counts);
  CHECK(h1.out_of_range == h2.out_of_range);

  NoiseStream s3(100, 3);
  const Histogram2D h3 = estimate_density(kBase, noise, s3, {0.0, 0.0}, 50000, 1000, grid);
  CHECK(h3.counts != h1.counts);
}

TEST_CASE("cluster_stats: small noise concentrates on the orbit points with equal weights") {
  const PeriodicSolution sol = period4_solution();
  const double eps = 1e-6;
  const NoiseSpec noise(eps, kTheta);
  NoiseStream stream(22, 0);
  const ClusterReport rep =
      cluster_stats(kBase, noise, stream, sol.points[0], 40000, 2000, sol);
  REQUIRE(rep.clusters.size() == 4);
  double weight_sum = rep.unassigned;
  for (const ClusterStats& c : rep.clusters) {
    weight_sum += c.weight;
    CHECK(close(c.weight, 0.25, 1e-3));
    CHECK(close(c.mean.x, c.center.x, 1e-4));
    CHECK(close(c.mean.y, c.center.y, 1e-4));
    CHECK(c.cov.s11 >= 0.0);
    CHECK(c.cov.s22 >= 0.0);
  }
  CHECK(close(rep.unassigned, 0.0, 1e-12));
  // Weights and the unassigned fraction account for every iterate.
  CHECK(close(weight_sum, 1.0, 1e-12));
}

TEST_CASE("cluster_stats: empirical covariance matches the analytic chain") {
  const PeriodicSolution sol = period4_solution();
  const CovarianceChain chain = covariance_chain(kBase, sol.n, sol.x_star, kTheta);
  const double eps = 1e-5;
  const NoiseSpec noise(eps, kTheta);
  NoiseStream stream(23, 0);
  const ClusterReport rep =
      cluster_stats(kBase, noise, stream, sol.points[0], 400000, 5000, sol);
  REQUIRE(rep.clusters.size() == 4);
  for (size_t i = 0; i < rep.clusters.size(); ++i) {
    const SymMat2 predicted = chain.lambda[i] * (eps * eps);
    CHECK(close_rel(rep.clusters[i].cov.s11, predicted.s11, 0.05));
    CHECK(close_rel(rep.clusters[i].cov.s22, predicted.s22, 0.05));
    CHECK(close(rep.clusters[i].cov.s12, predicted.s12,
                0.05 * std::sqrt(predicted.s11 * predicted.s22)));
  }
}

TEST_CASE("default_cluster_radius: half the minimum pairwise distance") {
  const std::vector<State2> pts{{0.0, 0.0}, {1.0, 0.0}, {0.0, 3.0}};
  CHECK(close(default_cluster_radius(pts), 0.5, 1e-15));
  CHECK(std::isinf(default_cluster_radius({{1.0, 2.0}})));
}

TEST_CASE("period_fraction: noiseless period-4 orbit returns 1") {
  const PeriodicSolution sol = period4_solution();
  const NoiseSpec noise(0.0, kTheta);
  NoiseStream stream(24, 0);
  const double frac =
      period_fraction(kBase, noise, stream, sol.points[0], sol.n, 100000, 1000);
  CHECK(frac == 1.0);
  NoiseStream stream2(24, 0);
  const double frac3 =
      period_fraction(kBase, noise, stream2, sol.points[0], sol.n - 1, 100000, 1000);
  CHECK(frac3 == 0.0);
}

TEST_CASE("period_fraction: orbit that never impacts throws") {
  const MapParams p{0.5, 0.05, 1, -0.01};
  const NoiseSpec noise(0.0, kTheta);
  NoiseStream stream(25, 0);
  CHECK_THROWS_AS(period_fraction(p, noise, stream, {-0.05, 0.0}, 4, 20000, 1000), NoReturns);
  CHECK_THROWS(period_fraction(kBase, noise, stream, {0.0, 0.0}, 4, 100, 0));
}

TEST_CASE("marginal_std_sweep: standard deviation scales linearly in eps") {
  // At a non-impacting fixed point the map is linear, so the stationary
  // marginal deviations are exactly proportional to eps.
  const MapParams p{0.5, 0.05, 1, -0.01};
  const FixedPoint fp = left_fixed_point(p);
  NoiseStream stream(26, 0);
  const std::vector<double> eps_list{5e-4, 1e-3};
  const auto sweep = marginal_std_sweep(p, kTheta, stream, eps_list, fp.point, 400000, 5000);
  REQUIRE(sweep.size() == 2);
  CHECK(sweep[0].eps == eps_list[0]);
  CHECK(close_rel(sweep[1].std_x, 2.0 * sweep[0].std_x, 0.01));
  CHECK(close_rel(sweep[1].std_y, 2.0 * sweep[0].std_y, 0.01));
  CHECK_THROWS(marginal_std_sweep(p, kTheta, stream, {0.0}, fp.point, 20000, 0));
}

TEST_CASE("marginal_std_sweep: non-impacting fixed point gives the stationary linear response") {
  // At a stable left fixed point the map is linear, so the stationary
  // covariance is eps^2 theta_inf and the marginals follow exactly.
  const MapParams p{0.5, 0.05, 1, -0.01};
  const FixedPoint fp = left_fixed_point(p);
  const SymMat2 inf = theta_inf(p.tau, p.delta, kTheta);
  NoiseStream stream(27, 0);
  const std::vector<double> eps_list{1e-3};
  const auto sweep = marginal_std_sweep(p, kTheta, stream, eps_list, fp.point, 500000, 5000);
  CHECK(close_rel(sweep[0].std_x, 1e-3 * std::sqrt(inf.s11), 0.02));
  CHECK(close_rel(sweep[0].std_y, 1e-3 * std::sqrt(inf.s22), 0.02));
}

TEST_CASE("GaussianMixture: single-component pdf integrates to one over a 6-sigma box") {
  GaussianMixture mix;
  mix.components.push_back({{0.3, -0.2}, {4e-4, 1e-4, 2.5e-4}});
  const double sx = std::sqrt(4e-4), sy = std::sqrt(2.5e-4);
  const int n = 400;
  const double hx = 12.0 * sx / n, hy = 12.0 * sy / n;
  double mass = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      mass += mix.pdf(0.3 - 6.0 * sx + (i + 0.5) * hx, -0.2 - 6.0 * sy + (j + 0.5) * hy) * hx * hy;
  CHECK(close(mass, 1.0, 1e-3));
}

TEST_CASE("mixture_from_chain: component count/means and length validation") {
  const PeriodicSolution sol = period4_solution();
  const CovarianceChain chain = covariance_chain(kBase, sol.n, sol.x_star, kTheta);
  const double eps = 0.01;
  const GaussianMixture mix = mixture_from_chain(sol, chain, eps);
  REQUIRE(mix.components.size() == 4);
  for (size_t i = 0; i < 4; ++i) {
    CHECK(mix.components[i].mean.x == sol.points[i].x);
    CHECK(close_rel(mix.components[i].cov.s11, eps * eps * chain.lambda[i].s11, 1e-14));
  }
  CovarianceChain bad = chain;
  bad.lambda.pop_back();
  bad.n = 3;
  CHECK_THROWS(mixture_from_chain(sol, bad, eps));
}

TEST_CASE("tv_distance: mixture against its own sampled histogram is small") {
  const PeriodicSolution sol = period4_solution();
  const CovarianceChain chain = covariance_chain(kBase, sol.n, sol.x_star, kTheta);
  const double eps = 1e-4;
  const NoiseSpec noise(eps, kTheta);
  NoiseStream stream(28, 0);
  // Build a grid that resolves the clusters: the orbit footprint plus a margin
  // of several cluster standard deviations, with bins a fraction of a sigma wide.
  double sx = 0.0, sy = 0.0;
  for (const SymMat2& lam : chain.lambda) {
    sx = std::max(sx, eps * std::sqrt(lam.s11));
    sy = std::max(sy, eps * std::sqrt(lam.s22));
  }
  double x_lo = sol.points[0].x, x_hi = x_lo, y_lo = sol.points[0].y, y_hi = y_lo;
  for (const State2& p : sol.points) {
    x_lo = std::min(x_lo, p.x);
    x_hi = std::max(x_hi, p.x);
    y_lo = std::min(y_lo, p.y);
    y_hi = std::max(y_hi, p.y);
  }
  Histogram2D grid(x_lo - 10 * sx, x_hi + 10 * sx, y_lo - 10 * sy, y_hi + 10 * sy, 800, 800);
  const Histogram2D h =
      estimate_density(kBase, noise, stream, sol.points[0], 2000000, 5000, grid);
  const GaussianMixture mix = mixture_from_chain(sol, chain, eps);
  const double tv = tv_distance(h, mix);
  CHECK(tv < 0.15);
  // A mixture centered elsewhere is far from the histogram.
  GaussianMixture off = mix;
  for (auto& g : off.components) g.mean.x += 1.0;
  CHECK(tv_distance(h, off) > 0.8);
}
