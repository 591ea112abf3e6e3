#include <doctest.h>

#include <cmath>
#include <numbers>

#include "grazesim/smallmat.hpp"
#include "test_util.hpp"

using namespace grazesim;
using testutil::close;
using testutil::close_rel;

namespace {

// Independent oracle for the matrix exponential: scaling and squaring on
// a plain truncated series.
Mat2 exp_series(const Mat2& m, double t) {
  Mat2 x = m * t;
  int squarings = 0;
  while (x.max_abs() > 0.25) {
    x = x * 0.5;
    ++squarings;
  }
  Mat2 result = Mat2::identity();
  Mat2 term = Mat2::identity();
  for (int k = 1; k <= 20; ++k) {
    term = term * x * (1.0 / k);
    result = result + term;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

}  // namespace

TEST_CASE("mat2_exp: zero matrix gives the identity") {
  const Mat2 e = mat2_exp({0, 0, 0, 0}, 1.0);
  CHECK((e - Mat2::identity()).max_abs() < 1e-15);
}

TEST_CASE("mat2_exp: damped-oscillator Jacobian over one period") {
  const double k = 5.0, b = 0.5;
  const Mat2 j{0.0, 1.0, -k, -b};
  const Mat2 e = mat2_exp(j, 2.0 * std::numbers::pi);
  const double beta = std::sqrt(4.9375);
  CHECK(close_rel(e.trace(),
                  2.0 * std::exp(-std::numbers::pi / 2.0) * std::cos(2.0 * std::numbers::pi * beta),
                  1e-12));
  CHECK(close_rel(e.det(), std::exp(-std::numbers::pi), 1e-12));
  CHECK((e - exp_series(j, 2.0 * std::numbers::pi)).max_abs() < 1e-10);
}

TEST_CASE("mat2_exp: diagonal case") {
  const Mat2 e = mat2_exp({2.0, 0.0, 0.0, -1.0}, 0.7);
  CHECK(close_rel(e.m11, std::exp(1.4), 1e-13));
  CHECK(close_rel(e.m22, std::exp(-0.7), 1e-13));
  CHECK(close(e.m12, 0.0, 1e-15));
  CHECK(close(e.m21, 0.0, 1e-15));
}

TEST_CASE("mat2_exp: repeated-eigenvalue branch") {
  const Mat2 m{1.0, 1.0, 0.0, 1.0};  // Jordan block, eigenvalue 1
  const Mat2 e = mat2_exp(m, 2.0);
  CHECK(close_rel(e.m11, std::exp(2.0), 1e-12));
  CHECK(close_rel(e.m12, 2.0 * std::exp(2.0), 1e-12));
}

TEST_CASE("mat2_exp: semigroup property on randomized matrices") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const Mat2 m = testutil::random_mat2(rng);
    const double s = testutil::uniform(rng, -10.0, 10.0);
    const double t = testutil::uniform(rng, -10.0, 10.0);
    const Mat2 lhs = mat2_exp(m, s + t);
    const Mat2 rhs = mat2_exp(m, s) * mat2_exp(m, t);
    CHECK((lhs - rhs).max_abs() <= 1e-10 * std::max(1.0, lhs.max_abs()));
  }
}

TEST_CASE("det of matrix powers is the power of det") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const Mat2 m = testutil::random_mat2(rng);
    Mat2 p = Mat2::identity();
    for (int n = 0; n <= 6; ++n) {
      // det(p) cancels terms of size ~max_abs(p)^2; scale the tolerance to match.
      const double tol = 1e-12 * std::max(1.0, p.max_abs() * p.max_abs());
      CHECK(std::abs(p.det() - std::pow(m.det(), n)) <= tol);
      p = p * m;
    }
  }
}

TEST_CASE("eig2: identity") {
  const auto ev = eig2(Mat2::identity());
  CHECK(close(ev[0].real(), 1.0, 1e-15));
  CHECK(close(ev[1].real(), 1.0, 1e-15));
}

TEST_CASE("eig2: strongly unstable stability matrix") {
  const auto ev = eig2({-4.5, 1.0, -0.05, 0.0});
  CHECK(close(ev[0].real(), -4.48886, 1e-5));
  CHECK(close(ev[1].real(), -0.01114, 1e-5));
  CHECK(close((ev[0] * ev[1]).real(), 0.05, 1e-12));
  CHECK(close((ev[0] + ev[1]).real(), -4.5, 1e-12));
}

TEST_CASE("eig2: rotation gives conjugate pair ordered by imaginary part") {
  const auto ev = eig2({0.0, 1.0, -1.0, 0.0});
  CHECK(close(ev[0].imag(), 1.0, 1e-15));
  CHECK(close(ev[1].imag(), -1.0, 1e-15));
}

TEST_CASE("eig2: trace and det invariants on randomized matrices") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 1000; ++trial) {
    const Mat2 m = testutil::random_mat2(rng, 5.0);
    const auto ev = eig2(m);
    CHECK(close((ev[0] + ev[1]).real(), m.trace(), 1e-12 * std::max(1.0, std::abs(m.trace()))));
    CHECK(close((ev[0] * ev[1]).real(), m.det(), 1e-12 * std::max(1.0, std::abs(m.det()))));
    CHECK(std::abs(ev[0]) >= std::abs(ev[1]));
  }
}

TEST_CASE("solve3: identity and diagonal") {
  Mat3 id = Mat3::identity();
  const Vec3 v{1.0, -2.0, 3.0};
  const Vec3 x = solve3(id, v);
  CHECK(close(x[0], 1.0, 1e-15));
  CHECK(close(x[1], -2.0, 1e-15));
  CHECK(close(x[2], 3.0, 1e-15));

  Mat3 d = Mat3::identity();
  d(0, 0) = 2.0;
  d(1, 1) = 4.0;
  d(2, 2) = 5.0;
  const Vec3 y = solve3(d, {2.0, 4.0, 5.0});
  for (int i = 0; i < 3; ++i) CHECK(close(y[static_cast<size_t>(i)], 1.0, 1e-15));
}

TEST_CASE("solve3: residual on randomized well-conditioned systems") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 500; ++trial) {
    Mat3 m = Mat3::identity();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) += testutil::uniform(rng, -0.4, 0.4);
    const Vec3 v{testutil::uniform(rng, -1, 1), testutil::uniform(rng, -1, 1),
                 testutil::uniform(rng, -1, 1)};
    const Vec3 x = solve3(m, v);
    const Vec3 r = m * x - v;
    for (int i = 0; i < 3; ++i) CHECK(std::abs(r[static_cast<size_t>(i)]) < 1e-12);
  }
}

TEST_CASE("solve3: singular matrix is refused") {
  Mat3 m;  // all zeros
  CHECK_THROWS_AS(solve3(m, {1.0, 0.0, 0.0}), SingularMatrix);
}

TEST_CASE("chol2: identity and hand example") {
  const Mat2 li = chol2(SymMat2::identity());
  CHECK((li - Mat2::identity()).max_abs() < 1e-15);

  const Mat2 l = chol2({4.0, 2.0, 2.0});
  CHECK(close(l.m11, 2.0, 1e-15));
  CHECK(close(l.m21, 1.0, 1e-15));
  CHECK(close(l.m22, 1.0, 1e-15));
  CHECK(close(l.m12, 0.0, 1e-15));
}

TEST_CASE("chol2: degenerate first direction") {
  const Mat2 l = chol2({0.0, 0.0, 1.0});
  CHECK(close(l.m11, 0.0, 1e-15));
  CHECK(close(l.m21, 0.0, 1e-15));
  CHECK(close(l.m22, 1.0, 1e-15));
}

TEST_CASE("chol2: L L^T reproduces randomized PSD inputs") {
  std::mt19937_64 rng(45);
  for (int trial = 0; trial < 500; ++trial) {
    const SymMat2 s = testutil::random_psd(rng);
    const Mat2 l = chol2(s);
    CHECK(close(l.m11 * l.m11, s.s11, 1e-12));
    CHECK(close(l.m11 * l.m21, s.s12, 1e-12));
    CHECK(close(l.m21 * l.m21 + l.m22 * l.m22, s.s22, 1e-12));
  }
}

TEST_CASE("chol2: non-PSD input is refused") {
  CHECK_THROWS_AS(chol2({-1.0, 0.0, 1.0}), NotPSD);
  CHECK_THROWS_AS(chol2({1.0, 2.0, 1.0}), NotPSD);
}
