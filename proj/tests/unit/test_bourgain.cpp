#include <doctest.h>

#include <cmath>
#include <random>

#include "kdvlab/bourgain.hpp"
#include "kdvlab/errors.hpp"
#include "test_support.hpp"

using namespace kdvlab;
using testsupport::kPi;

namespace {

// cos(kx + tau t)/sqrt(pi) on [-pi, pi); the window makes tau an exact DFT frequency.
SpaceTimeField travelling(int k, double tau, std::size_t nx = 16, std::size_t nt = 64) {
  return SpaceTimeField::from_function(nx, nt, kPi, [=](double x, double t) {
    return std::cos(k * x + tau * t) / std::sqrt(kPi);
  });
}

}  // namespace

TEST_SUITE("bourgain") {

TEST_CASE("X^{s,b} examples: on-shell weight one, off-shell weight 9^b") {
  const auto on = travelling(1, 1.0);
  const auto off = travelling(1, 9.0);
  // Normalized so that X^{0,0} is the space-time L2 norm: int int cos^2/pi = 2 pi.
  for (double b : {-0.5, 0.0, 0.5, 1.0}) {
    CHECK(xsb_norm(on, 0.3, b) == doctest::Approx(std::sqrt(2.0 * kPi)).epsilon(1e-12));
    CHECK(xsb_norm(off, 0.3, b) == doctest::Approx(std::pow(9.0, b) * xsb_norm(on, 0.3, b)).epsilon(1e-12));
  }
  const SpaceTimeField zero(8, 8, 1.0, std::vector<double>(64, 0.0));
  CHECK(xsb_norm(zero, 0.5, 0.5) == 0.0);
  CHECK(ys_norm(zero, 0.5) == 0.0);
  CHECK(zs_norm(zero, 0.5) == 0.0);
}

TEST_CASE("Y^s and Z^s single-mode closed forms") {
  const double r = std::sqrt(2.0 * kPi);
  CHECK(ys_norm(travelling(1, 1.0), 0.25) == doctest::Approx(2.0 * r).epsilon(1e-12));
  CHECK(zs_norm(travelling(1, 1.0), 0.25) == doctest::Approx(2.0 * r).epsilon(1e-12));
  CHECK(ys_norm(travelling(1, 9.0), 0.0) == doctest::Approx(3.0 * r + r).epsilon(1e-12));
  CHECK(zs_norm(travelling(1, 9.0), 0.0) == doctest::Approx(r / 3.0 + r / 9.0).epsilon(1e-12));
  // Mode 2 on shell (tau = 8): spatial weight 2^s on both terms.
  CHECK(ys_norm(travelling(2, 8.0), 0.5) == doctest::Approx(2.0 * std::sqrt(2.0) * r).epsilon(1e-12));
}

TEST_CASE("norms are absolutely homogeneous and X^{0,0} is Plancherel") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> v(32 * 64);
    for (std::size_t m = 0; m < 64; ++m) {
      double mean = 0.0;
      for (std::size_t j = 0; j < 32; ++j) mean += (v[m * 32 + j] = g(rng));
      for (std::size_t j = 0; j < 32; ++j) v[m * 32 + j] -= mean / 32.0;
    }
    const SpaceTimeField f(32, 64, 2.0, v);
    const double lambda = -2.5;
    const SpaceTimeField h = lambda * f;
    CHECK(xsb_norm(h, 0.3, 0.4) == doctest::Approx(2.5 * xsb_norm(f, 0.3, 0.4)).epsilon(1e-12));
    CHECK(ys_norm(h, 0.3) == doctest::Approx(2.5 * ys_norm(f, 0.3)).epsilon(1e-12));
    CHECK(zs_norm(h, 0.3) == doctest::Approx(2.5 * zs_norm(f, 0.3)).epsilon(1e-12));
    CHECK(spacetime_l2(h) == doctest::Approx(2.5 * spacetime_l2(f)).epsilon(1e-12));
    CHECK(xsb_norm(f, 0.0, 0.0) == doctest::Approx(spacetime_l2(f)).epsilon(1e-10));
  }
}

TEST_CASE("space-time grid contract") {
  CHECK_THROWS_AS(SpaceTimeField(12, 8, 1.0, std::vector<double>(96, 0.0)), ContractError);
  CHECK_THROWS_AS(SpaceTimeField(8, 8, 1.0, std::vector<double>(63, 0.0)), ContractError);
  CHECK_THROWS_AS(SpaceTimeField(8, 8, 1.0, std::vector<double>(64, 1.0)), ContractError);  // nonzero mean
}

TEST_CASE("linear solutions sit on the cubic") {
  const auto f = SpaceTimeField::linear_solution(TorusField::cosine(2, 2), 16, 64, kPi);
  for (const auto& mode : f.spectrum()) {
    if (mode.magnitude < 1e-12) continue;
    CHECK(mode.tau == doctest::Approx(static_cast<double>(mode.k * mode.k * mode.k)));
  }
  CHECK(xsb_norm(f, 0.0, 1.0) == doctest::Approx(spacetime_l2(f)).epsilon(1e-10));
}

TEST_CASE("bump function") {
  CHECK(bump(0.0) == 1.0);
  CHECK(bump(1.0) == 1.0);
  CHECK(bump(-2.0) == 0.0);
  CHECK(bump(2.5) == 0.0);
  CHECK(bump(1.5) == doctest::Approx(0.5));
  double prev = 1.0;
  for (double t = 1.0; t <= 2.0; t += 0.01) {
    CHECK(bump(t) <= prev + 1e-15);
    prev = bump(t);
  }
}

TEST_CASE("L4 ratio: single on-shell mode is amplitude independent") {
  // f = 2|c| cos(...): mean f^4 = 6|c|^4, rhs^2 = 2|c|^2.
  const double expected = std::pow(6.0, 0.25) / std::sqrt(2.0);
  for (double amp : {1e-3, 1.0, 250.0}) {
    const std::vector<TorusMode> one{{2, 8, Complex(amp, 0.3 * amp)}};
    CHECK(l4_ratio(one).ratio == doctest::Approx(expected).epsilon(1e-12));
  }
  // Off-shell by d: rhs picks up <d>^(1/3).
  const std::vector<TorusMode> off{{1, 5, Complex(1.0, 0.0)}};
  CHECK(l4_ratio(off).ratio == doctest::Approx(expected / std::pow(5.0, 1.0 / 3.0)).epsilon(1e-12));
  // Oracle: direct quadrature of two modes on a fine grid.
  const std::vector<TorusMode> two{{1, 1, Complex(0.7, 0.0)}, {2, 9, Complex(0.0, 0.4)}};
  double sum4 = 0.0;
  const int n = 64;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const double x = 2 * kPi * a / n, t = 2 * kPi * b / n;
      double f = 0.0;
      for (const auto& md : two) f += 2.0 * std::real(md.value * std::exp(Complex(0.0, md.m * x + md.n * t)));
      sum4 += std::pow(f, 4.0);
    }
  }
  CHECK(l4_ratio(two).lhs == doctest::Approx(std::pow(sum4 / (n * n), 0.25)).epsilon(1e-12));
  const double rhs = std::sqrt(2.0 * 0.49 + 2.0 * std::pow(2.0, 2.0 / 3.0) * 0.16);
  CHECK(l4_ratio(two).rhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("L4 probe: finite, deterministic and thread independent") {
  const auto a = l4_inequality_probe(100, 3, 11, 1);
  const auto b = l4_inequality_probe(100, 3, 11, 4);
  CHECK(std::isfinite(a.max_ratio));
  CHECK(a.max_ratio > 0.0);
  CHECK(a.max_ratio == b.max_ratio);
  CHECK(a.median_ratio <= a.q90_ratio);
  CHECK(a.q90_ratio <= a.max_ratio);
  CHECK_THROWS_AS(l4_inequality_probe(50, 3, 11), ContractError);
  const auto rows = ratio_rows(l4_refinement_study(100, 2, 5, 1));
  CHECK(rows.size() == 200);
  const auto csv = ratio_csv(rows, "resolution");
  CHECK(csv.rfind("trial,resolution,lhs,rhs,ratio\n", 0) == 0);
}

TEST_CASE("bilinear probe examples") {
  const std::vector<double> grid{1.0, 0.5, 0.25, 0.125};
  const TorusField c1 = TorusField::cosine(1, 1);
  const auto zero = bilinear_scaling_probe(TorusField::zero(1), c1, 0.25, grid);
  for (const auto& r : zero.records) {
    CHECK(r.numerator == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(r.ratio == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
  }
  const auto p = bilinear_scaling_probe(c1, c1, 0.25, grid);
  CHECK(p.records.size() == 4);
  for (const auto& r : p.records) {
    CHECK(std::isfinite(r.ratio));
    CHECK(r.ratio <= p.fitted_constant);
  }
  CHECK(p.bounded);
  // s = 0, u = v: denominator is 2 T^(1/12) |u|_{Y^0}^2.
  const auto q = bilinear_scaling_probe(c1, c1, 0.0, grid);
  const auto u = SpaceTimeField::linear_solution(c1, 32, 512, kPi, 1.0);
  const double y0 = ys_norm(u, 0.0);
  for (const auto& r : q.records) {
    CHECK(r.denominator == doctest::Approx(2.0 * std::pow(r.cutoff_time, 1.0 / 12.0) * y0 * y0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(bilinear_scaling_probe(c1, c1, 0.25, std::vector<double>{1.0, 0.5}), ContractError);
  CHECK(ratio_csv(ratio_rows(p), "T").rfind("trial,T,lhs,rhs,ratio\n", 0) == 0);
}

}  // TEST_SUITE
