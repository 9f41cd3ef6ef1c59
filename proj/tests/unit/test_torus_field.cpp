#include <doctest.h>

#include <cmath>
#include <random>

#include "kdvlab/errors.hpp"
#include "kdvlab/torus_field.hpp"
#include "test_support.hpp"

using namespace kdvlab;
using testsupport::kPi;

TEST_SUITE("torus_field") {

TEST_CASE("make_field examples") {
  const TorusField c1 = make_field({Complex(std::sqrt(kPi) / 2.0, 0.0)});
  CHECK(c1 == TorusField::cosine(1, 1));
  for (double x : {0.0, 0.3, 1.7, 4.0}) {
    CHECK(c1.value_at(x) == doctest::Approx(std::cos(x) / std::sqrt(kPi)).epsilon(1e-14));
  }
  const TorusField zero = make_field({Complex(0.0, 0.0)});
  CHECK(sobolev_norm(zero, SobolevIndex(0.0)) == 0.0);
  const TorusField s1 = make_field({Complex(0.0, -std::sqrt(kPi) / 2.0)});
  for (double x : {0.0, 0.3, 1.7, 4.0}) {
    CHECK(s1.value_at(x) == doctest::Approx(std::sin(x) / std::sqrt(kPi)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(make_field({}), ContractError);
  CHECK_THROWS_AS(SobolevIndex(-0.1), DomainError);
}

TEST_CASE("sobolev_norm examples") {
  CHECK(sobolev_norm(TorusField::cosine(1, 4), SobolevIndex(0.0)) == doctest::Approx(1.0));
  CHECK(sobolev_norm(TorusField::sine(2, 4), SobolevIndex(0.5)) == doctest::Approx(std::sqrt(2.0)));
  CHECK(sobolev_norm(TorusField::zero(5), SobolevIndex(0.3)) == 0.0);
}

TEST_CASE("linf_norm examples") {
  CHECK(linf_norm(TorusField::cosine(1, 1)) == doctest::Approx(1.0 / std::sqrt(kPi)).epsilon(1e-12));
  CHECK(linf_norm(TorusField::zero(3)) == 0.0);
  const TorusField u = TorusField::cosine(1, 2) + TorusField::cosine(2, 2);
  CHECK(linf_norm(u) == doctest::Approx(2.0 / std::sqrt(kPi)).epsilon(1e-12));
}

TEST_CASE("project examples") {
  const TorusField u = TorusField::cosine(1, 2) + TorusField::cosine(2, 2);
  CHECK(project(u, 1) == TorusField::cosine(1, 2));
  CHECK(project(TorusField::cosine(1, 1), 0) == TorusField::zero(1));
  std::mt19937_64 rng(3);
  const TorusField v = testsupport::random_field(rng, 7);
  CHECK(project(v, 7) == v);
  CHECK(project(v, 20) == v);
}

TEST_CASE("integral_u3 and hamiltonian examples") {
  CHECK(integral_u3(2.5 * TorusField::cosine(1, 1)) == doctest::Approx(0.0));
  CHECK(integral_u3(TorusField::zero(4)) == 0.0);
  const TorusField u = TorusField::cosine(1, 2) + TorusField::cosine(2, 2);
  CHECK(integral_u3(u) == doctest::Approx(3.0 / (2.0 * std::sqrt(kPi))).epsilon(1e-13));
  CHECK(integral_u3(u) == doctest::Approx(0.846284).epsilon(1e-6));
  CHECK(hamiltonian(1.7 * TorusField::cosine(1, 1)) == doctest::Approx(1.7 * 1.7 / 2.0));
  CHECK(hamiltonian(TorusField::zero(2)) == 0.0);
  CHECK(hamiltonian(u) == doctest::Approx(2.5 - 1.0 / (4.0 * std::sqrt(kPi))).epsilon(1e-13));
}

TEST_CASE("grid reconstruction matches the direct cosine/sine sum and is real") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const TorusField u = testsupport::random_field(rng, 9);
    const auto grid = u.sample(64);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double x = 2.0 * kPi * static_cast<double>(j) / 64.0;
      CHECK(grid[j] == doctest::Approx(testsupport::direct_value(u, x)).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("Parseval against trapezoid quadrature on 100 random fields") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + trial % 12;
    const TorusField u = testsupport::random_field(rng, m);
    const double oracle = testsupport::trapezoid(u, 8 * m + 3, [](double v) { return v * v; });
    const double n = sobolev_norm(u, SobolevIndex(0.0));
    CHECK(n * n == doctest::Approx(oracle).epsilon(1e-10));
  }
}

TEST_CASE("project is idempotent, self-adjoint and contracts H^s") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const TorusField u = testsupport::random_field(rng, 10);
    const TorusField v = testsupport::random_field(rng, 10);
    const std::size_t n = static_cast<std::size_t>(trial % 11);
    CHECK(project(project(u, n), n) == project(u, n));
    CHECK(inner_product(project(u, n), v) ==
          doctest::Approx(inner_product(u, project(v, n))).epsilon(1e-12).scale(1.0));
    for (double s : {0.0, 0.25, 0.45, 1.0}) {
      CHECK(sobolev_norm(project(u, n), SobolevIndex(s)) <= sobolev_norm(u, SobolevIndex(s)));
    }
  }
}

TEST_CASE("high-mode tail bound ||(1-P_N)u||_{H^s} <= N^{s-sigma} ||u||_{H^sigma}") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const TorusField u = testsupport::random_field(rng, 24, 1.0, 0.6);
    for (std::size_t n : {1, 2, 5, 11, 23}) {
      for (auto [s, sigma] : {std::pair{0.0, 0.25}, std::pair{0.25, 0.45}, std::pair{0.1, 1.0}}) {
        const TorusField tail = u - project(u, n);
        CHECK(sobolev_norm(tail, SobolevIndex(s)) <=
              std::pow(static_cast<double>(n), s - sigma) * sobolev_norm(u, SobolevIndex(sigma)) *
                  (1.0 + 1e-14));
      }
    }
  }
}

TEST_CASE("cubic integral: convolution equals quadrature on random fields") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    TorusField u = testsupport::random_field(rng, 1 + trial % 16);
    const double n = l2_norm(u);
    if (n > 0.0) u *= (2.0 * (trial + 1) / 100.0) / n;  // ||u||_{L2} <= 2
    const double oracle = testsupport::trapezoid(u, 3 * u.cutoff() + 2, [](double v) { return v * v * v; });
    CHECK(std::abs(integral_u3(u) - integral_u3_quadrature(u)) <= 1e-10);
    CHECK(std::abs(integral_u3(u) - oracle) <= 1e-10);
  }
}

TEST_CASE("derivative and cutoff handling") {
  const TorusField u = TorusField::cosine(3, 4);
  CHECK(l2_norm(derivative(u) + 3.0 * TorusField::sine(3, 4)) < 1e-14);
  CHECK(u.with_cutoff(8).with_cutoff(4) == u);
  CHECK(u.with_cutoff(2) == TorusField::zero(2));
  CHECK_THROWS_AS(u + TorusField::zero(5), ContractError);
  CHECK(u.cos_coordinate(3) == doctest::Approx(1.0));
  CHECK(u.sin_coordinate(3) == doctest::Approx(0.0));
}

}  // TEST_SUITE
