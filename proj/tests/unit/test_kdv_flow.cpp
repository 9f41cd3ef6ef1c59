#include <doctest.h>

#include <cmath>
#include <random>

#include "kdvlab/errors.hpp"
#include "kdvlab/kdv_flow.hpp"
#include "kdvlab/stats.hpp"
#include "test_support.hpp"

using namespace kdvlab;
using testsupport::kPi;

namespace {

SolverConfig solver(std::size_t modes, double dt) {
  SolverConfig cfg;
  cfg.modes = modes;
  cfg.dt = dt;
  return cfg;
}

double l2_distance(const TorusField& a, const TorusField& b) {
  const std::size_t m = std::max(a.cutoff(), b.cutoff());
  return l2_norm(a.with_cutoff(m) - b.with_cutoff(m));
}

}  // namespace

TEST_SUITE("kdv_flow") {

TEST_CASE("linear_flow examples") {
  for (double t : {0.1, 0.7, 2.0}) {
    const TorusField expected = std::cos(t) * TorusField::cosine(1, 1) - std::sin(t) * TorusField::sine(1, 1);
    CHECK(l2_distance(linear_flow(TorusField::cosine(1, 1), t), expected) < 1e-14);
  }
  std::mt19937_64 rng(1);
  const TorusField u = testsupport::random_field(rng, 8);
  CHECK(linear_flow(u, 0.0) == u);
  const TorusField c2 = TorusField::cosine(2, 2);
  CHECK(l2_distance(linear_flow(c2, kPi / 4.0), c2) < 1e-14);
}

TEST_CASE("linear_flow is an H^s isometry") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> t(-5.0, 5.0), s(0.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const TorusField u = testsupport::random_field(rng, 1 + i % 20);
    const SobolevIndex idx(s(rng));
    CHECK(sobolev_norm(linear_flow(u, t(rng)), idx) ==
          doctest::Approx(sobolev_norm(u, idx)).epsilon(1e-12));
  }
}

TEST_CASE("evolve examples") {
  const auto cfg = solver(32, 1e-3);
  const TorusField u0 = TorusField::cosine(1, 32) + 0.3 * TorusField::sine(2, 32);
  CHECK(evolve(u0, 0.0, cfg) == u0);
  CHECK(l2_norm(evolve(TorusField::cosine(1, 1), 0.5, cfg)) == doctest::Approx(1.0).epsilon(1e-8));

  // Weak nonlinearity: |Psi - S| = O(eps^2), ratio stable under eps halving.
  auto defect = [&](double eps) {
    const TorusField v = eps * TorusField::cosine(1, 1);
    return l2_distance(evolve(v, 0.1, cfg), linear_flow(v, 0.1)) / (eps * eps);
  };
  const double r1 = defect(1e-4), r2 = defect(5e-5);
  CHECK(r1 > 0.0);
  CHECK(r2 / r1 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("evolve_projected examples") {
  const auto cfg = solver(32, 1e-3);
  const TorusField high = TorusField::cosine(9, 12) + 0.4 * TorusField::sine(12, 12);
  CHECK(l2_distance(evolve_projected(high, 0.3, 4, cfg), linear_flow(high, 0.3)) < 1e-13);
  const TorusField u0 = TorusField::cosine(1, 4) + 0.5 * TorusField::cosine(2, 4);
  CHECK(l2_distance(evolve_projected(u0, 0.4, cfg.nonlinear_band(), cfg), evolve(u0, 0.4, cfg)) < 1e-10);
  CHECK(l2_distance(evolve_projected(u0, 0.4, 1000, cfg), evolve(u0, 0.4, cfg)) < 1e-10);
  CHECK(evolve_projected(TorusField::cosine(1, 1), 0.0, 1, cfg).with_cutoff(1) == TorusField::cosine(1, 1));
}

TEST_CASE("conserved_report examples") {
  Trajectory single;
  single.push(0.0, TorusField::cosine(1, 2));
  const auto d0 = conserved_report(single);
  CHECK(d0.l2_relative == 0.0);
  CHECK(d0.hamiltonian_relative == 0.0);
  CHECK(d0.mean_absolute == 0.0);

  std::vector<double> times;
  for (int i = 0; i <= 20; ++i) times.push_back(i / 20.0);
  const auto lin = conserved_report(linear_trajectory(TorusField::cosine(1, 1), times));
  CHECK(lin.l2_relative < 1e-12);

  const TorusField u0 = TorusField::cosine(1, 64) + 0.5 * TorusField::cosine(2, 64);
  const auto d = conserved_report(evolve_trajectory(u0, times, solver(64, 1e-3)));
  CHECK(d.l2_relative < 1e-8);
  CHECK(d.hamiltonian_relative < 1e-6);
  CHECK(d.mean_absolute == 0.0);
}

TEST_CASE("lipschitz_probe examples") {
  const auto cfg = solver(32, 1e-3);
  const SobolevIndex s(0.25);
  const TorusField u0 = TorusField::cosine(1, 32);
  const auto same = lipschitz_probe(u0, u0, 0.7, s, cfg);
  CHECK(same.distance_hs == 0.0);
  CHECK(same.distance_l2 == 0.0);

  const TorusField v0 = u0 + 1e-3 * TorusField::cosine(3, 32);
  const auto at0 = lipschitz_probe(u0, v0, 0.0, s, cfg);
  CHECK(at0.distance_hs == doctest::Approx(sobolev_norm(u0 - v0, s)));
  CHECK(at0.initial_distance_hs == doctest::Approx(sobolev_norm(u0 - v0, s)));
  CHECK(at0.l2_size_pow12 == doctest::Approx(std::pow(l2_norm(u0) + l2_norm(v0), 12.0)));

  std::vector<double> ts, logs;
  for (double t : {0.25, 0.5, 1.0, 2.0}) {
    const auto p = lipschitz_probe(u0, v0, t, s, cfg);
    REQUIRE(std::isfinite(p.distance_hs));
    ts.push_back(t);
    logs.push_back(std::log(p.distance_hs / p.initial_distance_hs));
  }
  // At most exponential growth: log-distance lies below a line with finite slope.
  const auto fit = linear_fit(ts, logs);
  CHECK(std::isfinite(fit.slope));
  for (std::size_t i = 0; i < ts.size(); ++i) {
    CHECK(logs[i] <= fit.intercept + fit.slope * ts[i] + 3.0 * std::sqrt(fit.residual_ss) + 1e-12);
  }
}

TEST_CASE("group property and reversibility") {
  std::mt19937_64 rng(4);
  const auto cfg = solver(32, 1e-3);
  for (int trial = 0; trial < 3; ++trial) {
    TorusField u = testsupport::random_field(rng, 6);
    u *= 1.0 / l2_norm(u);
    const TorusField once = evolve(u, 0.6, cfg);
    const TorusField twice = evolve(evolve(u, 0.25, cfg), 0.35, cfg);
    std::vector<double> times{0.0, 0.6};
    const auto drift = conserved_report(evolve_trajectory(u, times, cfg));
    CHECK(l2_distance(once, twice) < 5.0 * std::max(drift.l2_relative, 1e-12));
    // Running backwards undoes the flow up to the time-discretization error.
    SolverConfig fine = cfg;
    fine.dt = 0.5 * *cfg.dt;
    const double step_error = l2_distance(once, evolve(u, 0.6, fine)) * 16.0 / 15.0;
    const double back = l2_distance(evolve(once, -0.6, cfg), u.with_cutoff(32));
    const double back_fine = l2_distance(evolve(evolve(u, 0.6, fine), -0.6, fine), u.with_cutoff(32));
    CHECK(back <= 4.0 * step_error + 1e-12);
    CHECK(back_fine <= back / 8.0);
  }
}

TEST_CASE("fourth-order temporal convergence") {
  // Small data: at order-one amplitude dt = 1e-2 is still pre-asymptotic.
  const TorusField u0 = 0.3 * (TorusField::cosine(1, 2) + 0.5 * TorusField::cosine(2, 2));
  const SolverConfig cfg = solver(64, 1e-2);
  auto run = [&](double dt) {
    SolverConfig c = cfg;
    c.dt = dt;
    return evolve(u0, 1.0, c);
  };
  const TorusField reference = run(2.5e-3 / 16.0);
  std::vector<double> lx, ly;
  for (double dt : {1e-2, 5e-3, 2.5e-3}) {
    lx.push_back(std::log(dt));
    ly.push_back(std::log(l2_distance(run(dt), reference)));
  }
  const auto fit = linear_fit(lx, ly);
  CHECK(fit.slope >= 3.5);
  CHECK(fit.slope <= 4.5);
}

TEST_CASE("solver configuration errors") {
  SolverConfig cfg;
  cfg.modes = 2;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg.modes = 16;
  cfg.dt = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg.dt = 0.5;  // far above the CFL bound
  CHECK_THROWS_AS(evolve(TorusField::cosine(1, 1), 1.0, cfg), ContractError);
  Trajectory t;
  t.push(1.0, TorusField::cosine(1, 1));
  CHECK_THROWS_AS(t.push(0.5, TorusField::cosine(1, 1)), ContractError);
}

}  // TEST_SUITE
