#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "kdvlab/errors.hpp"
#include "kdvlab/transport.hpp"
#include "test_support.hpp"

using namespace kdvlab;

namespace {

WeightedEnsemble random_uniform(std::mt19937_64& rng, std::size_t n, std::size_t modes = 6) {
  std::vector<TorusField> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(testsupport::random_field(rng, modes));
  return WeightedEnsemble::uniform(std::move(s));
}

WeightedEnsemble random_weighted(std::mt19937_64& rng, std::size_t n, std::size_t modes = 6) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<TorusField> s;
  std::vector<double> w;
  for (std::size_t i = 0; i < n; ++i) {
    s.push_back(testsupport::random_field(rng, modes));
    w.push_back(u(rng));
  }
  return WeightedEnsemble::normalized(std::move(s), std::move(w));
}

// Oracle: brute force over permutations for uniform equal-size ensembles.
double brute_wp(const WeightedEnsemble& a, const WeightedEnsemble& b, double s, double p) {
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      cost += std::pow(sobolev_norm(a.sample(i) - b.sample(perm[i]), SobolevIndex(s)), p);
    }
    best = std::min(best, cost / static_cast<double>(perm.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(best, 1.0 / p);
}

double brute_bottleneck(const WeightedEnsemble& a, const WeightedEnsemble& b) {
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double worst = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      worst = std::max(worst, l2_norm(a.sample(i) - b.sample(perm[i])));
    }
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

void check_feasible(const TransportPlan& plan, const WeightedEnsemble& a, const WeightedEnsemble& b) {
  CHECK(plan.row_residual(a.weights()) <= 1e-9);
  CHECK(plan.col_residual(b.weights()) <= 1e-9);
  for (const auto& e : plan.entries) CHECK(e.mass >= 0.0);
}

}  // namespace

TEST_SUITE("transport") {

TEST_CASE("cost_matrix examples") {
  std::mt19937_64 rng(1);
  const auto a = random_uniform(rng, 4);
  const auto c = cost_matrix(a, a, 0.25, 2.0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(c(i, i) == 0.0);

  const TorusField x = TorusField::cosine(1, 3), y = TorusField::sine(2, 3);
  const auto single = cost_matrix(WeightedEnsemble::uniform({x}), WeightedEnsemble::uniform({y}), 0.5, 2.0);
  // ||c1 - s2||_{H^1/2}^2 = 1 + 2
  CHECK(single.entries.size() == 1);
  CHECK(single(0, 0) == doctest::Approx(3.0));

  // Shifting one sample by delta c_k changes its row by the direct norm formula.
  const double delta = 0.1;
  std::vector<TorusField> shifted = a.samples();
  shifted[2] += delta * TorusField::cosine(3, 6);
  const auto b = WeightedEnsemble::uniform(shifted);
  const auto cb = cost_matrix(b, a, 0.25, 2.0);
  for (std::size_t j = 0; j < 4; ++j) {
    const TorusField d = a.sample(2) - a.sample(j);
    const double oracle = std::pow(sobolev_norm(d + delta * TorusField::cosine(3, 6), SobolevIndex(0.25)), 2.0);
    CHECK(cb(2, j) == doctest::Approx(oracle).epsilon(1e-12));
  }
  // Mixed cutoffs are zero padded.
  const auto padded = cost_matrix(WeightedEnsemble::uniform({x}),
                                  WeightedEnsemble::uniform({TorusField::sine(5, 5)}), 0.0, 1.0);
  CHECK(padded(0, 0) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("wasserstein_p_exact examples") {
  const TorusField x = TorusField::cosine(1, 4), y = 0.3 * TorusField::sine(4, 4);
  const auto r = wasserstein_p_exact(WeightedEnsemble::uniform({x}), WeightedEnsemble::uniform({y}), 0.25, 2.0);
  CHECK(r.distance == doctest::Approx(sobolev_norm(x - y, SobolevIndex(0.25))));

  std::mt19937_64 rng(2);
  const auto a = random_uniform(rng, 2), b = random_uniform(rng, 2);
  const auto c = cost_matrix(a, b, 0.25, 3.0);
  const double oracle = std::pow(std::min(0.5 * c(0, 0) + 0.5 * c(1, 1), 0.5 * c(0, 1) + 0.5 * c(1, 0)), 1.0 / 3.0);
  CHECK(wasserstein_p_exact(a, b, 0.25, 3.0).distance == doctest::Approx(oracle).epsilon(1e-12));

  const auto self = wasserstein_p_exact(a, a, 0.25, 2.0);
  CHECK(self.distance == 0.0);
  check_feasible(self.plan, a, a);

  std::vector<double> bad{0.7, 0.7};
  CHECK_THROWS_AS(solve_transport_exact(c, bad, b.weights()), ContractError);
}

TEST_CASE("exact solver equals permutation brute force") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 5;
    const auto a = random_uniform(rng, n), b = random_uniform(rng, n);
    const double p = 1.0 + (trial % 3);
    const auto r = wasserstein_p_exact(a, b, 0.25, p);
    CHECK(std::abs(r.distance - brute_wp(a, b, 0.25, p)) <= 1e-9);
    check_feasible(r.plan, a, b);
    const auto bn = wasserstein_inf(a, b);
    CHECK(std::abs(bn.distance - brute_bottleneck(a, b)) <= 1e-9);
    check_feasible(bn.plan, a, b);
  }
}

TEST_CASE("weighted marginals: feasibility and agreement with the entropic limit") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_weighted(rng, 7), b = random_weighted(rng, 5);
    const auto r = wasserstein_p_exact(a, b, 0.25, 2.0);
    check_feasible(r.plan, a, b);
    const auto c = cost_matrix(a, b, 0.25, 2.0);
    const auto sk = solve_sinkhorn(c, a.weights(), b.weights(), 1e-3 * c.median());
    CHECK(sk.cost >= r.cost - 1e-9);
    CHECK(sk.cost <= r.cost * 1.01 + 1e-12);
  }
}

TEST_CASE("metric axioms") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_weighted(rng, 4), b = random_weighted(rng, 5), c = random_weighted(rng, 3);
    const double ab = wasserstein_p_exact(a, b, 0.25, 2.0).distance;
    const double ba = wasserstein_p_exact(b, a, 0.25, 2.0).distance;
    const double bc = wasserstein_p_exact(b, c, 0.25, 2.0).distance;
    const double ac = wasserstein_p_exact(a, c, 0.25, 2.0).distance;
    CHECK(std::abs(ab - ba) <= 1e-9);
    CHECK(ac <= ab + bc + 1e-9);
    const double iab = wasserstein_inf(a, b).distance, ibc = wasserstein_inf(b, c).distance;
    CHECK(wasserstein_inf(a, c).distance <= iab + ibc + 1e-9);
  }
}

TEST_CASE("W_{s,p} is nondecreasing in p") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_weighted(rng, 5), b = random_weighted(rng, 4);
    double prev = 0.0;
    for (double p : {1.0, 1.5, 2.0, 3.0, 4.0}) {
      const double w = wasserstein_p_exact(a, b, 0.25, p).distance;
      CHECK(w >= prev - 1e-12);
      prev = w;
    }
  }
}

TEST_CASE("entropic solver examples") {
  std::mt19937_64 rng(7);
  const auto a = random_uniform(rng, 5);
  CHECK(wasserstein_p_entropic(a, a, 0.25, 2.0, 1e-4).distance <= 1e-6);

  const TorusField x = TorusField::cosine(2, 3), y = TorusField::sine(3, 3);
  for (double eps : {10.0, 0.1, 1e-3}) {
    CHECK(wasserstein_p_entropic(WeightedEnsemble::uniform({x}), WeightedEnsemble::uniform({y}), 0.25, 2.0, eps)
              .distance == doctest::Approx(sobolev_norm(x - y, SobolevIndex(0.25))).epsilon(1e-12));
  }

  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_uniform(rng, 5), q = random_uniform(rng, 5);
    const auto c = cost_matrix(p, q, 0.25, 2.0);
    const double exact = wasserstein_p_exact(p, q, 0.25, 2.0).distance;
    double prev = std::numeric_limits<double>::infinity();
    for (double rel : {1.0, 0.1, 0.01}) {
      const auto r = wasserstein_p_entropic(p, q, 0.25, 2.0, rel * c.median());
      CHECK(r.distance <= prev + 1e-12);
      CHECK(r.distance >= exact - 1e-9);
      check_feasible(r.plan, p, q);
      prev = r.distance;
    }
    CHECK(prev <= exact * 1.01);
  }

  const auto p = random_uniform(rng, 6), q = random_uniform(rng, 6);
  const auto c = cost_matrix(p, q, 0.25, 2.0);
  SinkhornOptions tight;
  tight.max_iterations = 2;
  tight.tolerance = 1e-15;
  CHECK_THROWS_AS(solve_sinkhorn(c, p.weights(), q.weights(), 1e-4 * c.median(), tight), ConvergenceError);
}

TEST_CASE("wasserstein_inf and combined_metric examples") {
  const TorusField x = TorusField::cosine(1, 3), y = 0.5 * TorusField::sine(3, 3);
  const auto sx = WeightedEnsemble::uniform({x}), sy = WeightedEnsemble::uniform({y});
  CHECK(wasserstein_inf(sx, sy).distance == doctest::Approx(l2_norm(x - y)));
  CHECK(combined_metric(sx, sy, 0.25, 2.0).value ==
        doctest::Approx(l2_norm(x - y) + sobolev_norm(x - y, SobolevIndex(0.25))));

  std::mt19937_64 rng(8);
  const auto a = random_uniform(rng, 2), b = random_uniform(rng, 2);
  auto d = [&](std::size_t i, std::size_t j) { return l2_norm(a.sample(i) - b.sample(j)); };
  const double oracle = std::min(std::max(d(0, 0), d(1, 1)), std::max(d(0, 1), d(1, 0)));
  CHECK(wasserstein_inf(a, b).distance == doctest::Approx(oracle));
  CHECK(wasserstein_inf(a, a).distance == 0.0);
  CHECK(combined_metric(a, a, 0.25, 2.0).value == 0.0);

  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_uniform(rng, 4), q = random_uniform(rng, 4);
    const double brute = brute_bottleneck(p, q) + brute_wp(p, q, 0.25, 2.0);
    CHECK(std::abs(combined_metric(p, q, 0.25, 2.0).value - brute) <= 1e-9);
  }
}

TEST_CASE("pushforward_cost examples") {
  std::mt19937_64 rng(9);
  SolverConfig cfg;
  cfg.modes = 16;
  cfg.dt = 1e-3;
  const auto a = random_uniform(rng, 4, 4).with_cutoff(16);
  const auto b = random_uniform(rng, 4, 4).with_cutoff(16);
  const auto opt = wasserstein_p_exact(a, b, 0.25, 2.0);
  const auto at0 = pushforward_cost(a, b, opt.plan, 0.0, cfg, 0.25, 2.0);
  CHECK(at0.wasserstein == doctest::Approx(opt.distance).epsilon(1e-12));

  const auto ident = TransportPlan::diagonal(a.weights());
  const auto same = pushforward_cost(a, a, ident, 0.5, cfg, 0.25, 2.0);
  CHECK(same.wasserstein == 0.0);
  CHECK(same.bottleneck == 0.0);

  const auto pushed = pushforward_cost(a, b, opt.plan, 0.5, cfg, 0.25, 2.0);
  auto flow = [&](const TorusField& u) { return evolve(u, 0.5, cfg); };
  const double reopt = wasserstein_p_exact(a.pushforward(flow), b.pushforward(flow), 0.25, 2.0).distance;
  CHECK(pushed.wasserstein >= reopt * (1.0 - 1e-12));
}

TEST_CASE("plan CSV and JSON summary") {
  std::mt19937_64 rng(10);
  const auto a = random_uniform(rng, 3), b = random_uniform(rng, 3);
  const auto r = wasserstein_p_exact(a, b, 0.25, 2.0);
  const std::string csv = plan_csv(r.plan, a, b, 0.25, 2.0);
  CHECK(csv.rfind("i,j,mass,cost\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(r.plan.entries.size() + 1));
  const auto j = transport_summary(r);
  CHECK(j.contains("distance"));
  CHECK(j.contains("backend"));
  CHECK(j.contains("epsilon"));
  CHECK(j.contains("iterations"));
  CHECK(j.contains("marginal_residuals"));
}

}  // TEST_SUITE
