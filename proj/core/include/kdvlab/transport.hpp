#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kdvlab/kdv_flow.hpp"
#include "kdvlab/measures.hpp"

namespace kdvlab {

/// Dense matrix of c_ij = ||x_i - y_j||_{H^s}^p.
struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double s = 0.0;
  double p = 1.0;
  std::vector<double> entries;

  double operator()(std::size_t i, std::size_t j) const { return entries[i * cols + j]; }
  double median() const;
};

/// ||x - y||_{H^s}, zero-padding the smaller cutoff.
double field_distance(const TorusField& x, const TorusField& y, double s);

/// Costs over all samples (zero-weight ones included).
CostMatrix cost_matrix(const WeightedEnsemble& a, const WeightedEnsemble& b, double s, double p,
                       std::size_t threads = 0);

struct PlanEntry {
  std::size_t i = 0;
  std::size_t j = 0;
  double mass = 0.0;
};

/// Sparse coupling; entries sorted by (i, j), masses > 0.
struct TransportPlan {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<PlanEntry> entries;

  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;
  /// max_i |row_sum_i - a_i| and likewise for columns.
  double row_residual(std::span<const double> a) const;
  double col_residual(std::span<const double> b) const;

  /// Coupling (i, i) with mass w_i.
  static TransportPlan diagonal(std::span<const double> weights);
};

struct TransportResult {
  double distance = 0.0;  ///< cost^(1/p) for W_{s,p}; threshold for the bottleneck
  double cost = 0.0;      ///< sum gamma_ij c_ij
  TransportPlan plan;
  std::string backend;
  double epsilon = 0.0;
  std::size_t iterations = 0;
  double row_residual = 0.0;
  double col_residual = 0.0;
};

/// Exact linear transport program (successive shortest paths with potentials)
/// for arbitrary nonnegative marginals. Both marginals must sum to 1 within 1e-9
/// (ContractError otherwise). `distance` is cost^(1/p) with p = c.p.
TransportResult solve_transport_exact(const CostMatrix& c, std::span<const double> a,
                                      std::span<const double> b);

/// Least threshold lambda admitting a coupling supported on {c_ij <= lambda}.
TransportResult solve_bottleneck(const CostMatrix& c, std::span<const double> a,
                                 std::span<const double> b);

struct SinkhornOptions {
  std::size_t max_iterations = 1000000;
  double tolerance = 1e-6;  ///< L1 row-marginal error before rounding
};

/// Log-domain Sinkhorn with epsilon scaling, followed by rounding onto the
/// feasible set; the returned cost is therefore an upper estimate of the
/// exact optimum. Throws ConvergenceError at the iteration cap.
TransportResult solve_sinkhorn(const CostMatrix& c, std::span<const double> a,
                               std::span<const double> b, double epsilon,
                               const SinkhornOptions& options = {});

/// W_{s,p}(a, b) with an optimal plan (indices refer to the full ensembles).
TransportResult wasserstein_p_exact(const WeightedEnsemble& a, const WeightedEnsemble& b,
                                    double s, double p);
TransportResult wasserstein_p_entropic(const WeightedEnsemble& a, const WeightedEnsemble& b,
                                       double s, double p, double epsilon,
                                       const SinkhornOptions& options = {});
/// W_{0,inf}(a, b): bottleneck in the L^2 distance.
TransportResult wasserstein_inf(const WeightedEnsemble& a, const WeightedEnsemble& b);

enum class TransportBackend { exact, entropic };

struct CombinedMetric {
  double value = 0.0;  ///< W_{0,inf} + W_{s,p}
  TransportResult bottleneck;
  TransportResult wasserstein;
  bool approximate = false;
};

/// ||a - b||_{s,p}. The entropic backend uses epsilon = relative_epsilon * median cost.
CombinedMetric combined_metric(const WeightedEnsemble& a, const WeightedEnsemble& b, double s,
                               double p, TransportBackend backend = TransportBackend::exact,
                               double relative_epsilon = 0.01);

/// (sum gamma_ij ||a_i - b_j||_{H^s}^p)^(1/p) for a given plan.
double plan_cost(const TransportPlan& plan, const WeightedEnsemble& a, const WeightedEnsemble& b,
                 double s, double p);
/// max over the plan's support of ||a_i - b_j||_{L2}.
double plan_sup(const TransportPlan& plan, const WeightedEnsemble& a, const WeightedEnsemble& b);

struct PushforwardBound {
  double wasserstein = 0.0;  ///< plan_cost at time t
  double bottleneck = 0.0;   ///< plan_sup at time t
};

/// Evolves every support point of the plan by Psi(t) and evaluates the same
/// plan at time t; an upper bound for the distances of the pushed measures.
PushforwardBound pushforward_cost(const WeightedEnsemble& a, const WeightedEnsemble& b,
                                  const TransportPlan& plan, double t, const SolverConfig& cfg,
                                  double s, double p, std::size_t threads = 0);

/// CSV with header "i,j,mass,cost" (cost = ||a_i - b_j||_{H^s}^p).
std::string plan_csv(const TransportPlan& plan, const WeightedEnsemble& a,
                     const WeightedEnsemble& b, double s, double p);
nlohmann::json transport_summary(const TransportResult& result);

}  // namespace kdvlab
