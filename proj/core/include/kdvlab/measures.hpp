#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kdvlab/stats.hpp"
#include "kdvlab/torus_field.hpp"

namespace kdvlab {

/// Truncated random series phi^M = sum_{n=1..M} (h_n c_n + l_n s_n) / n.
struct GaussianSpec {
  std::size_t modes = 16;
  std::uint64_t seed = 1;
  /// Sobolev indices for which moments are reported.
  std::vector<double> report_s;

  void validate() const;
};

/// Gibbs density f(u) = chi(||u||_{L2} <= radius) exp(cubic_coefficient * int (P u)^3)
/// against the Gaussian measure, with P = Pi_N when `projection` is set.
struct GibbsSpec {
  GaussianSpec base;
  double cubic_coefficient = 1.0 / 6.0;
  double cutoff_radius = 1.0;
  std::optional<std::size_t> projection;
  /// Multinomial resampling to uniform weights after importance weighting.
  bool resample = false;

  void validate() const;
};

/// The (s, p) of the space M_{s,p} an ensemble is meant to live in.
struct MetricContext {
  double s = 0.25;
  double p = 2.0;
};

struct Provenance {
  std::string kind = "explicit";
  std::uint64_t seed = 0;
  bool resampled = false;
};

/// Finite weighted collection of fields standing in for a probability measure.
/// Weights are nonnegative and sum to one within 1e-12; samples share a cutoff.
class WeightedEnsemble {
 public:
  WeightedEnsemble(std::vector<TorusField> samples, std::vector<double> weights,
                   MetricContext metric = {}, Provenance provenance = {});

  /// Equal weights 1/n.
  static WeightedEnsemble uniform(std::vector<TorusField> samples, MetricContext metric = {},
                                  Provenance provenance = {});
  /// Rescales arbitrary nonnegative weights to sum one (DegenerateEnsembleError if all zero).
  static WeightedEnsemble normalized(std::vector<TorusField> samples, std::vector<double> weights,
                                     MetricContext metric = {}, Provenance provenance = {});

  std::size_t size() const noexcept { return samples_.size(); }
  std::size_t cutoff() const noexcept { return samples_.front().cutoff(); }
  const std::vector<TorusField>& samples() const noexcept { return samples_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const TorusField& sample(std::size_t i) const { return samples_.at(i); }
  double weight(std::size_t i) const { return weights_.at(i); }
  const MetricContext& metric() const noexcept { return metric_; }
  const Provenance& provenance() const noexcept { return provenance_; }

  /// Indices with positive weight, increasing.
  std::vector<std::size_t> support_indices() const;
  /// The ensemble restricted to positive weights, order preserved.
  WeightedEnsemble support() const;

  /// Pushforward: applies `map` to every positive-weight sample (zero-weight
  /// samples are kept unchanged) in parallel; weights are carried over.
  WeightedEnsemble pushforward(const std::function<TorusField(const TorusField&)>& map,
                               std::size_t threads = 0) const;

  WeightedEnsemble with_cutoff(std::size_t cutoff) const;
  WeightedEnsemble with_metric(MetricContext metric) const;

 private:
  std::vector<TorusField> samples_;
  std::vector<double> weights_;
  MetricContext metric_;
  Provenance provenance_;
};

/// n independent draws of phi^M with uniform weights. Sample i depends only
/// on (seed, i), so results do not depend on the thread count.
WeightedEnsemble sample_gaussian(const GaussianSpec& spec, std::size_t n, std::size_t threads = 0);

/// Single draw with index `index` of the stream keyed by spec.seed.
TorusField gaussian_draw(const GaussianSpec& spec, std::uint64_t index);

/// E ||phi^M||_{H^s}^2 = 2 sum_{n<=M} n^{2s-2}. DomainError for s >= 1/2.
double expected_hs_norm_sq(std::size_t modes, double s);

/// f(u) (or f_N(u) when spec.projection is set).
double gibbs_weight(const TorusField& u, const GibbsSpec& spec);

struct GibbsEnsemble {
  WeightedEnsemble ensemble;
  /// n / sum f(phi_i), estimate of ||f||_{L1_mu}^{-1}.
  double kappa = 0.0;
  /// Raw density values f(phi_i) of the base draws.
  std::vector<double> densities;
  double effective_size = 0.0;
};

/// Self-normalized importance sampling of rho = kappa f mu.
/// Throws DegenerateEnsembleError when every density vanishes.
GibbsEnsemble sample_gibbs(const GibbsSpec& spec, std::size_t n, std::size_t threads = 0);

/// Scalar functional of a field used by tail and moment statistics.
struct Functional {
  enum class Kind { linf, l2, hs };
  Kind kind = Kind::l2;
  double s = 0.0;

  double operator()(const TorusField& u) const;
  std::string name() const;
};

/// Weighted survival probabilities P(F(u) > R) at each radius.
std::vector<double> survival_curve(const WeightedEnsemble& ens, const Functional& functional,
                                   std::span<const double> radii);

struct TailFit {
  std::vector<double> radii;
  std::vector<double> survival;
  /// Grid indices with survival in [1e-3, 0.5], used by the fit.
  std::vector<std::size_t> used;
  /// Weighted least squares of log P against R^2; slope estimates -c.
  LinearFit fit;
  double effective_size = 0.0;
};

/// Requires >= 500 effective samples and >= 3 usable radii (InsufficientDataError).
TailFit tail_fit(const WeightedEnsemble& ens, const Functional& functional,
                 std::span<const double> radii);

/// Weighted mean of F over the ensemble with a delta-method standard error.
MeanEstimate weighted_moment(const WeightedEnsemble& ens,
                             const std::function<double(const TorusField&)>& functional);

struct FConvergence {
  std::vector<std::size_t> projections;
  /// Monte-Carlo estimate of E_mu |f - f_N| per projection.
  std::vector<double> error;
  std::vector<double> standard_error;
  /// Standard error of error[i] - error[i+1] (paired draws).
  std::vector<double> difference_stderr;
  /// Log-log slope over the strictly positive estimates, when at least two exist.
  std::optional<LinearFit> loglog;
};

/// ||f - f_N||_{L1_mu} for N in `projections` (increasing) from n draws of spec.base.
FConvergence f_convergence_probe(const GibbsSpec& spec, std::span<const std::size_t> projections,
                                 std::size_t n, std::size_t threads = 0);

}  // namespace kdvlab
