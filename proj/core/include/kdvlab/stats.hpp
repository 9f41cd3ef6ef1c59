#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace kdvlab {

/// (Weighted) least-squares line y = intercept + slope * x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
  double residual_ss = 0.0;
  double slope_stderr = 0.0;
  /// 95% Student-t interval; collapses to the slope when only two points are fitted.
  double slope_ci_low = 0.0;
  double slope_ci_high = 0.0;
  std::size_t points = 0;
};

/// Requires at least two points with distinct x. Empty `weights` means unit weights.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y,
                     std::span<const double> weights = {});

struct MeanEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

MeanEstimate mean_and_stderr(std::span<const double> values);

/// sum w_i v_i / sum w_i.
double weighted_mean(std::span<const double> values, std::span<const double> weights);

/// Kish effective sample size (sum w)^2 / sum w^2.
double effective_sample_size(std::span<const double> weights);

/// Linear-interpolated empirical quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

struct BootstrapSummary {
  double estimate = 0.0;
  double standard_error = 0.0;
  double ci_low = 0.0;   ///< 2.5% percentile
  double ci_high = 0.0;  ///< 97.5% percentile
  std::vector<double> replicas;
};

/// Percentile bootstrap of a statistic over index resamples. `statistic` receives
/// the multiplicity of each original index in the replica.
BootstrapSummary bootstrap(std::size_t n, std::size_t replicas, std::uint64_t seed,
                           const std::function<double(std::span<const double>)>& statistic,
                           std::size_t threads = 0);

/// Bootstrap of the self-normalized weighted mean sum w v / sum w.
BootstrapSummary bootstrap_weighted_mean(std::span<const double> values,
                                         std::span<const double> weights, std::size_t replicas,
                                         std::uint64_t seed, std::size_t threads = 0);

/// Summary of an already computed replica distribution (percentile interval).
BootstrapSummary summarize_replicas(double estimate, std::vector<double> replicas);

}  // namespace kdvlab
