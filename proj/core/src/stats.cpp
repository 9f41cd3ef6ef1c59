#include "kdvlab/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "kdvlab/errors.hpp"
#include "kdvlab/parallel.hpp"
#include "kdvlab/rng.hpp"

namespace kdvlab {

LinearFit linear_fit(std::span<const double> x, std::span<const double> y,
                     std::span<const double> weights) {
  if (x.size() != y.size() || (!weights.empty() && weights.size() != x.size())) {
    throw ContractError("linear_fit: size mismatch");
  }
  const std::size_t n = x.size();
  if (n < 2) throw InsufficientDataError("linear_fit needs at least two points");
  auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w(i);
    sx += w(i) * x[i];
    sy += w(i) * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += w(i) * (x[i] - mx) * (x[i] - mx);
    sxy += w(i) * (x[i] - mx) * (y[i] - my);
    syy += w(i) * (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) throw InsufficientDataError("linear_fit: x values are all equal");

  LinearFit fit;
  fit.points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    fit.residual_ss += w(i) * r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - fit.residual_ss / syy : 1.0;
  fit.slope_ci_low = fit.slope_ci_high = fit.slope;
  if (n > 2) {
    const double dof = static_cast<double>(n - 2);
    // Weights are treated as relative precisions; the residual variance is
    // re-estimated from the fit.
    fit.slope_stderr = std::sqrt(fit.residual_ss / dof / sxx);
    const boost::math::students_t dist(dof);
    const double tq = boost::math::quantile(boost::math::complement(dist, 0.025));
    fit.slope_ci_low = fit.slope - tq * fit.slope_stderr;
    fit.slope_ci_high = fit.slope + tq * fit.slope_stderr;
  }
  return fit;
}

MeanEstimate mean_and_stderr(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) throw InsufficientDataError("mean of an empty sample");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  if (n == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))};
}

double weighted_mean(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size()) throw ContractError("weighted_mean: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (weights[i] == 0.0) continue;
    num += weights[i] * values[i];
    den += weights[i];
  }
  if (den <= 0.0) throw DegenerateEnsembleError("weighted_mean: all weights are zero");
  return num / den;
}

double effective_sample_size(std::span<const double> weights) {
  double s = 0.0, s2 = 0.0;
  for (double w : weights) {
    s += w;
    s2 += w * w;
  }
  return s2 > 0.0 ? s * s / s2 : 0.0;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InsufficientDataError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

BootstrapSummary summarize_replicas(double estimate, std::vector<double> replicas) {
  BootstrapSummary out;
  out.estimate = estimate;
  if (replicas.empty()) return out;
  const auto m = mean_and_stderr(replicas);
  out.standard_error = m.standard_error * std::sqrt(static_cast<double>(replicas.size()));
  out.ci_low = quantile(replicas, 0.025);
  out.ci_high = quantile(replicas, 0.975);
  out.replicas = std::move(replicas);
  return out;
}

BootstrapSummary bootstrap(std::size_t n, std::size_t replicas, std::uint64_t seed,
                           const std::function<double(std::span<const double>)>& statistic,
                           std::size_t threads) {
  std::vector<double> counts_all(n, 1.0);
  const double estimate = statistic(counts_all);
  std::vector<double> values(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    const CounterRng rng(seed, r);
    std::vector<double> counts(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) counts[rng.below(i, n)] += 1.0;
    values[r] = statistic(counts);
  });
  return summarize_replicas(estimate, std::move(values));
}

BootstrapSummary bootstrap_weighted_mean(std::span<const double> values,
                                         std::span<const double> weights, std::size_t replicas,
                                         std::uint64_t seed, std::size_t threads) {
  if (values.size() != weights.size()) throw ContractError("bootstrap: size mismatch");
  return bootstrap(
      values.size(), replicas, seed,
      [&](std::span<const double> counts) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
          const double w = counts[i] * weights[i];
          if (w == 0.0) continue;
          num += w * values[i];
          den += w;
        }
        return den > 0.0 ? num / den : 0.0;
      },
      threads);
}

}  // namespace kdvlab
