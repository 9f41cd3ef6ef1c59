#include "kdvlab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <numbers>
#include <numeric>

#include "kdvlab/errors.hpp"
#include "kdvlab/parallel.hpp"
#include "kdvlab/rng.hpp"

namespace kdvlab {
namespace {

constexpr double kWeightTolerance = 1e-12;
constexpr std::uint64_t kResampleTag = 0x7265'7361'6d70'6c65ULL;

void check_samples(const std::vector<TorusField>& samples) {
  if (samples.empty()) throw ContractError("an ensemble needs at least one sample");
  const std::size_t m = samples.front().cutoff();
  for (const auto& u : samples) {
    if (u.cutoff() != m) throw ContractError("ensemble samples must share one cutoff");
  }
}

}  // namespace

void GaussianSpec::validate() const {
  if (modes < 1) throw ContractError("gaussian spec needs at least one mode");
}

void GibbsSpec::validate() const {
  base.validate();
  if (!(cutoff_radius > 0.0)) throw ContractError("cutoff radius must be positive");
  if (!std::isfinite(cubic_coefficient)) throw ContractError("cubic coefficient must be finite");
}

WeightedEnsemble::WeightedEnsemble(std::vector<TorusField> samples, std::vector<double> weights,
                                   MetricContext metric, Provenance provenance)
    : samples_(std::move(samples)), weights_(std::move(weights)), metric_(metric),
      provenance_(std::move(provenance)) {
  check_samples(samples_);
  if (weights_.size() != samples_.size()) throw ContractError("one weight per sample required");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ContractError("weights must be finite and >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) > kWeightTolerance) {
    throw ContractError("ensemble weights sum to " + std::to_string(total) + ", not 1");
  }
}

WeightedEnsemble WeightedEnsemble::uniform(std::vector<TorusField> samples, MetricContext metric,
                                           Provenance provenance) {
  check_samples(samples);
  std::vector<double> w(samples.size(), 1.0 / static_cast<double>(samples.size()));
  return normalized(std::move(samples), std::move(w), metric, std::move(provenance));
}

WeightedEnsemble WeightedEnsemble::normalized(std::vector<TorusField> samples,
                                              std::vector<double> weights, MetricContext metric,
                                              Provenance provenance) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw DegenerateEnsembleError("all ensemble weights are zero");
  for (double& w : weights) w /= total;
  return WeightedEnsemble(std::move(samples), std::move(weights), metric, std::move(provenance));
}

std::vector<std::size_t> WeightedEnsemble::support_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] > 0.0) idx.push_back(i);
  }
  return idx;
}

WeightedEnsemble WeightedEnsemble::support() const {
  std::vector<TorusField> s;
  std::vector<double> w;
  for (std::size_t i : support_indices()) {
    s.push_back(samples_[i]);
    w.push_back(weights_[i]);
  }
  return normalized(std::move(s), std::move(w), metric_, provenance_);
}

WeightedEnsemble WeightedEnsemble::pushforward(
    const std::function<TorusField(const TorusField&)>& map, std::size_t threads) const {
  std::vector<TorusField> out(samples_);
  const auto idx = support_indices();
  parallel_for(idx.size(), threads, [&](std::size_t j) { out[idx[j]] = map(samples_[idx[j]]); });
  // Zero-weight samples are not evolved; match the image cutoff.
  const std::size_t m = out[idx.front()].cutoff();
  for (auto& u : out) {
    if (u.cutoff() != m) u = u.with_cutoff(m);
  }
  return WeightedEnsemble(std::move(out), weights_, metric_, provenance_);
}

WeightedEnsemble WeightedEnsemble::with_cutoff(std::size_t cutoff) const {
  std::vector<TorusField> out;
  out.reserve(samples_.size());
  for (const auto& u : samples_) out.push_back(u.with_cutoff(cutoff));
  return WeightedEnsemble(std::move(out), weights_, metric_, provenance_);
}

WeightedEnsemble WeightedEnsemble::with_metric(MetricContext metric) const {
  return WeightedEnsemble(samples_, weights_, metric, provenance_);
}

TorusField gaussian_draw(const GaussianSpec& spec, std::uint64_t index) {
  const CounterRng rng(spec.seed, index);
  const double half_sqrt_pi = std::sqrt(std::numbers::pi) / 2.0;
  std::vector<Complex> modes(spec.modes);
  for (std::size_t k = 1; k <= spec.modes; ++k) {
    const auto [h, l] = rng.normal_pair(k - 1);
    modes[k - 1] = Complex(h, -l) * (half_sqrt_pi / static_cast<double>(k));
  }
  return TorusField(std::move(modes));
}

WeightedEnsemble sample_gaussian(const GaussianSpec& spec, std::size_t n, std::size_t threads) {
  spec.validate();
  if (n < 1) throw ContractError("sample count must be >= 1");
  std::vector<TorusField> samples(n, TorusField::zero(spec.modes));
  parallel_for(n, threads, [&](std::size_t i) { samples[i] = gaussian_draw(spec, i); });
  return WeightedEnsemble::uniform(std::move(samples), {}, {"gaussian", spec.seed, false});
}

double expected_hs_norm_sq(std::size_t modes, double s) {
  const SobolevIndex index(s);
  if (index.value >= 0.5) throw DomainError("moment formula requires s < 1/2");
  double sum = 0.0;
  for (std::size_t n = 1; n <= modes; ++n) sum += std::pow(static_cast<double>(n), 2.0 * s - 2.0);
  return 2.0 * sum;
}

double gibbs_weight(const TorusField& u, const GibbsSpec& spec) {
  if (l2_norm(u) > spec.cutoff_radius) return 0.0;
  if (spec.cubic_coefficient == 0.0) return 1.0;
  const double cubic = spec.projection ? integral_u3(project(u, *spec.projection)) : integral_u3(u);
  return std::exp(spec.cubic_coefficient * cubic);
}

GibbsEnsemble sample_gibbs(const GibbsSpec& spec, std::size_t n, std::size_t threads) {
  spec.validate();
  WeightedEnsemble base = sample_gaussian(spec.base, n, threads);
  std::vector<double> f(n);
  parallel_for(n, threads, [&](std::size_t i) { f[i] = gibbs_weight(base.sample(i), spec); });
  const double total = std::accumulate(f.begin(), f.end(), 0.0);
  if (!(total > 0.0)) {
    throw DegenerateEnsembleError(
        "every draw has zero Gibbs weight; increase the sample count or change the seed");
  }

  GibbsEnsemble out{base, static_cast<double>(n) / total, f, effective_sample_size(f)};
  Provenance prov{"gibbs", spec.base.seed, spec.resample};
  if (!spec.resample) {
    out.ensemble = WeightedEnsemble::normalized(base.samples(), f, {}, prov);
    return out;
  }

  // Multinomial resampling by inverse CDF of the normalized weights.
  std::vector<double> cdf(n);
  std::partial_sum(f.begin(), f.end(), cdf.begin());
  const CounterRng rng(derive_seed(spec.base.seed, kResampleTag), 0);
  std::vector<TorusField> picked;
  picked.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double target = rng.uniform(i) * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    auto j = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), n - 1));
    while (f[j] == 0.0 && j > 0) --j;  // guard against landing on a flat CDF segment
    picked.push_back(base.sample(j));
  }
  out.ensemble = WeightedEnsemble::uniform(std::move(picked), {}, prov);
  return out;
}

double Functional::operator()(const TorusField& u) const {
  switch (kind) {
    case Kind::linf: return linf_norm(u);
    case Kind::l2: return l2_norm(u);
    case Kind::hs: return sobolev_norm(u, SobolevIndex(s));
  }
  return 0.0;
}

std::string Functional::name() const {
  switch (kind) {
    case Kind::linf: return "Linf";
    case Kind::l2: return "L2";
    case Kind::hs: {
      std::ostringstream out;
      out << "H^" << s;
      return out.str();
    }
  }
  return "?";
}

std::vector<double> survival_curve(const WeightedEnsemble& ens, const Functional& functional,
                                   std::span<const double> radii) {
  std::vector<double> values(ens.size());
  for (std::size_t i = 0; i < ens.size(); ++i) values[i] = functional(ens.sample(i));
  std::vector<double> out;
  out.reserve(radii.size());
  for (double r : radii) {
    double p = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] > r) p += ens.weight(i);
    }
    out.push_back(std::min(p, 1.0));
  }
  return out;
}

TailFit tail_fit(const WeightedEnsemble& ens, const Functional& functional,
                 std::span<const double> radii) {
  TailFit out;
  out.effective_size = effective_sample_size(ens.weights());
  if (out.effective_size < 500.0) {
    throw InsufficientDataError("tail fit needs >= 500 effective samples, got " +
                                std::to_string(out.effective_size));
  }
  out.radii.assign(radii.begin(), radii.end());
  out.survival = survival_curve(ens, functional, radii);

  std::vector<double> x, y, w;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double p = out.survival[i];
    if (p < 1e-3 || p > 0.5) continue;
    out.used.push_back(i);
    x.push_back(radii[i] * radii[i]);
    y.push_back(std::log(p));
    // Inverse binomial variance of log P.
    w.push_back(out.effective_size * p / (1.0 - p));
  }
  if (out.used.size() < 3) {
    throw InsufficientDataError("tail fit needs >= 3 radii with survival in [1e-3, 0.5]");
  }
  out.fit = linear_fit(x, y, w);
  return out;
}

MeanEstimate weighted_moment(const WeightedEnsemble& ens,
                             const std::function<double(const TorusField&)>& functional) {
  std::vector<double> values(ens.size());
  for (std::size_t i = 0; i < ens.size(); ++i) {
    values[i] = ens.weight(i) > 0.0 ? functional(ens.sample(i)) : 0.0;
  }
  const double mean = weighted_mean(values, ens.weights());
  double var = 0.0;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const double d = ens.weight(i) * (values[i] - mean);
    var += d * d;
  }
  // Uniform weights reproduce the usual s / sqrt(n) up to the n/(n-1) factor.
  const double ess = effective_sample_size(ens.weights());
  if (ess > 1.0) var *= ess / (ess - 1.0);
  return {mean, std::sqrt(var)};
}

FConvergence f_convergence_probe(const GibbsSpec& spec, std::span<const std::size_t> projections,
                                 std::size_t n, std::size_t threads) {
  spec.validate();
  for (std::size_t i = 1; i < projections.size(); ++i) {
    if (projections[i] <= projections[i - 1]) throw ContractError("projection grid must increase");
  }
  const WeightedEnsemble base = sample_gaussian(spec.base, n, threads);
  const std::size_t np = projections.size();
  GibbsSpec full = spec;
  full.projection.reset();

  // diffs[j * n + i] = |f(phi_i) - f_{N_j}(phi_i)|
  std::vector<double> diffs(np * n);
  parallel_for(n, threads, [&](std::size_t i) {
    const TorusField& u = base.sample(i);
    const double f = gibbs_weight(u, full);
    for (std::size_t j = 0; j < np; ++j) {
      GibbsSpec proj = spec;
      proj.projection = projections[j];
      diffs[j * n + i] = std::abs(f - gibbs_weight(u, proj));
    }
  });

  FConvergence out;
  out.projections.assign(projections.begin(), projections.end());
  std::vector<double> lx, ly;
  for (std::size_t j = 0; j < np; ++j) {
    const auto est = mean_and_stderr(std::span(diffs).subspan(j * n, n));
    out.error.push_back(est.mean);
    out.standard_error.push_back(est.standard_error);
    if (est.mean > 0.0) {
      lx.push_back(std::log(static_cast<double>(projections[j])));
      ly.push_back(std::log(est.mean));
    }
    if (j + 1 < np) {
      std::vector<double> paired(n);
      for (std::size_t i = 0; i < n; ++i) paired[i] = diffs[j * n + i] - diffs[(j + 1) * n + i];
      out.difference_stderr.push_back(mean_and_stderr(paired).standard_error);
    }
  }
  if (lx.size() >= 2) out.loglog = linear_fit(lx, ly);
  return out;
}

}  // namespace kdvlab
