#include "kdvlab/bourgain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fft.hpp"
#include "kdvlab/errors.hpp"
#include "kdvlab/kdv_flow.hpp"
#include "kdvlab/parallel.hpp"
#include "kdvlab/rng.hpp"

namespace kdvlab {
namespace {

constexpr double kPi = std::numbers::pi;

int signed_index(std::size_t i, std::size_t n) {
  return i < n / 2 ? static_cast<int>(i) : static_cast<int>(i) - static_cast<int>(n);
}

double transition(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }

// Sums over the discrete spectrum: sqrt( sum_k ( sum_tau w(k,tau) |F^| dtau )^2 ) for
// the L1_tau terms, and sqrt( sum_{k,tau} w(k,tau)^2 |F^|^2 dtau ) for X^{s,b}.
double weighted_l2(const SpaceTimeField& f, double s, double b) {
  double sum = 0.0;
  for (const auto& mode : f.spectrum()) {
    const double k = std::abs(static_cast<double>(mode.k));
    const double spatial = s == 0.0 ? 1.0 : std::pow(k, s);
    const double cube = static_cast<double>(mode.k) * mode.k * mode.k;
    const double w = spatial * std::pow(japanese(mode.tau - cube), b);
    sum += w * w * mode.magnitude * mode.magnitude;
  }
  return std::sqrt(sum * f.dtau());
}

double weighted_l1(const SpaceTimeField& f, double s, double power) {
  std::vector<double> per_k(f.nx(), 0.0);
  for (const auto& mode : f.spectrum()) {
    const double k = std::abs(static_cast<double>(mode.k));
    const double spatial = s == 0.0 ? 1.0 : std::pow(k, s);
    const double cube = static_cast<double>(mode.k) * mode.k * mode.k;
    const double w = spatial / std::pow(japanese(mode.tau - cube), power);
    per_k[static_cast<std::size_t>(mode.k + static_cast<int>(f.nx()) / 2)] +=
        w * mode.magnitude * f.dtau();
  }
  double sum = 0.0;
  for (double v : per_k) sum += v * v;
  return std::sqrt(sum);
}

std::size_t next_pow2_above(std::size_t n) { return std::bit_ceil(n + 1); }

}  // namespace

double bump(double t) noexcept {
  const double a = std::abs(t);
  if (a <= 1.0) return 1.0;
  if (a >= 2.0) return 0.0;
  const double up = transition(2.0 - a);
  return up / (up + transition(a - 1.0));
}

SpaceTimeField::SpaceTimeField(std::size_t nx, std::size_t nt, double half_window,
                               std::vector<double> values)
    : nx_(nx), nt_(nt), half_window_(half_window), values_(std::move(values)) {
  auto pow2 = [](std::size_t n) { return n >= 8 && std::has_single_bit(n); };
  if (!pow2(nx_) || !pow2(nt_)) throw ContractError("space-time grid sizes must be powers of two >= 8");
  if (!(half_window_ > 0.0)) throw ContractError("time window must be positive");
  if (values_.size() != nx_ * nt_) throw ContractError("space-time grid has the wrong size");
  double scale = 0.0;
  for (double v : values_) {
    if (!std::isfinite(v)) throw ContractError("space-time values must be finite");
    scale = std::max(scale, std::abs(v));
  }
  for (std::size_t m = 0; m < nt_; ++m) {
    double mean = 0.0;
    for (std::size_t j = 0; j < nx_; ++j) mean += values_[m * nx_ + j];
    mean /= static_cast<double>(nx_);
    if (std::abs(mean) > 1e-10 * (1.0 + scale)) {
      throw ContractError("space-time field must have zero spatial mean at every time");
    }
  }
}

SpaceTimeField SpaceTimeField::from_function(std::size_t nx, std::size_t nt, double half_window,
                                             const std::function<double(double, double)>& f) {
  std::vector<double> v(nx * nt);
  const double dt = 2.0 * half_window / static_cast<double>(nt);
  for (std::size_t m = 0; m < nt; ++m) {
    const double t = -half_window + static_cast<double>(m) * dt;
    for (std::size_t j = 0; j < nx; ++j) {
      v[m * nx + j] = f(2.0 * kPi * static_cast<double>(j) / static_cast<double>(nx), t);
    }
  }
  return SpaceTimeField(nx, nt, half_window, std::move(v));
}

SpaceTimeField SpaceTimeField::linear_solution(const TorusField& u0, std::size_t nx, std::size_t nt,
                                               double half_window,
                                               std::optional<double> cutoff_time) {
  if (2 * u0.cutoff() >= nx) throw ContractError("spatial grid too coarse for the datum");
  std::vector<double> v(nx * nt);
  const double dt = 2.0 * half_window / static_cast<double>(nt);
  for (std::size_t m = 0; m < nt; ++m) {
    const double t = -half_window + static_cast<double>(m) * dt;
    const double eta = cutoff_time ? bump(t / *cutoff_time) : 1.0;
    const auto slice = linear_flow(u0, t).sample(nx);
    for (std::size_t j = 0; j < nx; ++j) v[m * nx + j] = eta * slice[j];
  }
  return SpaceTimeField(nx, nt, half_window, std::move(v));
}

double SpaceTimeField::dtau() const noexcept { return kPi / half_window_; }

double SpaceTimeField::x(std::size_t j) const noexcept {
  return 2.0 * kPi * static_cast<double>(j) / static_cast<double>(nx_);
}

double SpaceTimeField::t(std::size_t m) const noexcept {
  return -half_window_ + static_cast<double>(m) * dt();
}

SpaceTimeField SpaceTimeField::localized(double cutoff_time) const {
  std::vector<double> v = values_;
  for (std::size_t m = 0; m < nt_; ++m) {
    const double eta = bump(t(m) / cutoff_time);
    for (std::size_t j = 0; j < nx_; ++j) v[m * nx_ + j] *= eta;
  }
  return SpaceTimeField(nx_, nt_, half_window_, std::move(v));
}

SpaceTimeField SpaceTimeField::derivative_of_product(const SpaceTimeField& other) const {
  if (other.nx_ != nx_ || other.nt_ != nt_ || other.half_window_ != half_window_) {
    throw ContractError("space-time grids differ");
  }
  detail::RealFft fft(nx_);
  std::vector<double> v(nx_ * nt_);
  for (std::size_t m = 0; m < nt_; ++m) {
    auto grid = fft.grid();
    for (std::size_t j = 0; j < nx_; ++j) grid[j] = values_[m * nx_ + j] * other.values_[m * nx_ + j];
    fft.forward();
    auto spec = fft.spectrum();
    spec[0] = Complex{};
    for (std::size_t k = 1; k < spec.size(); ++k) {
      // The Nyquist mode has no real derivative; drop it.
      spec[k] = k == nx_ / 2 ? Complex{} : spec[k] * Complex(0.0, static_cast<double>(k));
    }
    fft.backward();
    for (std::size_t j = 0; j < nx_; ++j) v[m * nx_ + j] = grid[j] / static_cast<double>(nx_);
  }
  return SpaceTimeField(nx_, nt_, half_window_, std::move(v));
}

SpaceTimeField& SpaceTimeField::operator*=(double scale) {
  for (double& v : values_) v *= scale;
  return *this;
}

std::vector<SpaceTimeField::Mode> SpaceTimeField::spectrum() const {
  detail::ComplexFft2d fft(nt_, nx_);
  auto data = fft.data();
  std::copy(values_.begin(), values_.end(), data.begin());
  fft.forward();
  const double quad = dt() / static_cast<double>(nx_);
  std::vector<Mode> out;
  for (std::size_t q = 0; q < nt_; ++q) {
    for (std::size_t j = 0; j < nx_; ++j) {
      const double mag = std::abs(data[q * nx_ + j]) * quad;
      if (mag == 0.0) continue;
      out.push_back({signed_index(j, nx_), signed_index(q, nt_) * dtau(), mag});
    }
  }
  return out;
}

double xsb_norm(const SpaceTimeField& f, double s, double b) {
  return weighted_l2(f, SobolevIndex(s).value, b);
}

double ys_norm(const SpaceTimeField& f, double s) {
  return weighted_l2(f, SobolevIndex(s).value, 0.5) + weighted_l1(f, s, 0.0);
}

double zs_norm(const SpaceTimeField& f, double s) {
  return weighted_l2(f, SobolevIndex(s).value, -0.5) + weighted_l1(f, s, 1.0);
}

double spacetime_l2(const SpaceTimeField& f) {
  double sum = 0.0;
  for (double v : f.values()) sum += v * v;
  const double dx = 2.0 * kPi / static_cast<double>(f.nx());
  return std::sqrt(sum * dx * f.dt());
}

L4Ratio l4_ratio(std::span<const TorusMode> modes) {
  int max_m = 1;
  long max_n = 1;
  double rhs_sq = 0.0;
  for (const auto& md : modes) {
    if (md.m <= 0) throw ContractError("torus modes must have m > 0");
    max_m = std::max(max_m, md.m);
    max_n = std::max(max_n, std::abs(md.n));
    const double cube = static_cast<double>(md.m) * md.m * md.m;
    // Each listed mode stands for itself and its conjugate.
    rhs_sq += 2.0 * std::pow(japanese(static_cast<double>(md.n) - cube), 2.0 / 3.0) *
              std::norm(md.value);
  }
  // f^4 has frequencies up to 4 max, so a grid above that integrates it exactly.
  const std::size_t nx = next_pow2_above(4 * static_cast<std::size_t>(max_m));
  const std::size_t nt = next_pow2_above(4 * static_cast<std::size_t>(max_n));
  detail::ComplexFft2d fft(nt, nx);
  auto data = fft.data();
  std::fill(data.begin(), data.end(), Complex{});
  auto wrap = [](long i, std::size_t n) {
    const long sn = static_cast<long>(n);
    return static_cast<std::size_t>(((i % sn) + sn) % sn);
  };
  for (const auto& md : modes) {
    data[wrap(md.n, nt) * nx + wrap(md.m, nx)] += md.value;
    data[wrap(-md.n, nt) * nx + wrap(-md.m, nx)] += std::conj(md.value);
  }
  fft.backward();
  double sum4 = 0.0;
  for (const Complex& z : data) {
    const double v2 = z.real() * z.real();
    sum4 += v2 * v2;
  }
  const double lhs = std::pow(sum4 / static_cast<double>(nx * nt), 0.25);
  const double rhs = std::sqrt(rhs_sq);
  return {lhs, rhs, rhs > 0.0 ? lhs / rhs : 0.0};
}

L4Probe l4_inequality_probe(std::size_t trials, std::size_t band, std::uint64_t seed,
                            std::size_t threads) {
  if (trials < 100) throw ContractError("the L4 probe needs at least 100 trials");
  if (band < 1) throw ContractError("band must be >= 1");
  L4Probe out;
  out.band = band;
  out.trials.resize(trials);
  parallel_for(trials, threads, [&](std::size_t trial) {
    const CounterRng rng(derive_seed(seed, band), trial);
    std::vector<TorusMode> modes;
    std::uint64_t counter = 0;
    const long b = static_cast<long>(band);
    for (long m = 1; m <= b; ++m) {
      for (long d = -b; d <= b; ++d) {
        const bool keep = rng.uniform(2 * counter) < 0.5;
        const auto [re, im] = rng.normal_pair(2 * counter + 1);
        ++counter;
        if (!keep) continue;
        const double scale = std::pow(japanese(static_cast<double>(d)), -1.0 / 3.0) / std::sqrt(2.0);
        modes.push_back({static_cast<int>(m), m * m * m + d, Complex(re, im) * scale});
      }
    }
    if (modes.empty()) modes.push_back({1, 1, Complex(1.0, 0.0)});
    out.trials[trial] = l4_ratio(modes);
  });
  std::vector<double> ratios;
  for (const auto& r : out.trials) ratios.push_back(r.ratio);
  out.max_ratio = *std::max_element(ratios.begin(), ratios.end());
  out.median_ratio = quantile(ratios, 0.5);
  out.q90_ratio = quantile(ratios, 0.9);
  return out;
}

L4Refinement l4_refinement_study(std::size_t trials, std::size_t band, std::uint64_t seed,
                                 std::size_t threads) {
  L4Refinement out;
  out.coarse = l4_inequality_probe(trials, band, seed, threads);
  out.fine = l4_inequality_probe(trials, 2 * band, seed, threads);
  out.growth = out.fine.max_ratio / out.coarse.max_ratio;
  out.stable = out.growth < 1.1;
  return out;
}

BilinearProbe bilinear_scaling_probe(const TorusField& u0, const TorusField& v0, double s,
                                     std::span<const double> cutoff_times, std::size_t nx,
                                     std::size_t nt) {
  if (cutoff_times.size() < 4) throw ContractError("bilinear probe needs >= 4 cutoff times");
  for (double T : cutoff_times) {
    if (!(T > 0.0 && T <= 1.0)) throw ContractError("cutoff times must lie in (0, 1]");
  }
  const double window = kPi;  // holds the support [-2, 2] of eta
  const auto u = SpaceTimeField::linear_solution(u0, nx, nt, window, 1.0);
  const auto v = SpaceTimeField::linear_solution(v0, nx, nt, window, 1.0);
  const double us = ys_norm(u, s), u0n = ys_norm(u, 0.0);
  const double vs = ys_norm(v, s), v0n = ys_norm(v, 0.0);
  const double combo = us * v0n + u0n * vs;
  const auto product = u.derivative_of_product(v);

  BilinearProbe out;
  std::vector<double> lx, ly;
  bool finite = true;
  for (double T : cutoff_times) {
    BilinearRecord r;
    r.cutoff_time = T;
    r.numerator = zs_norm(product.localized(T), s);
    r.denominator = std::pow(T, 1.0 / 12.0) * combo;
    r.ratio = r.denominator > 0.0 ? r.numerator / r.denominator : 0.0;
    finite = finite && std::isfinite(r.ratio);
    out.fitted_constant = std::max(out.fitted_constant, r.ratio);
    if (r.ratio > 0.0) {
      lx.push_back(std::log(T));
      ly.push_back(std::log(r.ratio));
    }
    out.records.push_back(r);
  }
  if (lx.size() == cutoff_times.size()) out.scaling = linear_fit(lx, ly);
  // Ratio must not grow significantly as T -> 0 (slope in log T not significantly negative).
  const bool no_blowup = !out.scaling || out.scaling->slope_ci_high >= 0.0;
  out.bounded = finite && no_blowup &&
                std::all_of(out.records.begin(), out.records.end(),
                            [&](const BilinearRecord& r) { return r.ratio <= out.fitted_constant; });
  return out;
}

std::string ratio_csv(std::span<const RatioRow> rows, const std::string& parameter_name) {
  std::ostringstream out;
  out.precision(17);
  out << "trial," << parameter_name << ",lhs,rhs,ratio\n";
  for (const auto& r : rows) {
    out << r.trial << ',' << r.parameter << ',' << r.lhs << ',' << r.rhs << ',' << r.ratio << '\n';
  }
  return out.str();
}

std::vector<RatioRow> ratio_rows(const L4Refinement& study) {
  std::vector<RatioRow> rows;
  for (const L4Probe* p : {&study.coarse, &study.fine}) {
    for (std::size_t i = 0; i < p->trials.size(); ++i) {
      const auto& t = p->trials[i];
      rows.push_back({i, static_cast<double>(p->band), t.lhs, t.rhs, t.ratio});
    }
  }
  return rows;
}

std::vector<RatioRow> ratio_rows(const BilinearProbe& probe) {
  std::vector<RatioRow> rows;
  for (std::size_t i = 0; i < probe.records.size(); ++i) {
    const auto& r = probe.records[i];
    rows.push_back({i, r.cutoff_time, r.numerator, r.denominator, r.ratio});
  }
  return rows;
}

}  // namespace kdvlab
