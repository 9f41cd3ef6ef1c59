#include "kdvlab/kdv_flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fft.hpp"
#include "kdvlab/errors.hpp"

namespace kdvlab {
namespace {

constexpr double kPi = std::numbers::pi;

// Lawson (integrating-factor) RK4 on the amplitudes a(1..M). The k^3 phase is
// applied exactly; the quadratic term is evaluated on a grid of 2M+2 points.
class KdvStepper {
 public:
  KdvStepper(std::size_t modes, std::size_t band)
      : modes_(modes), band_(band), fft_(2 * modes + 2), k1_(modes), k2_(modes), k3_(modes),
        k4_(modes), stage_(modes) {}

  void set_step(double dt) {
    dt_ = dt;
    half_.resize(modes_);
    full_.resize(modes_);
    for (std::size_t k = 1; k <= modes_; ++k) {
      const double kc = static_cast<double>(k) * static_cast<double>(k) * static_cast<double>(k);
      half_[k - 1] = std::polar(1.0, kc * dt / 2.0);
      full_[k - 1] = std::polar(1.0, kc * dt);
    }
  }

  void step(std::vector<Complex>& a) {
    const double h = dt_;
    nonlinear(a, k1_);
    for (std::size_t i = 0; i < modes_; ++i) stage_[i] = half_[i] * (a[i] + 0.5 * h * k1_[i]);
    nonlinear(stage_, k2_);
    for (std::size_t i = 0; i < modes_; ++i) stage_[i] = half_[i] * a[i] + 0.5 * h * k2_[i];
    nonlinear(stage_, k3_);
    for (std::size_t i = 0; i < modes_; ++i) stage_[i] = full_[i] * a[i] + h * half_[i] * k3_[i];
    nonlinear(stage_, k4_);
    for (std::size_t i = 0; i < modes_; ++i) {
      a[i] = full_[i] * a[i] +
             (h / 6.0) * (full_[i] * k1_[i] + 2.0 * half_[i] * (k2_[i] + k3_[i]) + k4_[i]);
    }
  }

 private:
  // -1/2 d_x (P u)^2 projected on modes <= band, where P keeps modes <= band.
  void nonlinear(const std::vector<Complex>& a, std::vector<Complex>& out) {
    auto spec = fft_.spectrum();
    std::fill(spec.begin(), spec.end(), Complex{});
    for (std::size_t k = 1; k <= band_; ++k) spec[k] = a[k - 1] / kPi;
    fft_.backward();
    for (double& v : fft_.grid()) v *= v;
    fft_.forward();
    const double scale = kPi / static_cast<double>(fft_.size());
    std::fill(out.begin(), out.end(), Complex{});
    for (std::size_t k = 1; k <= band_; ++k) {
      out[k - 1] = Complex(0.0, -0.5 * static_cast<double>(k)) * (spec[k] * scale);
    }
  }

  std::size_t modes_;
  std::size_t band_;
  detail::RealFft fft_;
  double dt_ = 0.0;
  std::vector<Complex> half_, full_;
  std::vector<Complex> k1_, k2_, k3_, k4_, stage_;
};

bool finite(const std::vector<Complex>& a) {
  return std::all_of(a.begin(), a.end(), [](const Complex& c) {
    return std::isfinite(c.real()) && std::isfinite(c.imag());
  });
}

// Advances `state` from t0 to t1 in equal steps no longer than max_dt.
void integrate(KdvStepper& stepper, std::vector<Complex>& state, double t0, double t1,
               double max_dt, std::size_t& step_counter) {
  const double span = t1 - t0;
  if (span == 0.0) return;
  const auto steps = static_cast<std::size_t>(std::ceil(std::abs(span) / max_dt - 1e-9));
  const std::size_t n = std::max<std::size_t>(1, steps);
  stepper.set_step(span / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    stepper.step(state);
    ++step_counter;
    if (!finite(state)) throw DivergenceError(step_counter, "non-finite KdV state");
  }
}

std::size_t clip_band(const SolverConfig& cfg, std::optional<std::size_t> n) {
  const std::size_t band = cfg.nonlinear_band();
  return n ? std::min(*n, band) : band;
}

std::vector<Complex> initial_state(const TorusField& u0, const SolverConfig& cfg) {
  if (u0.cutoff() > cfg.modes) {
    throw ContractError("initial datum has " + std::to_string(u0.cutoff()) +
                        " modes, more than the solver's " + std::to_string(cfg.modes));
  }
  const TorusField padded = u0.with_cutoff(cfg.modes);
  return {padded.amplitudes().begin(), padded.amplitudes().end()};
}

}  // namespace

std::size_t SolverConfig::nonlinear_band() const noexcept {
  return dealias ? (2 * modes) / 3 : modes;
}

void SolverConfig::validate() const {
  if (modes < 4) throw ContractError("solver needs at least 4 modes");
  if (dt && !(*dt > 0.0)) throw ContractError("time step must be positive");
  if (!(cfl > 0.0)) throw ContractError("cfl constant must be positive");
}

double SolverConfig::step_for(const TorusField& u0) const {
  validate();
  const double amplitude = linf_norm(u0);
  const double bound = cfl / (static_cast<double>(modes) * (1.0 + amplitude));
  if (!dt) return std::min({1e-3, 0.5 / (static_cast<double>(modes) * (1.0 + amplitude)), bound});
  if (*dt > bound * (1.0 + 1e-12)) {
    throw ContractError("time step " + std::to_string(*dt) + " exceeds the stability bound " +
                        std::to_string(bound));
  }
  return *dt;
}

ConservedQuantities conserved_quantities(const TorusField& u) {
  // The zero mode is not represented, so the mean is identically zero.
  return {0.0, l2_norm(u), hamiltonian(u)};
}

void Trajectory::push(double t, TorusField u) {
  if (!times.empty() && !(t > times.back())) throw ContractError("trajectory times must increase");
  if (!states.empty() && states.front().cutoff() != u.cutoff()) {
    throw ContractError("trajectory states must share one cutoff");
  }
  conserved.push_back(conserved_quantities(u));
  times.push_back(t);
  states.push_back(std::move(u));
}

TorusField linear_flow(const TorusField& u0, double t) {
  TorusField out = u0;
  for (std::size_t k = 1; k <= out.cutoff(); ++k) {
    const double kc = static_cast<double>(k) * static_cast<double>(k) * static_cast<double>(k);
    out[k] *= std::polar(1.0, kc * t);
  }
  return out;
}

TorusField evolve(const TorusField& u0, double t, const SolverConfig& cfg) {
  return evolve_projected(u0, t, cfg.nonlinear_band(), cfg);
}

TorusField evolve_projected(const TorusField& u0, double t, std::size_t n,
                            const SolverConfig& cfg) {
  const double dt = cfg.step_for(u0);
  auto state = initial_state(u0, cfg);
  KdvStepper stepper(cfg.modes, clip_band(cfg, n));
  std::size_t steps = 0;
  integrate(stepper, state, 0.0, t, dt, steps);
  return TorusField(std::move(state));
}

Trajectory evolve_trajectory(const TorusField& u0, std::span<const double> times,
                             const SolverConfig& cfg, std::optional<std::size_t> n) {
  const double dt = cfg.step_for(u0);
  auto state = initial_state(u0, cfg);
  KdvStepper stepper(cfg.modes, clip_band(cfg, n));
  Trajectory traj;
  double now = 0.0;
  std::size_t steps = 0;
  for (double t : times) {
    integrate(stepper, state, now, t, dt, steps);
    now = t;
    traj.push(t, TorusField(state));
  }
  return traj;
}

Trajectory linear_trajectory(const TorusField& u0, std::span<const double> times) {
  Trajectory traj;
  for (double t : times) traj.push(t, linear_flow(u0, t));
  return traj;
}

DriftSummary conserved_report(const Trajectory& traj) {
  if (traj.empty()) throw ContractError("empty trajectory");
  const auto& first = traj.conserved.front();
  auto relative = [](double value, double ref) {
    return ref != 0.0 ? std::abs(value - ref) / std::abs(ref) : std::abs(value - ref);
  };
  DriftSummary d;
  for (const auto& c : traj.conserved) {
    d.l2_relative = std::max(d.l2_relative, relative(c.l2, first.l2));
    d.hamiltonian_relative =
        std::max(d.hamiltonian_relative, relative(c.hamiltonian, first.hamiltonian));
    d.mean_absolute = std::max(d.mean_absolute, std::abs(c.mean - first.mean));
  }
  return d;
}

LipschitzProbe lipschitz_probe(const TorusField& u0, const TorusField& v0, double t,
                               SobolevIndex s, const SolverConfig& cfg) {
  const std::size_t m = std::max(u0.cutoff(), v0.cutoff());
  const TorusField a = u0.with_cutoff(m), b = v0.with_cutoff(m);
  LipschitzProbe p;
  p.t = t;
  const TorusField diff0 = a - b;
  p.initial_distance_hs = sobolev_norm(diff0, s);
  p.initial_distance_l2 = l2_norm(diff0);
  p.hs_size = sobolev_norm(a, s) + sobolev_norm(b, s);
  p.l2_size_pow12 = std::pow(l2_norm(a) + l2_norm(b), 12);
  if (t == 0.0) {
    p.distance_hs = p.initial_distance_hs;
    p.distance_l2 = p.initial_distance_l2;
    return p;
  }
  // One step size for both data keeps the discretizations identical.
  SolverConfig shared = cfg;
  shared.dt = std::min(cfg.step_for(a), cfg.step_for(b));
  const TorusField diff = evolve(a, t, shared) - evolve(b, t, shared);
  p.distance_hs = sobolev_norm(diff, s);
  p.distance_l2 = l2_norm(diff);
  return p;
}

}  // namespace kdvlab
