#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "kdvlab/torus_field.hpp"

namespace kdvlab {

/// Discretization of the KdV flow d_t u + d_x^3 u + 1/2 d_x(u^2) = 0.
struct SolverConfig {
  /// Spectral truncation M_solver of the integrator.
  std::size_t modes = 64;
  /// Time step; unset means min(1e-3, 0.5 / (modes * (1 + ||u0||_inf))).
  std::optional<double> dt;
  /// 2/3-rule de-aliasing of the quadratic term.
  bool dealias = true;
  /// Stability constant: dt must not exceed cfl / (modes * (1 + ||u0||_inf)).
  double cfl = 1.0;

  /// Highest mode that feeds and receives the nonlinear term.
  std::size_t nonlinear_band() const noexcept;
  /// Step size used for initial datum u0 (validated against the CFL bound).
  double step_for(const TorusField& u0) const;
  void validate() const;
};

struct ConservedQuantities {
  double mean = 0.0;
  double l2 = 0.0;
  double hamiltonian = 0.0;
};

ConservedQuantities conserved_quantities(const TorusField& u);

struct Trajectory {
  std::vector<double> times;
  std::vector<TorusField> states;
  std::vector<ConservedQuantities> conserved;

  /// Appends a state; times must increase strictly and cutoffs must agree.
  void push(double t, TorusField u);
  bool empty() const noexcept { return times.empty(); }
};

/// Exact linear group S(t): a(k) -> e^{i k^3 t} a(k).
TorusField linear_flow(const TorusField& u0, double t);

/// Numerical KdV flow Psi(t) u0, integrating-factor RK4, negative t allowed.
/// The result has cutoff cfg.modes. Throws DivergenceError on a non-finite state.
TorusField evolve(const TorusField& u0, double t, const SolverConfig& cfg);

/// Galerkin flow Psi_N(t): modes <= n follow the projected nonlinear ODE and
/// modes > n the linear flow. n is clipped to cfg.nonlinear_band().
TorusField evolve_projected(const TorusField& u0, double t, std::size_t n,
                            const SolverConfig& cfg);

/// States at each of `times` (sorted, may start at 0) under Psi, or Psi_N when n is set.
Trajectory evolve_trajectory(const TorusField& u0, std::span<const double> times,
                             const SolverConfig& cfg, std::optional<std::size_t> n = {});
Trajectory linear_trajectory(const TorusField& u0, std::span<const double> times);

struct DriftSummary {
  double l2_relative = 0.0;
  double hamiltonian_relative = 0.0;
  double mean_absolute = 0.0;
};

/// Max drift of each invariant relative to the first state of the trajectory.
DriftSummary conserved_report(const Trajectory& traj);

/// Distance between two evolved data together with the ingredients of the
/// exponential Lipschitz bound.
struct LipschitzProbe {
  double t = 0.0;
  double distance_hs = 0.0;
  double distance_l2 = 0.0;
  double initial_distance_hs = 0.0;
  double initial_distance_l2 = 0.0;
  double hs_size = 0.0;         ///< ||u0||_{H^s} + ||v0||_{H^s}
  double l2_size_pow12 = 0.0;   ///< (||u0||_{L2} + ||v0||_{L2})^12
};

LipschitzProbe lipschitz_probe(const TorusField& u0, const TorusField& v0, double t,
                               SobolevIndex s, const SolverConfig& cfg);

}  // namespace kdvlab
