#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "kdvlab/kdv_flow.hpp"
#include "kdvlab/measures.hpp"

namespace kdvlab {

/// How the second ensemble of a continuity or stability run is built from the first.
struct PerturbationSpec {
  enum class Family { shift, resample, rescale };
  Family family = Family::shift;
  /// Shift size in the mode direction c_mode, or rescale factor 1 + delta.
  double delta = 1e-3;
  std::size_t mode = 1;
  /// Stream for the resample family.
  std::uint64_t seed = 2;
};

std::string to_string(PerturbationSpec::Family family);

/// Flat key = value configuration. Keys (all optional except `experiment`):
///
///   experiment              continuity | stability | invariance | galerkin | tails
///   seed                    master seed
///   output.dir              report directory
///   solver.modes, solver.dt, solver.dealias, solver.cfl
///   measure.kind            gaussian | gibbs
///   measure.modes, measure.cubic_coefficient, measure.cutoff_radius, measure.resample
///   ensemble.size
///   time.grid               comma separated times
///   time.horizon            largest admissible |t|
///   metric.s, metric.p
///   perturbation.family     shift | resample | rescale
///   perturbation.delta, perturbation.mode, perturbation.seed
///   bootstrap.replicas
///   invariance.mode         linear | nonlinear
///   galerkin.N_grid         comma separated projections
///   galerkin.sigma          regularity exponent of the rate, > metric.s
///   galerkin.init           "sample" or a field expression such as c1+0.5c2
///   galerkin.init_modes     cutoff of a sampled initial datum
///   tails.s                 comma separated Sobolev indices of H^s functionals
///   tails.radii             number of radii on the survival grid
struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "kdvlab-out";

  SolverConfig solver;
  std::string measure_kind = "gibbs";
  GibbsSpec measure;
  std::size_t ensemble_size = 256;
  std::vector<double> time_grid{0.25, 0.5, 1.0};
  double time_horizon = 10.0;
  MetricContext metric;
  PerturbationSpec perturbation;
  std::size_t bootstrap_replicas = 200;
  std::string invariance_mode = "nonlinear";
  std::vector<std::size_t> galerkin_grid{4, 8, 16, 32};
  double galerkin_sigma = 0.45;
  std::string galerkin_init = "sample";
  std::size_t galerkin_init_modes = 64;
  std::vector<double> tails_s{0.25};
  std::size_t tails_radii = 24;

  /// Throws ContractError (or DomainError) on an invalid combination.
  void validate() const;
  /// Canonical key = value text, keys sorted; output.dir is left out so the
  /// hash identifies the computation rather than where it was written.
  std::string canonical() const;
  /// FNV-1a 64 of canonical().
  std::uint64_t hash() const;
};

/// Sets one key from its textual value. FormatError for unknown keys or bad values.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Parses `key = value` lines; '#' starts a comment. FormatError on malformed input.
ExperimentConfig parse_config(const std::string& text);
/// IoError when the file cannot be read.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Parses a sum of basis terms such as "c1 + 0.5c2 - 0.25*s3" into a field with
/// the given cutoff (raised to the largest mode mentioned). FormatError on bad syntax.
TorusField parse_field_expression(const std::string& expression, std::size_t cutoff = 0);

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a(const std::string& text) noexcept;

}  // namespace kdvlab
