#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kdvlab/config.hpp"
#include "kdvlab/measures.hpp"

namespace kdvlab {

inline constexpr const char* kKdvlabVersion = "0.1.0";

/// Result of one experiment run. Contains nothing that depends on the thread
/// count or wall clock, so reruns are byte-identical.
struct ExperimentReport {
  std::string experiment;
  /// Derived scalars: distances, fits with confidence intervals, R1, R2, baselines.
  nlohmann::json summary = nlohmann::json::object();
  /// Named pass/fail outcomes of the assertions the experiment makes.
  nlohmann::json checks = nlohmann::json::object();
  /// Config hash, seeds, library versions.
  nlohmann::json provenance = nlohmann::json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  /// Ensembles written next to the report as <name>.kdve.
  std::vector<std::pair<std::string, WeightedEnsemble>> ensembles;

  bool all_finite() const;
  bool all_checks_pass() const;
  nlohmann::json to_json() const;
  std::string series_csv() const;
  nlohmann::json series_json() const;
  /// Writes report.json, series.csv or series.json, and the ensembles. IoError on failure.
  void write(const std::filesystem::path& dir, const std::string& format = "csv") const;
};

ExperimentReport run_continuity(const ExperimentConfig& cfg, std::size_t threads = 0);
ExperimentReport run_stability(const ExperimentConfig& cfg, std::size_t threads = 0);
ExperimentReport run_invariance(const ExperimentConfig& cfg, std::size_t threads = 0);
ExperimentReport run_galerkin(const ExperimentConfig& cfg, std::size_t threads = 0);
ExperimentReport run_tails(const ExperimentConfig& cfg, std::size_t threads = 0);
/// Validates cfg and dispatches on cfg.experiment.
ExperimentReport run_experiment(const ExperimentConfig& cfg, std::size_t threads = 0);

/// Ensemble described by the measure keys of cfg (Gibbs or Gaussian), seeded by `seed`.
WeightedEnsemble config_ensemble(const ExperimentConfig& cfg, std::uint64_t seed,
                                 std::size_t threads = 0);
/// Second ensemble of a continuity or stability run.
WeightedEnsemble perturb_ensemble(const WeightedEnsemble& ens, const ExperimentConfig& cfg,
                                  std::size_t threads = 0);

/// (sup_mu ||u||_{L2} + sup_nu ||v||_{L2})^12 over the supports.
double bound_r1(const WeightedEnsemble& mu, const WeightedEnsemble& nu);
/// ||u||_{L^p_mu H^s} + ||v||_{L^p_nu H^s}.
double bound_r2(const WeightedEnsemble& mu, const WeightedEnsemble& nu, double s, double p);

nlohmann::json fit_json(const LinearFit& fit);
nlohmann::json library_versions();

}  // namespace kdvlab
