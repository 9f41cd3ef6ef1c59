#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "kdvlab/config.hpp"
#include "kdvlab/ensemble_io.hpp"
#include "kdvlab/errors.hpp"
#include "kdvlab/experiments.hpp"

using namespace kdvlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kdvlab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "kdvlab");
  std::ostringstream out, err;
  const int code = cli::cli_entry(args, out, err);
  return {code, out.str(), err.str()};
}

ExperimentConfig small(const std::string& experiment) {
  ExperimentConfig cfg;
  cfg.experiment = experiment;
  cfg.measure.base.modes = 8;
  cfg.solver.modes = 32;
  cfg.ensemble_size = 128;
  cfg.bootstrap_replicas = 20;
  return cfg;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("config parsing") {
  const auto cfg = parse_config(
      "# comment\n"
      "experiment = continuity\n"
      "seed = 42   # trailing comment\n"
      "solver.modes = 48\n"
      "solver.dt = 5e-4\n"
      "measure.kind = gaussian\n"
      "time.grid = 0.1, 0.2, 0.4\n"
      "metric.s = 0.3\n"
      "perturbation.family = rescale\n"
      "galerkin.N_grid = [2, 4, 8]\n"
      "galerkin.init = \"c1+0.5c2\"\n");
  CHECK(cfg.experiment == "continuity");
  CHECK(cfg.seed == 42);
  CHECK(cfg.solver.modes == 48);
  CHECK(*cfg.solver.dt == 5e-4);
  CHECK(cfg.measure_kind == "gaussian");
  CHECK(cfg.time_grid == std::vector<double>{0.1, 0.2, 0.4});
  CHECK(cfg.metric.s == 0.3);
  CHECK(cfg.perturbation.family == PerturbationSpec::Family::rescale);
  CHECK(cfg.galerkin_grid == std::vector<std::size_t>{2, 4, 8});
  CHECK(cfg.galerkin_init == "c1+0.5c2");
  CHECK_NOTHROW(cfg.validate());
  CHECK(parse_config(cfg.canonical()).canonical() == cfg.canonical());
  CHECK(parse_config(cfg.canonical()).hash() == cfg.hash());

  CHECK_THROWS_AS(parse_config("nonsense.key = 1\n"), FormatError);
  CHECK_THROWS_AS(parse_config("experiment continuity\n"), FormatError);
  CHECK_THROWS_AS(parse_config("solver.modes = many\n"), FormatError);
  CHECK_THROWS_AS(load_config("/nonexistent/kdvlab.cfg"), IoError);

  ExperimentConfig bad = cfg;
  bad.metric.s = 0.5;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = cfg;
  bad.metric.p = 0.5;
  CHECK_THROWS_AS(bad.validate(), ContractError);
  bad = cfg;
  bad.time_grid = {1.0, 20.0};
  CHECK_THROWS_AS(bad.validate(), ContractError);
  bad = cfg;
  bad.experiment = "nope";
  CHECK_THROWS_AS(bad.validate(), ContractError);
}

TEST_CASE("field expressions") {
  const auto u = parse_field_expression("c1 + 0.5c2 - 0.25*s3");
  CHECK(u == TorusField::cosine(1, 3) + 0.5 * TorusField::cosine(2, 3) - 0.25 * TorusField::sine(3, 3));
  CHECK(parse_field_expression("c1", 8).cutoff() == 8);
  CHECK_THROWS_AS(parse_field_expression(""), FormatError);
  CHECK_THROWS_AS(parse_field_expression("c0"), FormatError);
  CHECK_THROWS_AS(parse_field_expression("c1 c2"), FormatError);
  CHECK_THROWS_AS(parse_field_expression("2"), FormatError);
}

TEST_CASE("continuity: identical ensembles and the t = 0 ratio") {
  auto cfg = small("continuity");
  cfg.perturbation.delta = 0.0;
  const auto same = run_continuity(cfg, 1);
  for (const auto& row : same.rows) CHECK(row[1] == 0.0);

  cfg.perturbation.delta = 1e-3;
  const auto rep = run_continuity(cfg, 1);
  REQUIRE(rep.rows.front()[0] == 0.0);
  CHECK(rep.rows.front()[7] == 1.0);
  CHECK(rep.checks["finite"].get<bool>());
  CHECK(rep.checks["coupled_bound_dominates"].get<bool>());
  CHECK(rep.summary.contains("R1"));
  CHECK(rep.summary.contains("R2"));
  CHECK(std::isfinite(rep.summary["log_ratio_fit"]["slope"].get<double>()));

  cfg.perturbation.family = PerturbationSpec::Family::resample;
  const auto res = run_continuity(cfg, 1);
  CHECK(res.checks["coupled_bound_dominates"].get<bool>());
}

TEST_CASE("stability: shared seed, t = 0 and first-order dependence on delta") {
  auto cfg = small("stability");
  cfg.perturbation.delta = 0.0;
  const auto same = run_stability(cfg, 1);
  CHECK(same.summary["distance_to_rho"]["value"].get<double>() == 0.0);
  CHECK(same.rows.front()[1] == 0.0);

  cfg.perturbation.delta = 2e-3;
  const auto a = run_stability(cfg, 1);
  cfg.perturbation.delta = 1e-3;
  const auto b = run_stability(cfg, 1);
  CHECK(a.rows.front()[1] == 0.0);
  const double ratio = b.summary["distance_to_rho"]["value"].get<double>() /
                       a.summary["distance_to_rho"]["value"].get<double>();
  CHECK(ratio >= 0.4);
  CHECK(ratio <= 0.6);
}

TEST_CASE("invariance: linear mode preserves second moments, nonlinear t = 0 is zero") {
  auto cfg = small("invariance");
  cfg.invariance_mode = "linear";
  cfg.measure_kind = "gaussian";
  const auto lin = run_invariance(cfg, 1);
  CHECK(lin.summary["max_relative_moment_difference"].get<double>() <= 1e-12);

  cfg = small("invariance");
  cfg.time_grid = {0.25};
  cfg.ensemble_size = 512;
  const auto non = run_invariance(cfg, 1);
  CHECK(non.rows.front()[0] == 0.0);
  CHECK(non.rows.front()[1] == 0.0);
  CHECK(non.rows.front()[4] == 0.0);
  CHECK(non.checks["finite"].get<bool>());
}

TEST_CASE("galerkin: zero at t = 0, solver floor for data inside E_N") {
  auto cfg = small("galerkin");
  cfg.galerkin_init = "c1+0.5c2";
  cfg.galerkin_grid = {4, 8, 21};
  cfg.time_grid = {0.5};
  const auto rep = run_galerkin(cfg, 1);
  for (const auto& row : rep.rows) {
    if (row[0] == 0.0) CHECK(row[2] == 0.0);
    if (row[0] == 0.5 && row[1] == 21.0) CHECK(row[2] < 1e-10);
  }
}

TEST_CASE("tails report negative slopes") {
  auto cfg = small("tails");
  cfg.ensemble_size = 4096;
  const auto rep = run_tails(cfg, 1);
  CHECK(rep.checks["negative_slopes"].get<bool>());
  CHECK(rep.summary["fits"].size() == 3);
}

TEST_CASE("reports are written, finite and byte-identical across thread counts") {
  auto cfg = small("continuity");
  const auto d1 = scratch("rep1"), d4 = scratch("rep4");
  run_experiment(cfg, 1).write(d1, "csv");
  run_experiment(cfg, 4).write(d4, "csv");
  for (const char* f : {"report.json", "series.csv", "mu.kdve", "nu.kdve"}) {
    REQUIRE(fs::exists(d1 / f));
    CHECK(read_file(d1 / f) == read_file(d4 / f));
  }
  const auto j = nlohmann::json::parse(read_file(d1 / "report.json"));
  CHECK(j.contains("summary"));
  CHECK(j.contains("checks"));
  CHECK(j["provenance"].contains("config_hash"));
  CHECK(j["provenance"].contains("seed"));
  CHECK(j["provenance"].contains("versions"));
  run_experiment(cfg, 1).write(d1, "json");
  CHECK(nlohmann::json::parse(read_file(d1 / "series.json")).is_array());
}

TEST_CASE("cli: solve, sample, distance, inspect, experiment") {
  const auto dir = scratch("cli");
  auto r = run_cli({"solve", "--modes", "64", "--dt", "1e-3", "--t", "1", "--init", "c1", "--out", (dir / "solve").string()});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "solve" / "trajectory.csv"));
  CHECK(fs::exists(dir / "solve" / "report.json"));

  const auto a = (dir / "a.kdve").string();
  r = run_cli({"sample", "--kind", "gibbs", "--modes", "8", "--n", "200", "--seed", "3", "--out", a});
  CHECK(r.code == 0);
  r = run_cli({"distance", "--a", a, "--b", a, "--s", "0.25", "--p", "2"});
  CHECK(r.code == 0);
  CHECK(r.out == "0\n");
  r = run_cli({"inspect", a});
  CHECK(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["samples"] == 200);

  std::ofstream(dir / "cont.cfg") << "experiment = continuity\nmeasure.modes = 8\nsolver.modes = 32\n"
                                      "ensemble.size = 64\n";
  r = run_cli({"experiment", "--config", (dir / "cont.cfg").string(), "--out", (dir / "cont").string(),
           "--threads", "2"});
  CHECK(r.code == 0);
  const auto rep = nlohmann::json::parse(read_file(dir / "cont" / "report.json"));
  CHECK(rep["experiment"] == "continuity");
  CHECK(fs::exists(dir / "cont" / "series.csv"));

  r = run_cli({"experiment", "continuity", "--set", "measure.modes=8", "--set", "solver.modes=32",
           "--set", "ensemble.size=64", "--format", "json", "--out", (dir / "cont2").string()});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "cont2" / "series.json"));
}

TEST_CASE("cli exit codes and error JSON") {
  auto r = run_cli({"frobnicate"});
  CHECK(r.code == cli::kUsage);
  CHECK(nlohmann::json::parse(r.err)["error"]["exit_code"] == cli::kUsage);
  r = run_cli({"solve", "--no-such-flag"});
  CHECK(r.code == cli::kUsage);
  r = run_cli({"solve", "--init", "q7"});
  CHECK(r.code == cli::kConfig);
  CHECK(nlohmann::json::parse(r.err)["error"]["kind"] == "format");
  r = run_cli({"inspect", "/nonexistent/x.kdve"});
  CHECK(r.code == cli::kIo);
  const auto dir = scratch("cli_err");
  std::ofstream(dir / "bad.cfg") << "experiment = continuity\nsolver.modes = ???\n";
  r = run_cli({"experiment", "--config", (dir / "bad.cfg").string()});
  CHECK(r.code == cli::kConfig);
  r = run_cli({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("Exit codes") != std::string::npos);
}

}  // TEST_SUITE
