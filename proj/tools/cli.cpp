#include "cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "kdvlab/config.hpp"
#include "kdvlab/ensemble_io.hpp"
#include "kdvlab/errors.hpp"
#include "kdvlab/experiments.hpp"
#include "kdvlab/kdv_flow.hpp"
#include "kdvlab/measures.hpp"
#include "kdvlab/parallel.hpp"
#include "kdvlab/transport.hpp"

namespace kdvlab::cli {
namespace {

using nlohmann::json;

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  1  internal error\n"
    "  2  usage error (unknown subcommand or flag, bad flag value)\n"
    "  3  configuration error (malformed config, invalid parameters)\n"
    "  4  I/O error (unreadable or unwritable file)\n"
    "  5  numerical failure (divergence, non-convergence, degenerate ensemble)\n"
    "Failures print {\"error\": {\"kind\", \"message\", \"exit_code\"}} on stderr.\n"
    "KDV_TRANSPORT_THREADS is used when --threads is absent.";

int exit_code_for(const Error& e) {
  const std::string kind = e.kind();
  if (kind == "format" || kind == "contract" || kind == "domain") return kConfig;
  if (kind == "io") return kIo;
  if (kind == "divergence" || kind == "convergence" || kind == "degenerate_ensemble" ||
      kind == "insufficient_data") {
    return kNumerical;
  }
  return kInternal;
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message,
                  int code) {
  err << json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump()
      << '\n';
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

struct Common {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out;
  std::string format = "csv";
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Master seed");
  app->add_option("--threads", c.threads, "Worker threads (default: KDV_TRANSPORT_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  app->add_option("--out", c.out, "Output directory (or file for sample)");
  app->add_option("--format", c.format, "Series format")->check(CLI::IsMember({"csv", "json"}));
}

std::size_t thread_count(const Common& c) { return c.threads ? *c.threads : default_threads(); }

// --- solve -----------------------------------------------------------------

struct SolveArgs {
  std::size_t modes = 64;
  std::optional<double> dt;
  double t = 1.0;
  std::string init = "c1";
  std::size_t samples = 10;
  bool no_dealias = false;
  double cfl = 1.0;
  std::optional<std::size_t> projection;
};

int run_solve(const SolveArgs& a, const Common& c, std::ostream& out) {
  SolverConfig cfg;
  cfg.modes = a.modes;
  cfg.dt = a.dt;
  cfg.dealias = !a.no_dealias;
  cfg.cfl = a.cfl;
  cfg.validate();
  if (!std::isfinite(a.t)) throw ContractError("--t must be finite");
  if (a.samples < 1) throw ContractError("--samples must be >= 1");
  const TorusField u0 = parse_field_expression(a.init);
  std::vector<double> times;
  for (std::size_t i = 0; i <= a.samples; ++i) {
    times.push_back(a.t * static_cast<double>(i) / static_cast<double>(a.samples));
  }
  if (a.t < 0.0) std::reverse(times.begin(), times.end());
  if (a.t == 0.0) times = {0.0};
  const Trajectory traj = evolve_trajectory(u0, times, cfg, a.projection);
  const DriftSummary drift = conserved_report(traj);

  const std::filesystem::path dir = c.out.empty() ? "kdvlab-out" : c.out;
  ensure_dir(dir);
  json summary = {{"modes", cfg.modes},
                  {"dt", cfg.step_for(u0)},
                  {"t", a.t},
                  {"init", a.init},
                  {"dealias", cfg.dealias},
                  {"drift",
                   {{"l2_relative", drift.l2_relative},
                    {"hamiltonian_relative", drift.hamiltonian_relative},
                    {"mean_absolute", drift.mean_absolute}}},
                  {"initial",
                   {{"mean", traj.conserved.front().mean},
                    {"l2", traj.conserved.front().l2},
                    {"hamiltonian", traj.conserved.front().hamiltonian}}},
                  {"versions", library_versions()}};
  if (a.projection) summary["projection"] = *a.projection;
  write_text(dir / "report.json", summary.dump(2) + "\n");

  if (c.format == "csv") {
    std::ostringstream csv;
    csv.precision(17);
    csv << "t,mean,l2,hamiltonian";
    const std::size_t m = traj.states.front().cutoff();
    for (std::size_t k = 1; k <= m; ++k) csv << ",re" << k << ",im" << k;
    csv << '\n';
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      const auto& q = traj.conserved[i];
      csv << traj.times[i] << ',' << q.mean << ',' << q.l2 << ',' << q.hamiltonian;
      for (std::size_t k = 1; k <= m; ++k) {
        csv << ',' << traj.states[i][k].real() << ',' << traj.states[i][k].imag();
      }
      csv << '\n';
    }
    write_text(dir / "trajectory.csv", csv.str());
  } else {
    json rows = json::array();
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      json re = json::array(), im = json::array();
      for (const auto& z : traj.states[i].amplitudes()) {
        re.push_back(z.real());
        im.push_back(z.imag());
      }
      rows.push_back({{"t", traj.times[i]},
                      {"mean", traj.conserved[i].mean},
                      {"l2", traj.conserved[i].l2},
                      {"hamiltonian", traj.conserved[i].hamiltonian},
                      {"re", re},
                      {"im", im}});
    }
    write_text(dir / "trajectory.json", rows.dump(2) + "\n");
  }
  out << summary["drift"].dump() << '\n';
  return kOk;
}

// --- sample ----------------------------------------------------------------

struct SampleArgs {
  std::string kind = "gaussian";
  std::size_t modes = 16;
  std::size_t n = 256;
  double cubic = 1.0 / 6.0;
  double radius = 1.0;
  bool resample = false;
  std::optional<std::size_t> projection;
  double s = 0.25;
  double p = 2.0;
};

int run_sample(const SampleArgs& a, const Common& c, std::ostream& out) {
  if (c.out.empty()) throw ContractError("sample needs --out FILE.kdve");
  const std::uint64_t seed = c.seed.value_or(1);
  GaussianSpec base;
  base.modes = a.modes;
  base.seed = seed;
  const MetricContext metric{a.s, a.p};
  json summary = {{"kind", a.kind}, {"modes", a.modes}, {"n", a.n}, {"seed", seed}};
  std::optional<WeightedEnsemble> ens;
  if (a.kind == "gaussian") {
    base.validate();
    ens = sample_gaussian(base, a.n, thread_count(c)).with_metric(metric);
  } else if (a.kind == "gibbs") {
    GibbsSpec spec;
    spec.base = base;
    spec.cubic_coefficient = a.cubic;
    spec.cutoff_radius = a.radius;
    spec.resample = a.resample;
    spec.projection = a.projection;
    spec.validate();
    auto g = sample_gibbs(spec, a.n, thread_count(c));
    summary["kappa"] = g.kappa;
    summary["effective_size"] = g.effective_size;
    ens = g.ensemble.with_metric(metric);
  } else {
    throw ContractError("--kind must be gaussian or gibbs");
  }
  summary["support"] = ens->support_indices().size();
  write_ensemble(c.out, *ens);
  out << summary.dump() << '\n';
  return kOk;
}

// --- distance --------------------------------------------------------------

struct DistanceArgs {
  std::string a, b;
  double s = 0.25;
  double p = 2.0;
  std::string metric = "combined";
  std::string backend = "exact";
  double epsilon = 0.01;
  std::string plan;
};

int run_distance(const DistanceArgs& a, const Common& c, std::ostream& out) {
  const auto ea = read_ensemble(a.a);
  const auto eb = read_ensemble(a.b);
  SobolevIndex{a.s};
  if (!(a.p >= 1.0)) throw ContractError("--p must be >= 1");
  const std::size_t m = std::max(ea.cutoff(), eb.cutoff());
  const auto xa = ea.with_cutoff(m), xb = eb.with_cutoff(m);
  const auto backend = a.backend == "entropic" ? TransportBackend::entropic : TransportBackend::exact;
  json summary = {{"metric", a.metric}, {"s", a.s}, {"p", a.p}, {"backend", a.backend}};
  double value = 0.0;
  std::optional<TransportResult> for_plan;
  if (a.metric == "combined") {
    const auto cm = combined_metric(xa, xb, a.s, a.p, backend, a.epsilon);
    value = cm.value;
    summary["bottleneck"] = transport_summary(cm.bottleneck);
    summary["wasserstein"] = transport_summary(cm.wasserstein);
    for_plan = cm.wasserstein;
  } else if (a.metric == "wsp") {
    const auto r = backend == TransportBackend::exact
                       ? wasserstein_p_exact(xa, xb, a.s, a.p)
                       : combined_metric(xa, xb, a.s, a.p, backend, a.epsilon).wasserstein;
    value = r.distance;
    summary["wasserstein"] = transport_summary(r);
    for_plan = r;
  } else {
    const auto r = wasserstein_inf(xa, xb);
    value = r.distance;
    summary["bottleneck"] = transport_summary(r);
    for_plan = r;
  }
  summary["value"] = value;
  if (!a.plan.empty()) write_text(a.plan, plan_csv(for_plan->plan, xa, xb, a.s, a.p));
  if (!c.out.empty()) {
    ensure_dir(c.out);
    write_text(std::filesystem::path(c.out) / "report.json", summary.dump(2) + "\n");
  }
  if (c.format == "json") {
    out << summary.dump() << '\n';
  } else {
    out << fmt(value) << '\n';
  }
  return kOk;
}

// --- experiment ------------------------------------------------------------

struct ExperimentArgs {
  std::string name;
  std::string config;
  std::vector<std::string> set;
};

int run_experiment_cmd(const ExperimentArgs& a, const Common& c, std::ostream& out) {
  ExperimentConfig cfg = a.config.empty() ? ExperimentConfig{} : load_config(a.config);
  if (!a.name.empty()) cfg.experiment = a.name;
  for (const auto& kv : a.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw FormatError("--set expects key=value, got '" + kv + "'");
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) apply_setting(cfg, "seed", std::to_string(*c.seed));
  if (!c.out.empty()) cfg.output_dir = c.out;
  const auto rep = run_experiment(cfg, thread_count(c));
  if (!rep.all_finite()) throw DivergenceError(0, "report contains non-finite values");
  rep.write(cfg.output_dir, c.format);
  out << json{{"experiment", rep.experiment},
              {"output", cfg.output_dir.generic_string()},
              {"checks", rep.checks}}
              .dump()
      << '\n';
  return kOk;
}

// --- inspect ---------------------------------------------------------------

int run_inspect(const std::string& path, std::ostream& out) {
  const auto ens = read_ensemble(path);
  double total = 0.0, l2max = 0.0;
  for (std::size_t i = 0; i < ens.size(); ++i) total += ens.weight(i);
  for (auto i : ens.support_indices()) l2max = std::max(l2max, l2_norm(ens.sample(i)));
  const auto& m = ens.metric();
  out << json{{"file", path},
              {"samples", ens.size()},
              {"cutoff", ens.cutoff()},
              {"support", ens.support_indices().size()},
              {"weight_sum", total},
              {"effective_size", effective_sample_size(ens.weights())},
              {"max_l2_on_support", l2max},
              {"metric", {{"s", m.s}, {"p", m.p}}},
              {"provenance",
               {{"kind", ens.provenance().kind},
                {"seed", ens.provenance().seed},
                {"resampled", ens.provenance().resampled}}}}
             .dump(2)
      << '\n';
  return kOk;
}

}  // namespace

int cli_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"kdvlab: KdV flow, Gibbs measure and transport experiments", "kdvlab"};
  app.footer(kExitCodes);
  app.require_subcommand(1);

  Common common;
  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Evolve one initial datum and report invariants");
  add_common(solve_cmd, common);
  solve_cmd->add_option("--modes", solve.modes, "Solver truncation M")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--dt", solve.dt, "Time step (default: automatic)");
  solve_cmd->add_option("--t", solve.t, "Final time");
  solve_cmd->add_option("--init", solve.init, "Initial datum, e.g. \"c1+0.5c2\"");
  solve_cmd->add_option("--samples", solve.samples, "Number of output intervals");
  solve_cmd->add_flag("--no-dealias", solve.no_dealias, "Disable 2/3 de-aliasing");
  solve_cmd->add_option("--cfl", solve.cfl, "Stability constant");
  solve_cmd->add_option("--projection", solve.projection, "Use the Galerkin flow Psi_N");

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand("sample", "Draw a Gaussian or Gibbs ensemble to a KDVE file");
  add_common(sample_cmd, common);
  sample_cmd->add_option("--kind", sample.kind)->check(CLI::IsMember({"gaussian", "gibbs"}));
  sample_cmd->add_option("--modes", sample.modes, "Truncation M")->check(CLI::PositiveNumber);
  sample_cmd->add_option("--n", sample.n, "Ensemble size")->check(CLI::PositiveNumber);
  sample_cmd->add_option("--cubic-coefficient", sample.cubic);
  sample_cmd->add_option("--cutoff-radius", sample.radius);
  sample_cmd->add_flag("--resample", sample.resample, "Multinomial resampling to uniform weights");
  sample_cmd->add_option("--projection", sample.projection, "Density f_N instead of f");
  sample_cmd->add_option("--s", sample.s, "Metric s stored in the file");
  sample_cmd->add_option("--p", sample.p, "Metric p stored in the file");

  DistanceArgs dist;
  auto* dist_cmd = app.add_subcommand("distance", "Transport distance between two KDVE ensembles");
  add_common(dist_cmd, common);
  dist_cmd->add_option("--a", dist.a, "First ensemble")->required();
  dist_cmd->add_option("--b", dist.b, "Second ensemble")->required();
  dist_cmd->add_option("--s", dist.s);
  dist_cmd->add_option("--p", dist.p);
  dist_cmd->add_option("--metric", dist.metric, "combined = W_{0,inf} + W_{s,p}")
      ->check(CLI::IsMember({"combined", "wsp", "winf"}));
  dist_cmd->add_option("--backend", dist.backend)->check(CLI::IsMember({"exact", "entropic"}));
  dist_cmd->add_option("--epsilon", dist.epsilon, "Entropic epsilon relative to the median cost");
  dist_cmd->add_option("--plan", dist.plan, "Write the W_{s,p} plan as CSV");

  ExperimentArgs exp;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a configured experiment");
  add_common(exp_cmd, common);
  exp_cmd->add_option("name", exp.name,
                      "continuity | stability | invariance | galerkin | tails");
  exp_cmd->add_option("--config", exp.config, "key = value config file");
  exp_cmd->add_option("--set", exp.set, "Override a config key (key=value)");

  std::string inspect_path;
  auto* inspect_cmd = app.add_subcommand("inspect", "Describe a KDVE ensemble file");
  inspect_cmd->add_option("file", inspect_path)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what(), kUsage);
    return kUsage;
  }

  try {
    if (common.threads) set_default_threads(*common.threads);
    if (*solve_cmd) return run_solve(solve, common, out);
    if (*sample_cmd) return run_sample(sample, common, out);
    if (*dist_cmd) return run_distance(dist, common, out);
    if (*exp_cmd) return run_experiment_cmd(exp, common, out);
    if (*inspect_cmd) return run_inspect(inspect_path, out);
  } catch (const Error& e) {
    const int code = exit_code_for(e);
    report_error(err, e.kind(), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what(), kInternal);
    return kInternal;
  }
  return kUsage;
}

int cli_entry(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return cli_entry(args, std::cout, std::cerr);
}

}  // namespace kdvlab::cli
