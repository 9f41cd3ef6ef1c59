#include "kdvlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "kdvlab/errors.hpp"

namespace kdvlab {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end || !std::isfinite(out)) {
    throw FormatError("key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const char* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw FormatError("key '" + key + "': expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw FormatError("key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::string body = trim(v);
  if (body.size() >= 2 && body.front() == '[' && body.back() == ']') {
    body = body.substr(1, body.size() - 2);
  }
  std::vector<std::string> out;
  std::stringstream in(body);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T, class F>
std::vector<T> parse_list(const std::string& key, const std::string& v, F convert) {
  std::vector<T> out;
  for (const auto& item : split_list(v)) out.push_back(static_cast<T>(convert(key, item)));
  if (out.empty()) throw FormatError("key '" + key + "': empty list");
  return out;
}

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
std::string fmt_list(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += fmt(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"experiment", [](auto& c, auto&, auto& v) { c.experiment = v; }},
      {"seed",
       [](auto& c, auto& k, auto& v) {
         c.seed = to_uint(k, v);
         c.measure.base.seed = c.seed;
       }},
      {"output.dir", [](auto& c, auto&, auto& v) { c.output_dir = v; }},
      {"solver.modes", [](auto& c, auto& k, auto& v) { c.solver.modes = to_uint(k, v); }},
      {"solver.dt", [](auto& c, auto& k, auto& v) { c.solver.dt = to_double(k, v); }},
      {"solver.dealias", [](auto& c, auto& k, auto& v) { c.solver.dealias = to_bool(k, v); }},
      {"solver.cfl", [](auto& c, auto& k, auto& v) { c.solver.cfl = to_double(k, v); }},
      {"measure.kind", [](auto& c, auto&, auto& v) { c.measure_kind = v; }},
      {"measure.modes", [](auto& c, auto& k, auto& v) { c.measure.base.modes = to_uint(k, v); }},
      {"measure.cubic_coefficient",
       [](auto& c, auto& k, auto& v) { c.measure.cubic_coefficient = to_double(k, v); }},
      {"measure.cutoff_radius",
       [](auto& c, auto& k, auto& v) { c.measure.cutoff_radius = to_double(k, v); }},
      {"measure.resample", [](auto& c, auto& k, auto& v) { c.measure.resample = to_bool(k, v); }},
      {"ensemble.size", [](auto& c, auto& k, auto& v) { c.ensemble_size = to_uint(k, v); }},
      {"time.grid",
       [](auto& c, auto& k, auto& v) { c.time_grid = parse_list<double>(k, v, to_double); }},
      {"time.horizon", [](auto& c, auto& k, auto& v) { c.time_horizon = to_double(k, v); }},
      {"metric.s", [](auto& c, auto& k, auto& v) { c.metric.s = to_double(k, v); }},
      {"metric.p", [](auto& c, auto& k, auto& v) { c.metric.p = to_double(k, v); }},
      {"perturbation.family",
       [](auto& c, auto& k, auto& v) {
         using F = PerturbationSpec::Family;
         if (v == "shift") c.perturbation.family = F::shift;
         else if (v == "resample") c.perturbation.family = F::resample;
         else if (v == "rescale") c.perturbation.family = F::rescale;
         else throw FormatError("key '" + k + "': unknown family '" + v + "'");
       }},
      {"perturbation.delta",
       [](auto& c, auto& k, auto& v) { c.perturbation.delta = to_double(k, v); }},
      {"perturbation.mode", [](auto& c, auto& k, auto& v) { c.perturbation.mode = to_uint(k, v); }},
      {"perturbation.seed", [](auto& c, auto& k, auto& v) { c.perturbation.seed = to_uint(k, v); }},
      {"bootstrap.replicas",
       [](auto& c, auto& k, auto& v) { c.bootstrap_replicas = to_uint(k, v); }},
      {"invariance.mode", [](auto& c, auto&, auto& v) { c.invariance_mode = v; }},
      {"galerkin.N_grid",
       [](auto& c, auto& k, auto& v) {
         c.galerkin_grid = parse_list<std::size_t>(k, v, to_uint);
       }},
      {"galerkin.sigma", [](auto& c, auto& k, auto& v) { c.galerkin_sigma = to_double(k, v); }},
      {"galerkin.init", [](auto& c, auto&, auto& v) { c.galerkin_init = v; }},
      {"galerkin.init_modes",
       [](auto& c, auto& k, auto& v) { c.galerkin_init_modes = to_uint(k, v); }},
      {"tails.s", [](auto& c, auto& k, auto& v) { c.tails_s = parse_list<double>(k, v, to_double); }},
      {"tails.radii", [](auto& c, auto& k, auto& v) { c.tails_radii = to_uint(k, v); }},
  };
  return table;
}

}  // namespace

std::string to_string(PerturbationSpec::Family family) {
  switch (family) {
    case PerturbationSpec::Family::shift: return "shift";
    case PerturbationSpec::Family::resample: return "resample";
    case PerturbationSpec::Family::rescale: return "rescale";
  }
  return "shift";
}

std::uint64_t fnv1a(const std::string& text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw FormatError("unknown configuration key '" + key + "'");
  const std::string v = unquote(trim(value));
  if (v.empty()) throw FormatError("key '" + key + "' has an empty value");
  it->second(cfg, key, v);
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    // '#' inside quotes is kept (field expressions never contain it anyway).
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("line " + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    try {
      apply_setting(cfg, key, line.substr(eq + 1));
    } catch (const FormatError& e) {
      throw FormatError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void ExperimentConfig::validate() const {
  static const std::vector<std::string> known = {"continuity", "stability", "invariance",
                                                 "galerkin", "tails"};
  if (std::find(known.begin(), known.end(), experiment) == known.end()) {
    throw ContractError("unknown experiment '" + experiment + "'");
  }
  solver.validate();
  measure.validate();
  if (measure_kind != "gaussian" && measure_kind != "gibbs") {
    throw ContractError("measure.kind must be gaussian or gibbs");
  }
  if (ensemble_size < 2) throw ContractError("ensemble.size must be >= 2");
  if (time_grid.empty()) throw ContractError("time.grid is empty");
  if (!(time_horizon > 0.0)) throw ContractError("time.horizon must be positive");
  for (double t : time_grid) {
    if (!std::isfinite(t) || std::abs(t) > time_horizon) {
      throw ContractError("time " + fmt(t) + " outside the stability horizon");
    }
  }
  if (!std::is_sorted(time_grid.begin(), time_grid.end())) {
    throw ContractError("time.grid must be sorted");
  }
  if (!(metric.p >= 1.0)) throw ContractError("metric.p must be >= 1");
  const bool measure_experiment = experiment != "galerkin";
  if (measure_experiment && !(metric.s > 0.0 && metric.s < 0.5)) {
    throw DomainError("metric.s must lie in (0, 1/2) for measure experiments");
  }
  if (experiment == "galerkin" && metric.s < 0.0) throw DomainError("metric.s must be >= 0");
  if (perturbation.mode < 1) throw ContractError("perturbation.mode must be >= 1");
  if (!std::isfinite(perturbation.delta)) throw ContractError("perturbation.delta must be finite");
  if (bootstrap_replicas < 20) throw ContractError("bootstrap.replicas must be >= 20");
  if (invariance_mode != "linear" && invariance_mode != "nonlinear") {
    throw ContractError("invariance.mode must be linear or nonlinear");
  }
  if (experiment == "galerkin") {
    if (galerkin_grid.size() < 2) throw ContractError("galerkin.N_grid needs >= 2 entries");
    if (!std::is_sorted(galerkin_grid.begin(), galerkin_grid.end()) || galerkin_grid.front() < 1) {
      throw ContractError("galerkin.N_grid must be increasing and positive");
    }
    if (!(galerkin_sigma > metric.s)) throw ContractError("galerkin.sigma must exceed metric.s");
    if (galerkin_init_modes < 1) throw ContractError("galerkin.init_modes must be >= 1");
  }
  if (experiment == "tails") {
    if (tails_radii < 4) throw ContractError("tails.radii must be >= 4");
    for (double s : tails_s) SobolevIndex{s};
  }
}

std::string ExperimentConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["experiment"] = experiment;
  kv["seed"] = std::to_string(seed);
  kv["solver.modes"] = std::to_string(solver.modes);
  kv["solver.dt"] = solver.dt ? fmt(*solver.dt) : "auto";
  kv["solver.dealias"] = solver.dealias ? "true" : "false";
  kv["solver.cfl"] = fmt(solver.cfl);
  kv["measure.kind"] = measure_kind;
  kv["measure.modes"] = std::to_string(measure.base.modes);
  kv["measure.cubic_coefficient"] = fmt(measure.cubic_coefficient);
  kv["measure.cutoff_radius"] = fmt(measure.cutoff_radius);
  kv["measure.resample"] = measure.resample ? "true" : "false";
  kv["ensemble.size"] = std::to_string(ensemble_size);
  kv["time.grid"] = fmt_list(time_grid);
  kv["time.horizon"] = fmt(time_horizon);
  kv["metric.s"] = fmt(metric.s);
  kv["metric.p"] = fmt(metric.p);
  kv["perturbation.family"] = to_string(perturbation.family);
  kv["perturbation.delta"] = fmt(perturbation.delta);
  kv["perturbation.mode"] = std::to_string(perturbation.mode);
  kv["perturbation.seed"] = std::to_string(perturbation.seed);
  kv["bootstrap.replicas"] = std::to_string(bootstrap_replicas);
  kv["invariance.mode"] = invariance_mode;
  kv["galerkin.N_grid"] = fmt_list(galerkin_grid);
  kv["galerkin.sigma"] = fmt(galerkin_sigma);
  kv["galerkin.init"] = galerkin_init;
  kv["galerkin.init_modes"] = std::to_string(galerkin_init_modes);
  kv["tails.s"] = fmt_list(tails_s);
  kv["tails.radii"] = std::to_string(tails_radii);
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(canonical()); }

TorusField parse_field_expression(const std::string& expression, std::size_t cutoff) {
  struct Term {
    double coefficient;
    bool cosine;
    std::size_t mode;
  };
  std::vector<Term> terms;
  std::string text;
  for (char ch : expression) {
    if (!std::isspace(static_cast<unsigned char>(ch))) text += ch;
  }
  if (text.empty()) throw FormatError("empty field expression");
  std::size_t i = 0;
  auto fail = [&](const std::string& why) {
    throw FormatError("field expression '" + expression + "': " + why);
  };
  while (i < text.size()) {
    double sign = 1.0;
    if (text[i] == '+' || text[i] == '-') {
      sign = text[i] == '-' ? -1.0 : 1.0;
      ++i;
    } else if (!terms.empty()) {
      fail("expected '+' or '-'");
    }
    double coefficient = 1.0;
    if (i < text.size() && (std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '.')) {
      const auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + text.size(), coefficient);
      if (ec != std::errc{}) fail("bad coefficient");
      i = static_cast<std::size_t>(ptr - text.data());
      if (i < text.size() && text[i] == '*') ++i;
    }
    if (i >= text.size() || (text[i] != 'c' && text[i] != 's')) fail("expected c<k> or s<k>");
    const bool cosine = text[i] == 'c';
    ++i;
    std::size_t mode = 0;
    const auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + text.size(), mode);
    if (ec != std::errc{} || mode == 0) fail("expected a positive mode index");
    i = static_cast<std::size_t>(ptr - text.data());
    terms.push_back({sign * coefficient, cosine, mode});
  }
  std::size_t top = cutoff;
  for (const auto& t : terms) top = std::max(top, t.mode);
  TorusField u = TorusField::zero(top);
  for (const auto& t : terms) {
    u += TorusField::basis(t.mode, t.cosine ? t.coefficient : 0.0, t.cosine ? 0.0 : t.coefficient,
                           top);
  }
  return u;
}

}  // namespace kdvlab
