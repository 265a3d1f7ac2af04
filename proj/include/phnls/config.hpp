#pragma once

// Experiment configuration: a TOML-style subset (`[section]` headers,
// `key = value` lines, `#` comments, numbers, booleans, quoted strings and
// flat numeric arrays), the typed ExperimentConfig, and its canonical text
// form. Canonical text is what gets hashed and echoed into every output.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "phnls/error.hpp"
#include "phnls/evolution.hpp"
#include "phnls/field.hpp"
#include "phnls/ground_state.hpp"

namespace phnls {

inline constexpr const char* kVersion = "0.1.0";

// --------------------------------------------------------------------------
// Raw table

using ConfigTable = std::map<std::string, std::map<std::string, std::string>>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Removes a trailing comment that is not inside a quoted string.
inline std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  // keep reals visibly real
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace detail

inline ConfigTable parse_config_table(const std::string& text) {
  ConfigTable table;
  std::string section;
  std::istringstream is(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const std::string line = detail::trim(detail::strip_comment(raw));
    if (line.empty()) continue;
    const auto where = " (line " + std::to_string(line_no) + ")";
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw FormatError("config: malformed section header" + where);
      section = detail::trim(line.substr(1, line.size() - 2));
      table[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("config: expected key = value" + where);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw FormatError("config: empty key or value" + where);
    if (table[section].count(key)) throw FormatError("config: duplicate key '" + key + "'" + where);
    table[section][key] = value;
  }
  return table;
}

/// Typed, consuming view over one parsed table; leftover keys are an error.
class ConfigReader {
 public:
  explicit ConfigReader(ConfigTable t) : t_(std::move(t)) {}

  std::optional<std::string> take(const std::string& section, const std::string& key) {
    auto s = t_.find(section);
    if (s == t_.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    std::string v = k->second;
    s->second.erase(k);
    return v;
  }

  double real(const std::string& sec, const std::string& key, double def) {
    const auto v = take(sec, key);
    return v ? to_real(*v, sec, key) : def;
  }
  int integer(const std::string& sec, const std::string& key, int def) {
    const auto v = take(sec, key);
    if (!v) return def;
    const double x = to_real(*v, sec, key);
    if (x != static_cast<double>(static_cast<long long>(x)))
      throw FormatError("config: " + sec + "." + key + " must be an integer");
    return static_cast<int>(x);
  }
  bool boolean(const std::string& sec, const std::string& key, bool def) {
    const auto v = take(sec, key);
    if (!v) return def;
    if (*v == "true") return true;
    if (*v == "false") return false;
    throw FormatError("config: " + sec + "." + key + " must be true or false");
  }
  std::string string(const std::string& sec, const std::string& key, const std::string& def) {
    const auto v = take(sec, key);
    if (!v) return def;
    if (v->size() >= 2 && v->front() == '"' && v->back() == '"') return v->substr(1, v->size() - 2);
    return *v;
  }
  std::vector<double> list(const std::string& sec, const std::string& key, std::vector<double> def) {
    const auto v = take(sec, key);
    if (!v) return def;
    if (v->size() < 2 || v->front() != '[' || v->back() != ']')
      throw FormatError("config: " + sec + "." + key + " must be an array [a, b, ...]");
    std::vector<double> out;
    std::stringstream ss(v->substr(1, v->size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = detail::trim(item);
      if (!item.empty()) out.push_back(to_real(item, sec, key));
    }
    return out;
  }

  void finish() const {
    for (const auto& [sec, keys] : t_)
      for (const auto& [k, v] : keys) throw FormatError("config: unknown key " + (sec.empty() ? k : sec + "." + k));
  }

 private:
  static double to_real(const std::string& s, const std::string& sec, const std::string& key) {
    std::size_t pos = 0;
    double x = 0.0;
    try {
      x = std::stod(s, &pos);
    } catch (const std::exception&) {
      throw FormatError("config: " + sec + "." + key + " is not a number: " + s);
    }
    if (pos != s.size()) throw FormatError("config: " + sec + "." + key + " is not a number: " + s);
    return x;
  }

  ConfigTable t_;
};

// --------------------------------------------------------------------------
// Typed configuration

struct InitialSpec {
  enum class Kind { ground_state, product_state, file } kind = Kind::ground_state;
  double scale = 1.0;  // ground_state_scaled(c), also applied to file data
  // product_state
  double sigma = 1.0;
  int n = 0;
  double amp_re = 1.0, amp_im = 0.0;
  std::vector<double> x0, xi0;
  // file
  std::string path;
};

inline const char* to_string(InitialSpec::Kind k) {
  switch (k) {
    case InitialSpec::Kind::ground_state: return "ground_state";
    case InitialSpec::Kind::product_state: return "product_state";
    case InitialSpec::Kind::file: return "file";
  }
  return "unknown";
}

struct DetectorConfig {
  double blowup_factor = 100.0;
  double potential_decay_factor = 100.0;
  int cauchy_windows = 3;
  double cauchy_t_end = 0.0;  // 0: use t_max
  double q_ratio_tol = 0.05;
};

struct MorawetzConfig {
  bool enabled = false;
  std::vector<double> R{2.0, 4.0};
  std::vector<double> s{0.0};  // per-axis centres; tensor grid for d > 1
  double delta = 0.01;
  double eta = 0.1;
  double every = 1.0;  // diagnostic cadence in time
};

struct ExperimentConfig {
  DomainConfig domain;
  InitialSpec initial;
  GroundStateMethod gs_method = GroundStateMethod::petviashvili;
  double gs_tol = 1e-12;
  double gs_res_tol = 1e-10;
  int gs_max_iter = 5000;
  double t_max = 1.0;
  StepConfig step;
  DetectorConfig detectors;
  MorawetzConfig morawetz;
  std::uint64_t seed = 1;

  void validate() const {
    domain.validate();
    step.validate();
    require(t_max >= 0.0, "config: t_max must be non-negative");
    require(detectors.blowup_factor > 1.0, "config: blowup_factor must exceed 1");
    require(detectors.potential_decay_factor > 1.0, "config: potential_decay_factor must exceed 1");
    require(detectors.cauchy_windows >= 1, "config: cauchy_windows must be >= 1");
    if (initial.kind == InitialSpec::Kind::product_state) {
      require(static_cast<int>(initial.x0.size()) == domain.d || initial.x0.empty(), "config: initial.x0 needs d entries");
      require(initial.x0.size() == initial.xi0.size(), "config: initial.x0 and initial.xi0 must match");
    }
    if (initial.kind == InitialSpec::Kind::file) require(!initial.path.empty(), "config: initial.path is required");
    if (morawetz.enabled) {
      require(!morawetz.R.empty() && !morawetz.s.empty(), "config: morawetz needs R and s lists");
      require(morawetz.every > 0.0, "config: morawetz.every must be positive");
    }
  }

  GroundStateOptions gs_options() const {
    GroundStateOptions o;
    o.tol = gs_tol;
    o.res_tol = gs_res_tol;
    o.max_iter = gs_max_iter;
    return o;
  }
};

inline ExperimentConfig parse_config(const std::string& text) {
  ConfigReader r(parse_config_table(text));
  ExperimentConfig c;
  auto& d = c.domain;
  d.d = r.integer("domain", "d", d.d);
  d.L = r.real("domain", "L", d.L);
  d.n_x = r.integer("domain", "n_x", d.n_x);
  d.n_max = r.integer("domain", "n_max", d.n_max);
  d.q = r.integer("domain", "q", 2 * d.n_max);
  d.alpha = r.real("domain", "alpha", d.alpha);
  d.omega = r.real("domain", "omega", d.omega);

  const std::string kind = r.string("initial", "kind", "ground_state");
  if (kind == "ground_state") c.initial.kind = InitialSpec::Kind::ground_state;
  else if (kind == "product_state") c.initial.kind = InitialSpec::Kind::product_state;
  else if (kind == "file") c.initial.kind = InitialSpec::Kind::file;
  else throw FormatError("config: initial.kind must be ground_state, product_state or file");
  c.initial.scale = r.real("initial", "scale", 1.0);
  c.initial.sigma = r.real("initial", "sigma", 1.0);
  c.initial.n = r.integer("initial", "n", 0);
  c.initial.amp_re = r.real("initial", "amplitude_re", 1.0);
  c.initial.amp_im = r.real("initial", "amplitude_im", 0.0);
  c.initial.x0 = r.list("initial", "x0", {});
  c.initial.xi0 = r.list("initial", "xi0", {});
  c.initial.path = r.string("initial", "path", "");

  const std::string method = r.string("ground_state", "method", "petviashvili");
  if (method == "petviashvili") c.gs_method = GroundStateMethod::petviashvili;
  else if (method == "scaling_descent") c.gs_method = GroundStateMethod::scaling_descent;
  else throw FormatError("config: ground_state.method must be petviashvili or scaling_descent");
  c.gs_tol = r.real("ground_state", "tol", c.gs_tol);
  c.gs_res_tol = r.real("ground_state", "res_tol", c.gs_res_tol);
  c.gs_max_iter = r.integer("ground_state", "max_iter", c.gs_max_iter);

  c.t_max = r.real("run", "t_max", c.t_max);
  c.seed = static_cast<std::uint64_t>(r.integer("run", "seed", 1));

  auto& s = c.step;
  s.dt = r.real("step", "dt", s.dt);
  s.dt_min = r.real("step", "dt_min", s.dt_min);
  s.adapt = r.boolean("step", "adapt", s.adapt);
  s.cfl_c = r.real("step", "cfl_c", s.cfl_c);
  s.observe_every = r.real("step", "observe_every", s.observe_every);
  s.snapshot_times = r.list("step", "snapshot_times", {});
  s.boundary_fraction = r.real("step", "boundary_fraction", s.boundary_fraction);
  s.boundary_threshold = r.real("step", "boundary_threshold", s.boundary_threshold);
  s.halt_gradient_factor = r.real("step", "halt_gradient_factor", s.halt_gradient_factor);

  auto& det = c.detectors;
  det.blowup_factor = r.real("detectors", "blowup_factor", det.blowup_factor);
  det.potential_decay_factor = r.real("detectors", "potential_decay_factor", det.potential_decay_factor);
  det.cauchy_windows = r.integer("detectors", "cauchy_windows", det.cauchy_windows);
  det.cauchy_t_end = r.real("detectors", "cauchy_t_end", det.cauchy_t_end);
  det.q_ratio_tol = r.real("detectors", "q_ratio_tol", det.q_ratio_tol);

  auto& m = c.morawetz;
  m.enabled = r.boolean("morawetz", "enabled", m.enabled);
  m.R = r.list("morawetz", "R", m.R);
  m.s = r.list("morawetz", "s", m.s);
  m.delta = r.real("morawetz", "delta", m.delta);
  m.eta = r.real("morawetz", "eta", m.eta);
  m.every = r.real("morawetz", "every", m.every);

  r.finish();
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

namespace detail {
inline std::string fmt_list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt_double(v[i]);
  return s + "]";
}
}  // namespace detail

/// Canonical text: every key, fixed order, round-trip exact numbers.
inline std::string to_text(const ExperimentConfig& c) {
  using detail::fmt_double;
  using detail::fmt_list;
  std::ostringstream os;
  auto kv = [&](const char* k, const std::string& v) { os << k << " = " << v << "\n"; };
  auto iv = [&](const char* k, long long v) { os << k << " = " << v << "\n"; };
  os << "[domain]\n";
  iv("d", c.domain.d);
  kv("L", fmt_double(c.domain.L));
  iv("n_x", c.domain.n_x);
  iv("n_max", c.domain.n_max);
  iv("q", c.domain.q);
  kv("alpha", fmt_double(c.domain.alpha));
  kv("omega", fmt_double(c.domain.omega));
  os << "\n[initial]\n";
  kv("kind", std::string("\"") + to_string(c.initial.kind) + "\"");
  kv("scale", fmt_double(c.initial.scale));
  kv("sigma", fmt_double(c.initial.sigma));
  iv("n", c.initial.n);
  kv("amplitude_re", fmt_double(c.initial.amp_re));
  kv("amplitude_im", fmt_double(c.initial.amp_im));
  kv("x0", fmt_list(c.initial.x0));
  kv("xi0", fmt_list(c.initial.xi0));
  kv("path", "\"" + c.initial.path + "\"");
  os << "\n[ground_state]\n";
  kv("method", std::string("\"") + to_string(c.gs_method) + "\"");
  kv("tol", fmt_double(c.gs_tol));
  kv("res_tol", fmt_double(c.gs_res_tol));
  iv("max_iter", c.gs_max_iter);
  os << "\n[run]\n";
  kv("t_max", fmt_double(c.t_max));
  iv("seed", static_cast<long long>(c.seed));
  os << "\n[step]\n";
  kv("dt", fmt_double(c.step.dt));
  kv("dt_min", fmt_double(c.step.dt_min));
  kv("adapt", c.step.adapt ? "true" : "false");
  kv("cfl_c", fmt_double(c.step.cfl_c));
  kv("observe_every", fmt_double(c.step.observe_every));
  kv("snapshot_times", fmt_list(c.step.snapshot_times));
  kv("boundary_fraction", fmt_double(c.step.boundary_fraction));
  kv("boundary_threshold", fmt_double(c.step.boundary_threshold));
  kv("halt_gradient_factor", fmt_double(c.step.halt_gradient_factor));
  os << "\n[detectors]\n";
  kv("blowup_factor", fmt_double(c.detectors.blowup_factor));
  kv("potential_decay_factor", fmt_double(c.detectors.potential_decay_factor));
  iv("cauchy_windows", c.detectors.cauchy_windows);
  kv("cauchy_t_end", fmt_double(c.detectors.cauchy_t_end));
  kv("q_ratio_tol", fmt_double(c.detectors.q_ratio_tol));
  os << "\n[morawetz]\n";
  kv("enabled", c.morawetz.enabled ? "true" : "false");
  kv("R", fmt_list(c.morawetz.R));
  kv("s", fmt_list(c.morawetz.s));
  kv("delta", fmt_double(c.morawetz.delta));
  kv("eta", fmt_double(c.morawetz.eta));
  kv("every", fmt_double(c.morawetz.every));
  return os.str();
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string config_hash(const ExperimentConfig& c) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_text(c))));
  return buf;
}

}  // namespace phnls
