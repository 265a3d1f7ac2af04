#pragma once

// Experiment orchestration: ground state -> classify -> evolve (with optional
// Morawetz diagnostics) -> detectors, and the on-disk layout of a run:
//
//   config.toml      canonical configuration (hashed)
//   ground_state.json
//   trace.csv        evolution trace, criterion.csv auxiliary series
//   run.json         stepper facts the detectors consume
//   snapshots.csv    index (file, t) of snapshots/*.phnl
//   report.json      DichotomyReport
//   morawetz.csv / morawetz.json  when enabled

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "phnls/config.hpp"
#include "phnls/detectors.hpp"
#include "phnls/evolution.hpp"
#include "phnls/field.hpp"
#include "phnls/functionals.hpp"
#include "phnls/ground_state.hpp"
#include "phnls/morawetz.hpp"
#include "phnls/snapshot.hpp"

namespace phnls::harness {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

enum class Outcome { scatter_proxy, blowup, inconclusive };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::scatter_proxy: return "scatter_proxy";
    case Outcome::blowup: return "blowup";
    case Outcome::inconclusive: return "inconclusive";
  }
  return "unknown";
}

inline std::string provenance(const ExperimentConfig& cfg) {
  return std::string("phnls ") + kVersion + " config_hash=" + config_hash(cfg);
}

// --------------------------------------------------------------------------
// Morawetz diagnostics along a run

struct MorawetzRow {
  double t = 0.0;
  std::vector<double> s;
  double R = 0.0;
  double Q_loc = 0.0;
  double grad_loc = 0.0;
  bool pass = true;
  bool active = false;  // window holds a non-negligible share of grad_x
  double M = 0.0;
};

struct MorawetzSummary {
  std::vector<double> R;
  std::vector<double> sup_abs_M;
  std::vector<double> C;  // sup|M| / R
  int samples = 0;
  int active_samples = 0;
  double pass_rate = 0.0;         // over all (t, s, R)
  double active_pass_rate = 0.0;  // over samples with a populated window
};

/// Centres: the configured list on every axis (tensor grid for d > 1).
inline std::vector<std::vector<double>> morawetz_centres(const MorawetzConfig& m, int d) {
  std::vector<std::vector<double>> out{{}};
  for (int a = 0; a < d; ++a) {
    std::vector<std::vector<double>> next;
    for (const auto& partial : out)
      for (double v : m.s) {
        auto e = partial;
        e.push_back(v);
        next.push_back(std::move(e));
      }
    out = std::move(next);
  }
  return out;
}

class MorawetzProbe {
 public:
  MorawetzProbe(const MorawetzConfig& m, const DomainConfig& dom) : cfg_(m), d_(dom.d) {
    cutoff_.eta = m.eta;
    for (double R : m.R) weights_.push_back(morawetz::build_weights(cutoff_, R, dom.alpha, dom.d));
    centres_ = morawetz_centres(m, dom.d);
  }

  void observe(double t, const Field& u) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto pr = morawetz::detail::prepare(u);
    const double gx = grad_x_sq(u);
    for (const auto& w : weights_) {
      const double M = morawetz::interaction_M(u, w);
      for (const auto& s : centres_) {
        const auto c = morawetz::detail::coercivity_from(pr, cutoff_, s, w.R(), cfg_.delta);
        rows_.push_back({t, s, w.R(), c.Q_loc, c.grad_loc, c.pass, c.grad_loc > 1e-6 * gx, M});
      }
    }
    seconds_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  /// True when t sits on the configured cadence.
  [[nodiscard]] bool due(double t) const {
    const double k = std::round(t / cfg_.every);
    return std::abs(t - k * cfg_.every) <= 1e-9 * std::max(1.0, t);
  }

  [[nodiscard]] const std::vector<MorawetzRow>& rows() const { return rows_; }
  [[nodiscard]] double seconds() const { return seconds_; }

 private:
  MorawetzConfig cfg_;
  int d_;
  morawetz::CutoffConfig cutoff_;
  std::vector<morawetz::MorawetzWeights> weights_;
  std::vector<std::vector<double>> centres_;
  std::vector<MorawetzRow> rows_;
  double seconds_ = 0.0;
};

inline MorawetzSummary summarize(const std::vector<MorawetzRow>& rows, const std::vector<double>& Rs) {
  MorawetzSummary s;
  s.R = Rs;
  s.sup_abs_M.assign(Rs.size(), 0.0);
  int pass = 0, active_pass = 0;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < Rs.size(); ++i)
      if (r.R == Rs[i]) s.sup_abs_M[i] = std::max(s.sup_abs_M[i], std::abs(r.M));
    ++s.samples;
    pass += r.pass;
    if (r.active) {
      ++s.active_samples;
      active_pass += r.pass;
    }
  }
  for (std::size_t i = 0; i < Rs.size(); ++i) s.C.push_back(s.sup_abs_M[i] / Rs[i]);
  s.pass_rate = s.samples ? static_cast<double>(pass) / s.samples : 0.0;
  s.active_pass_rate = s.active_samples ? static_cast<double>(active_pass) / s.active_samples : 0.0;
  return s;
}

inline std::string morawetz_csv(const std::vector<MorawetzRow>& rows, const std::string& prov) {
  std::ostringstream os;
  os << "# " << prov << "\n";
  os << "t,s,R,Q_loc,grad_loc,pass,M\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    std::string s;
    for (std::size_t a = 0; a < r.s.size(); ++a) s += (a ? ";" : "") + num(r.s[a]);
    os << num(r.t) << "," << s << "," << num(r.R) << "," << num(r.Q_loc) << "," << num(r.grad_loc) << ","
       << (r.pass ? 1 : 0) << "," << num(r.M) << "\n";
  }
  return os.str();
}

inline json to_json(const MorawetzSummary& s) {
  json j;
  j["R"] = s.R;
  j["sup_abs_M"] = s.sup_abs_M;
  j["C_fit"] = s.C;
  j["samples"] = s.samples;
  j["active_samples"] = s.active_samples;
  j["coercivity_pass_rate"] = s.pass_rate;
  j["coercivity_active_pass_rate"] = s.active_pass_rate;
  return j;
}

// --------------------------------------------------------------------------
// Evidence

/// Stepper facts persisted next to the trace; together with the trace and
/// the Cauchy snapshots they determine the evidence.
struct RunFacts {
  ThresholdClass classification_in = ThresholdClass::on_boundary;
  double m_omega = 0.0;
  Verdict verdict = Verdict::completed;
  bool dt_underflow = false;
  std::optional<double> stop_time;  // stepper's blowup_time_estimate
};

inline json to_json(const RunFacts& f) {
  json j;
  j["classification_in"] = to_string(f.classification_in);
  j["m_omega"] = f.m_omega;
  j["verdict"] = to_string(f.verdict);
  j["dt_underflow"] = f.dt_underflow;
  j["stop_time"] = f.stop_time ? json(*f.stop_time) : json(nullptr);
  return j;
}

inline RunFacts facts_from_json(const json& j) {
  RunFacts f;
  const std::string c = j.at("classification_in");
  bool found = false;
  for (auto k : {ThresholdClass::K_plus, ThresholdClass::K_minus, ThresholdClass::above_threshold,
                 ThresholdClass::on_boundary})
    if (c == to_string(k)) {
      f.classification_in = k;
      found = true;
    }
  if (!found) throw FormatError("run.json: unknown classification " + c);
  f.m_omega = j.at("m_omega");
  const std::string v = j.at("verdict");
  found = false;
  for (auto k : {Verdict::completed, Verdict::blowup_detected, Verdict::boundary_contaminated})
    if (v == to_string(k)) {
      f.verdict = k;
      found = true;
    }
  if (!found) throw FormatError("run.json: unknown verdict " + v);
  f.dt_underflow = j.at("dt_underflow");
  if (!j.at("stop_time").is_null()) f.stop_time = j.at("stop_time").get<double>();
  return f;
}

/// Times at which the run keeps fields for the Cauchy test.
inline std::vector<double> cauchy_times(const ExperimentConfig& cfg) {
  const double t_end = std::min(cfg.detectors.cauchy_t_end > 0.0 ? cfg.detectors.cauchy_t_end : cfg.t_max, cfg.t_max);
  if (!(t_end > 0.0)) return {};
  return dyadic_times(t_end, cfg.detectors.cauchy_windows);
}

/// Snapshots matching the Cauchy times, ascending; missing ones are skipped.
inline std::vector<Snapshot> pick_cauchy(const std::vector<Snapshot>& all, const std::vector<double>& times) {
  std::vector<Snapshot> out;
  for (double t : times)
    for (const auto& s : all)
      if (std::abs(s.t - t) <= 1e-9 * std::max(1.0, t)) {
        out.push_back(s);
        break;
      }
  return out;
}

struct Assessment {
  Outcome outcome = Outcome::inconclusive;
  bool mismatch = false;
  std::string mismatch_reason;
  BlowupDetection blowup;
  ScatterEvidence scatter;
};

inline Assessment assess(const ExperimentConfig& cfg, const std::vector<TraceRow>& rows,
                         const std::vector<Snapshot>& cauchy, const RunFacts& facts) {
  Assessment a;
  const std::optional<double> underflow_t = facts.dt_underflow ? facts.stop_time : std::nullopt;
  a.blowup = detect_blowup(rows, cfg.detectors.blowup_factor, facts.dt_underflow, underflow_t);
  ScatterProxyConfig sc;
  sc.potential_decay_factor = cfg.detectors.potential_decay_factor;
  sc.q_ratio_tol = cfg.detectors.q_ratio_tol;
  sc.cauchy_windows = cfg.detectors.cauchy_windows;
  sc.boundary_threshold = cfg.step.boundary_threshold;
  a.scatter = detect_scatter_proxy(rows, cauchy, sc, facts.verdict == Verdict::boundary_contaminated);
  if (a.blowup.fired)
    a.outcome = Outcome::blowup;
  else if (facts.verdict == Verdict::completed && a.scatter.fired)
    a.outcome = Outcome::scatter_proxy;

  const auto c = facts.classification_in;
  if (a.outcome == Outcome::blowup && c != ThresholdClass::K_minus && c != ThresholdClass::above_threshold) {
    a.mismatch = true;
    a.mismatch_reason = std::string("blow-up detected from ") + to_string(c) + " data";
  }
  if (a.outcome == Outcome::scatter_proxy && c == ThresholdClass::K_minus) {
    a.mismatch = true;
    a.mismatch_reason = "scatter proxy fired for K_minus data";
  }
  return a;
}

inline json evidence_json(const Assessment& a) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json e;
  e["gradient_growth_ratio"] = a.blowup.growth_ratio;
  e["blowup_fired"] = a.blowup.fired;
  e["blowup_time_estimate"] = opt(a.blowup.t_est);
  e["potential_decay_ratio"] = a.scatter.potential_decay_ratio;
  e["potential_decayed"] = a.scatter.potential_decayed;
  e["q_ratio_final"] = a.scatter.q_ratio_final;
  e["q_ratio_near_one"] = a.scatter.q_ratio_near_one;
  e["cauchy_times"] = a.scatter.cauchy_times;
  e["cauchy_deltas"] = a.scatter.cauchy_deltas;
  e["cauchy_decreasing"] = a.scatter.cauchy_decreasing;
  e["boundary_max"] = a.scatter.boundary_max;
  e["boundary_clean"] = a.scatter.boundary_clean;
  e["scatter_fired"] = a.scatter.fired;
  return e;
}

/// The part of report.json that recomputes from persisted files.
inline json assessment_json(const Assessment& a) {
  json j;
  j["outcome"] = to_string(a.outcome);
  j["mismatch"] = a.mismatch;
  j["mismatch_reason"] = a.mismatch_reason;
  j["evidence"] = evidence_json(a);
  return j;
}

// --------------------------------------------------------------------------
// Runs

struct DichotomyReport {
  ThresholdClass classification_in = ThresholdClass::on_boundary;
  Assessment assessment;
  RunFacts facts;
  std::string trace_path;
  std::string config_hash;
  double t_end = 0.0;
  std::optional<MorawetzSummary> morawetz;
};

inline json to_json(const DichotomyReport& r) {
  json j;
  j["version"] = kVersion;
  j["config_hash"] = r.config_hash;
  j["classification_in"] = to_string(r.classification_in);
  j.update(assessment_json(r.assessment));
  j["trace_path"] = r.trace_path;
  j["facts"] = to_json(r.facts);
  j["t_end"] = r.t_end;
  if (r.morawetz) j["morawetz"] = to_json(*r.morawetz);
  return j;
}

struct RunOptions {
  /// Reuse a ground state instead of solving one on the config's domain.
  std::optional<GroundStateResult> ground_state;
  /// Explicit initial field (already scaled); overrides config.initial.
  std::optional<Field> initial;
  /// Print one progress line per observation to stderr.
  bool progress = false;
};

struct RunResult {
  DichotomyReport report;
  EvolutionTrace trace;
  GroundStateResult ground_state;
  std::vector<MorawetzRow> morawetz_rows;
  double morawetz_seconds = 0.0;
  double evolve_seconds = 0.0;
};

inline GroundStateResult solve_ground_state(const ExperimentConfig& cfg, const GridPtr& grid) {
  return cfg.gs_method == GroundStateMethod::petviashvili
             ? solve_petviashvili(grid, cfg.domain.omega, cfg.gs_options())
             : solve_scaling_descent(grid, cfg.domain.omega, cfg.gs_options());
}

inline Field initial_field(const ExperimentConfig& cfg, const GridPtr& grid, const GroundStateResult& gs) {
  const auto& in = cfg.initial;
  switch (in.kind) {
    case InitialSpec::Kind::ground_state: return complex(in.scale) * gs.field;
    case InitialSpec::Kind::product_state: {
      const XProfile prof =
          in.x0.empty() ? XProfile::gaussian(in.sigma) : XProfile::gaussian_shifted(in.sigma, in.x0, in.xi0);
      return complex(in.scale) * init_product_state(grid, prof, in.n, complex(in.amp_re, in.amp_im));
    }
    case InitialSpec::Kind::file: {
      const Field f = snapshot::load(in.path, grid);
      if (!(f.domain() == cfg.domain)) throw InvalidArgument("initial field domain differs from the config domain");
      return complex(in.scale) * f;
    }
  }
  throw InvalidArgument("unknown initial kind");
}

namespace detail {

inline void write_text(const fs::path& p, const std::string& s) { snapshot::write_atomic(p, s); }

inline std::string read_text(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw FormatError("cannot open " + p.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline std::string snapshot_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snap_%04zu.phnl", i);
  return buf;
}

inline void persist(const fs::path& dir, const ExperimentConfig& cfg, const RunResult& res) {
  fs::create_directories(dir / "snapshots");
  const auto prov = provenance(cfg);
  write_text(dir / "config.toml", to_text(cfg));
  json gs = to_json(res.ground_state);
  gs["version"] = kVersion;
  gs["config_hash"] = config_hash(cfg);
  write_text(dir / "ground_state.json", gs.dump(2) + "\n");
  write_text(dir / "trace.csv", trace_csv(res.trace.rows, prov));
  write_text(dir / "criterion.csv", criterion_csv(res.trace.rows, prov));
  json facts = to_json(res.report.facts);
  facts["version"] = kVersion;
  facts["config_hash"] = config_hash(cfg);
  write_text(dir / "run.json", facts.dump(2) + "\n");
  std::ostringstream idx;
  idx << "# " << prov << "\nfile,t\n";
  char buf[64];
  for (std::size_t i = 0; i < res.trace.snapshots.size(); ++i) {
    const auto name = snapshot_name(i);
    snapshot::save(to_spectral(res.trace.snapshots[i].field), dir / "snapshots" / name);
    std::snprintf(buf, sizeof buf, "%.17g", res.trace.snapshots[i].t);
    idx << name << "," << buf << "\n";
  }
  write_text(dir / "snapshots.csv", idx.str());
  if (res.report.morawetz) {
    write_text(dir / "morawetz.csv", morawetz_csv(res.morawetz_rows, prov));
    json m = to_json(*res.report.morawetz);
    m["version"] = kVersion;
    m["config_hash"] = config_hash(cfg);
    write_text(dir / "morawetz.json", m.dump(2) + "\n");
  }
  write_text(dir / "report.json", to_json(res.report).dump(2) + "\n");
}

}  // namespace detail

/// Full pipeline; persists everything under `out_dir` unless it is empty.
inline RunResult run(const ExperimentConfig& cfg_in, const fs::path& out_dir, const RunOptions& opts = {}) {
  ExperimentConfig cfg = cfg_in;
  cfg.validate();
  const GridPtr grid =
      opts.ground_state ? opts.ground_state->field.grid_ptr() : make_grid(cfg.domain);
  if (!(grid->domain() == cfg.domain)) throw InvalidArgument("run: ground state domain differs from the config");

  RunResult res;
  res.ground_state = opts.ground_state ? *opts.ground_state : solve_ground_state(cfg, grid);
  const Field u0 = opts.initial ? *opts.initial : initial_field(cfg, grid, res.ground_state);
  const double omega = cfg.domain.omega;
  const ThresholdClass cls = classify(u0, omega, res.ground_state.m_omega);

  StepConfig step = cfg.step;
  for (double t : cauchy_times(cfg)) step.snapshot_times.push_back(t);
  std::sort(step.snapshot_times.begin(), step.snapshot_times.end());
  step.snapshot_times.erase(std::unique(step.snapshot_times.begin(), step.snapshot_times.end()),
                            step.snapshot_times.end());

  std::optional<MorawetzProbe> probe;
  if (cfg.morawetz.enabled) probe.emplace(cfg.morawetz, cfg.domain);
  const auto t0 = std::chrono::steady_clock::now();
  ObserverHook hook = [&](double t, const Field& u) {
    if (probe && probe->due(t)) probe->observe(t, u);
    if (opts.progress) {
      const auto nb = norms(u);
      std::fprintf(stderr, "t=%.4f grad_x^2=%.6g dy^2=%.6g boundary=%.3g\n", t, nb.grad_x_sq, nb.dy_sq,
                   boundary_mass(u));
    }
  };
  res.trace = evolve(u0, cfg.t_max, step, omega, hook);
  res.evolve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  auto& rep = res.report;
  rep.classification_in = cls;
  rep.facts = {cls, res.ground_state.m_omega, res.trace.verdict, res.trace.dt_underflow,
               res.trace.blowup_time_estimate};
  rep.assessment = assess(cfg, res.trace.rows, pick_cauchy(res.trace.snapshots, cauchy_times(cfg)), rep.facts);
  rep.trace_path = out_dir.empty() ? "" : (out_dir / "trace.csv").string();
  rep.config_hash = config_hash(cfg);
  rep.t_end = res.trace.rows.empty() ? 0.0 : res.trace.rows.back().t;
  if (probe) {
    res.morawetz_rows = probe->rows();
    res.morawetz_seconds = probe->seconds();
    rep.morawetz = summarize(res.morawetz_rows, cfg.morawetz.R);
  }
  if (rep.assessment.mismatch)
    std::fprintf(stderr, "WARNING: dichotomy mismatch: %s (classification %s, outcome %s)\n",
                 rep.assessment.mismatch_reason.c_str(), to_string(cls), to_string(rep.assessment.outcome));
  if (!out_dir.empty()) detail::persist(out_dir, cfg, res);
  return res;
}

// --------------------------------------------------------------------------
// Reading runs back

inline ExperimentConfig load_run_config(const fs::path& dir) {
  return parse_config(detail::read_text(dir / "config.toml"));
}

inline std::vector<TraceRow> load_trace(const fs::path& dir) {
  std::ifstream t(dir / "trace.csv");
  if (!t) throw FormatError("cannot open " + (dir / "trace.csv").string());
  auto rows = parse_trace_csv(t);
  std::ifstream c(dir / "criterion.csv");
  if (c) merge_criterion_csv(c, rows);
  return rows;
}

inline std::vector<Snapshot> load_snapshots(const fs::path& dir, GridPtr grid = nullptr) {
  std::ifstream is(dir / "snapshots.csv");
  if (!is) throw FormatError("cannot open " + (dir / "snapshots.csv").string());
  std::vector<Snapshot> out;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != "file,t") throw FormatError("snapshots.csv: unexpected header");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError("snapshots.csv: malformed row");
    const double t = std::stod(line.substr(comma + 1));
    Field f = snapshot::load(dir / "snapshots" / line.substr(0, comma), grid);
    if (!grid) grid = f.grid_ptr();
    out.push_back({t, std::move(f)});
  }
  return out;
}

struct Recomputed {
  bool identical = false;
  std::string stored;
  std::string recomputed;
};

/// Re-derives outcome and evidence from trace.csv, run.json and the
/// snapshots, and compares the serialization with report.json.
inline Recomputed recompute_evidence(const fs::path& dir) {
  const ExperimentConfig cfg = load_run_config(dir);
  const auto rows = load_trace(dir);
  const RunFacts facts = facts_from_json(json::parse(detail::read_text(dir / "run.json")));
  const auto snaps = load_snapshots(dir, make_grid(cfg.domain));
  const Assessment a = assess(cfg, rows, pick_cauchy(snaps, cauchy_times(cfg)), facts);
  const json report = json::parse(detail::read_text(dir / "report.json"));
  json stored;
  for (const char* k : {"outcome", "mismatch", "mismatch_reason", "evidence"}) stored[k] = report.at(k);
  Recomputed r;
  r.stored = stored.dump();
  r.recomputed = assessment_json(a).dump();
  r.identical = r.stored == r.recomputed;
  return r;
}

/// Morawetz table and summary from the snapshots of a finished run.
inline std::pair<std::vector<MorawetzRow>, MorawetzSummary> morawetz_from_run(const ExperimentConfig& cfg,
                                                                             const fs::path& dir) {
  require(!cfg.morawetz.R.empty() && !cfg.morawetz.s.empty(), "morawetz: config needs R and s lists");
  const auto snaps = load_snapshots(dir);
  if (snaps.empty()) throw InvalidArgument("morawetz: run directory has no snapshots");
  MorawetzProbe probe(cfg.morawetz, snaps.front().field.domain());
  for (const auto& s : snaps) probe.observe(s.t, s.field);
  return {probe.rows(), summarize(probe.rows(), cfg.morawetz.R)};
}

}  // namespace phnls::harness
