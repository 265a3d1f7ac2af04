#pragma once

// Time integration of  i u_t + Lap_z u - y^2 u = -|u|^alpha u.
// The linear flow is diagonal in (Fourier x, Hermite y) space with symbol
// |xi|^2 + 2n + 1; the nonlinear sub-flow is the exact phase rotation
// u -> exp(i tau |u|^alpha) u. Strang composition L(dt/2) N(dt) L(dt/2).

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "phnls/error.hpp"
#include "phnls/field.hpp"
#include "phnls/functionals.hpp"

namespace phnls {

/// exp(-i tau (|xi|^2 + 2n + 1)) applied in joint spectral space.
inline Field linear_step(const Field& f, double tau) {
  Field s = to_spectral(f);
  if (tau == 0.0) return s;
  const auto& g = s.grid();
  std::vector<complex> xphase(g.points());
  for (std::size_t p = 0; p < g.points(); ++p) xphase[p] = std::polar(1.0, -tau * g.xi_sq()[p]);
  for (std::size_t n = 0; n < s.y_size(); ++n) {
    const complex yphase = std::polar(1.0, -tau * (2.0 * n + 1.0));
    complex* row = s.data().data() + n * g.points();
    for (std::size_t p = 0; p < g.points(); ++p) row[p] *= xphase[p] * yphase;
  }
  return s;
}

/// Imminent blow-up: |u|^alpha overflowed or became non-finite.
class BlowupSignal : public Error {
 public:
  using Error::Error;
};

/// Exact nonlinear sub-flow; returns the field in physical representation.
inline Field nonlinear_step(const Field& f, double tau, double* max_abs_out = nullptr) {
  Field u = to_physical(f);
  const double alpha = u.domain().alpha;
  double mx = 0.0;
  for (auto& v : u.data()) {
    const double a2 = std::norm(v);
    const double phase = tau * abs_pow_from_sq(a2, alpha);
    if (!std::isfinite(phase)) throw BlowupSignal("nonlinear_step: |u|^alpha overflow");
    v *= std::polar(1.0, phase);
    mx = std::max(mx, a2);
  }
  if (max_abs_out) *max_abs_out = std::sqrt(mx);
  return u;
}

inline Field strang_step(const Field& f, double dt, double* max_abs_out = nullptr) {
  return linear_step(nonlinear_step(linear_step(f, 0.5 * dt), dt, max_abs_out), 0.5 * dt);
}

/// Pullback v(t) = exp(-itH) u(t) along the free flow.
inline Field scattering_profile(const Field& u, double t) { return linear_step(u, -t); }

inline double max_abs(const Field& f) {
  const Field p = to_physical(f);
  double mx = 0.0;
  for (const auto& v : p.data()) mx = std::max(mx, std::norm(v));
  return std::sqrt(mx);
}

// --------------------------------------------------------------------------

struct StepConfig {
  double dt = 2e-3;
  double dt_min = 1e-6;
  bool adapt = true;
  double cfl_c = 0.5;
  /// Observer stride in time units; the stepper lands exactly on multiples.
  double observe_every = 0.05;
  /// Times at which full fields are kept in the trace.
  std::vector<double> snapshot_times;
  double boundary_fraction = 0.9;
  double boundary_threshold = 1e-6;
  /// Stop once ||grad_z u||^2 exceeds this multiple of its initial value (0 = never).
  double halt_gradient_factor = 0.0;

  void validate() const {
    require(dt > 0.0, "step: dt must be positive");
    require(dt_min > 0.0 && dt_min < dt, "step: need 0 < dt_min < dt");
    require(cfl_c > 0.0 && cfl_c <= pi, "step: cfl_c must lie in (0, pi]");
    require(observe_every > 0.0, "step: observe_every must be positive");
  }
};

/// One row of the trace CSV.
struct TraceRow {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double action_omega = 0.0;
  double Q = 0.0;
  double grad_x_sq = 0.0;
  double dy_sq = 0.0;
  double y_weight_sq = 0.0;
  double lp_alpha_plus_2 = 0.0;  // ||u||_{alpha+2}^{alpha+2}
  double v_semi = 0.0;
  double boundary_mass = 0.0;
  double dt = 0.0;
  /// ||u||_{L^r_x H^s_y} with the criterion exponents (auxiliary series).
  double criterion_norm = 0.0;
  double sigma_sq = 0.0;
};

enum class Verdict { completed, blowup_detected, boundary_contaminated };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::completed: return "completed";
    case Verdict::blowup_detected: return "blowup_detected";
    case Verdict::boundary_contaminated: return "boundary_contaminated";
  }
  return "unknown";
}

struct Snapshot {
  double t;
  Field field;
};

struct EvolutionTrace {
  std::vector<FunctionalReport> reports;
  std::vector<TraceRow> rows;
  std::vector<Snapshot> snapshots;
  Verdict verdict = Verdict::completed;
  std::optional<double> blowup_time_estimate;
  bool dt_underflow = false;
  double omega = 1.0;
  Field final_field;
};

inline TraceRow make_row(const Field& u, const FunctionalReport& r, double dt) {
  const auto& c = u.domain();
  TraceRow row;
  row.t = r.time;
  row.mass = r.mass;
  row.energy = r.energy;
  row.action_omega = r.action_omega;
  row.Q = r.Q;
  row.grad_x_sq = r.norm_bundle.grad_x_sq;
  row.dy_sq = r.norm_bundle.dy_sq;
  row.y_weight_sq = r.norm_bundle.y_weight_sq;
  row.lp_alpha_plus_2 = std::pow(r.norm_bundle.lp.at(c.alpha + 2.0), c.alpha + 2.0);
  row.v_semi = semivirial_V(u);
  row.boundary_mass = boundary_mass(u);
  row.dt = dt;
  const double den = 2.0 * c.alpha + 4.0 - c.d * c.alpha;
  if (den > 0.0) {
    const auto ex = criterion_exponents(c.d, c.alpha);
    row.criterion_norm = aniso_norm(u, ex.r, ex.s);
  }
  row.sigma_sq = r.norm_bundle.sigma_sq;
  return row;
}

/// Optional per-observation hook (e.g. Morawetz diagnostics).
using ObserverHook = std::function<void(double t, const Field& u)>;

inline EvolutionTrace evolve(const Field& initial, double t_max, const StepConfig& cfg, double omega,
                             const ObserverHook& hook = {}) {
  cfg.validate();
  require(t_max >= 0.0, "evolve: t_max must be non-negative");
  EvolutionTrace trace;
  trace.omega = omega;
  const double alpha = initial.domain().alpha;
  const double eps = 1e-12 * std::max(1.0, t_max);

  Field u = to_spectral(initial);
  double t = 0.0;
  double last_dt = 0.0;
  double umax = max_abs(u);
  std::vector<double> snaps = cfg.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  std::size_t next_snap = 0;
  double grad0 = 0.0;

  auto observe = [&](double time) -> bool {
    FunctionalReport r = functional_report(u, omega, time);
    TraceRow row = make_row(u, r, last_dt);
    if (trace.reports.empty()) grad0 = r.norm_bundle.grad_x_sq + r.norm_bundle.dy_sq;
    trace.reports.push_back(r);
    trace.rows.push_back(row);
    if (hook) hook(time, u);
    if (row.boundary_mass > cfg.boundary_threshold) {
      trace.verdict = Verdict::boundary_contaminated;
      return false;
    }
    const double grad = r.norm_bundle.grad_x_sq + r.norm_bundle.dy_sq;
    if (!std::isfinite(grad)) {
      trace.verdict = Verdict::blowup_detected;
      trace.blowup_time_estimate = time;
      return false;
    }
    if (cfg.halt_gradient_factor > 0.0 && grad >= cfg.halt_gradient_factor * grad0) {
      trace.verdict = Verdict::blowup_detected;
      return false;
    }
    return true;
  };
  auto take_snapshots = [&](double time) {
    while (next_snap < snaps.size() && snaps[next_snap] <= time + eps) {
      trace.snapshots.push_back({time, u});
      ++next_snap;
    }
  };

  bool running = observe(0.0);
  take_snapshots(0.0);
  std::size_t obs_index = 1;
  while (running && t < t_max - eps) {
    const double next_obs = std::min(t_max, obs_index * cfg.observe_every);
    double dt = cfg.dt;
    if (cfg.adapt && umax > 0.0) {
      const double limit = cfg.cfl_c / abs_pow_from_sq(umax * umax, alpha);
      if (limit < cfg.dt_min) {
        trace.verdict = Verdict::blowup_detected;
        trace.dt_underflow = true;
        trace.blowup_time_estimate = t;
        break;
      }
      dt = std::min(dt, limit);
    }
    double target = std::min(t + dt, next_obs);
    if (next_snap < snaps.size()) target = std::min(target, std::max(snaps[next_snap], t + eps));
    dt = target - t;
    try {
      u = strang_step(u, dt, &umax);
    } catch (const BlowupSignal&) {
      trace.verdict = Verdict::blowup_detected;
      trace.blowup_time_estimate = t;
      break;
    }
    t = target;
    last_dt = dt;
    if (!std::isfinite(umax)) {
      trace.verdict = Verdict::blowup_detected;
      trace.blowup_time_estimate = t;
      break;
    }
    take_snapshots(t);
    if (t >= next_obs - eps) {
      running = observe(t);
      while (obs_index * cfg.observe_every <= t + eps) ++obs_index;
    }
  }
  trace.final_field = u;
  return trace;
}

// --------------------------------------------------------------------------
// Trace CSV

inline constexpr const char* kTraceHeader =
    "t,mass,energy,action_omega,Q,grad_x_sq,dy_sq,y_weight_sq,lp_alpha_plus_2,v_semi,boundary_mass,dt";

/// `provenance`, when given, goes out as a leading `# ...` comment line.
inline std::string trace_csv(const std::vector<TraceRow>& rows, const std::string& provenance = "") {
  std::ostringstream os;
  if (!provenance.empty()) os << "# " << provenance << "\n";
  os << kTraceHeader << "\n";
  char buf[64];
  auto put = [&](double v, bool last) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf << (last ? "\n" : ",");
  };
  for (const auto& r : rows) {
    put(r.t, false);
    put(r.mass, false);
    put(r.energy, false);
    put(r.action_omega, false);
    put(r.Q, false);
    put(r.grad_x_sq, false);
    put(r.dy_sq, false);
    put(r.y_weight_sq, false);
    put(r.lp_alpha_plus_2, false);
    put(r.v_semi, false);
    put(r.boundary_mass, false);
    put(r.dt, true);
  }
  return os.str();
}

/// Auxiliary per-observation series not in the trace schema.
inline std::string criterion_csv(const std::vector<TraceRow>& rows, const std::string& provenance = "") {
  std::ostringstream os;
  if (!provenance.empty()) os << "# " << provenance << "\n";
  os << "t,criterion_norm,sigma_sq\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", r.t, r.criterion_norm, r.sigma_sq);
    os << buf;
  }
  return os.str();
}

namespace detail {
inline std::vector<std::vector<double>> parse_csv_numbers(std::istream& is, std::string& header) {
  while (std::getline(is, header) && !header.empty() && header.front() == '#') {
  }
  std::vector<std::vector<double>> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError("csv: bad number '" + cell + "'");
      }
    }
    out.push_back(std::move(vals));
  }
  return out;
}
}  // namespace detail

inline std::vector<TraceRow> parse_trace_csv(std::istream& is) {
  std::string header;
  const auto rows = detail::parse_csv_numbers(is, header);
  if (header != kTraceHeader) throw FormatError("trace csv: unexpected header");
  std::vector<TraceRow> out;
  for (const auto& v : rows) {
    if (v.size() != 12) throw FormatError("trace csv: expected 12 columns");
    TraceRow r;
    r.t = v[0];
    r.mass = v[1];
    r.energy = v[2];
    r.action_omega = v[3];
    r.Q = v[4];
    r.grad_x_sq = v[5];
    r.dy_sq = v[6];
    r.y_weight_sq = v[7];
    r.lp_alpha_plus_2 = v[8];
    r.v_semi = v[9];
    r.boundary_mass = v[10];
    r.dt = v[11];
    out.push_back(r);
  }
  return out;
}

/// Merges the auxiliary criterion series into rows parsed from the trace CSV.
inline void merge_criterion_csv(std::istream& is, std::vector<TraceRow>& rows) {
  std::string header;
  const auto vals = detail::parse_csv_numbers(is, header);
  if (vals.size() != rows.size()) throw FormatError("criterion csv: row count differs from trace");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (vals[i].size() != 3 || vals[i][0] != rows[i].t) throw FormatError("criterion csv: misaligned row");
    rows[i].criterion_norm = vals[i][1];
    rows[i].sigma_sq = vals[i][2];
  }
}

}  // namespace phnls
