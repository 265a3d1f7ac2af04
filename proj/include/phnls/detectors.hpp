#pragma once

// Outcome detectors on an evolution trace: finite-time blow-up, the
// scattering proxy, and the windowed scattering-criterion norm.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "phnls/error.hpp"
#include "phnls/evolution.hpp"
#include "phnls/field.hpp"
#include "phnls/numeric.hpp"

namespace phnls {

struct BlowupDetection {
  bool fired = false;
  std::optional<double> t_est;
  double growth_ratio = 0.0;  // max ||grad_z u||^2 / ||grad_z u(0)||^2
};

namespace detail {

inline double grad_z_sq(const TraceRow& r) { return r.grad_x_sq + r.dy_sq; }

/// Least-squares slope of y against x.
inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  return den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
}

/// Residual of the linear fit log G = c - gamma log(T - t) over the samples.
inline double power_law_residual(const std::vector<double>& t, const std::vector<double>& logG, double T) {
  std::vector<double> x(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) x[i] = std::log(T - t[i]);
  const double b = slope(x, logG);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += logG[i];
  }
  mx /= x.size();
  my /= x.size();
  double res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = logG[i] - (my + b * (x[i] - mx));
    res += e * e;
  }
  return b < 0.0 ? res : std::numeric_limits<double>::infinity();
}

/// Blow-up time from ||grad u||^2 ~ C (T - t)^{-gamma}: golden-section search
/// on T beyond the last sample, minimizing the log-log fit residual.
inline std::optional<double> power_law_time(const std::vector<double>& t, const std::vector<double>& G) {
  if (t.size() < 4) return std::nullopt;
  std::vector<double> logG(G.size());
  for (std::size_t i = 0; i < G.size(); ++i) logG[i] = std::log(G[i]);
  const double span = t.back() - t.front();
  if (!(span > 0.0)) return std::nullopt;
  double lo = t.back() + 1e-6 * span, hi = t.back() + 10.0 * span;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
  double fa = power_law_residual(t, logG, a), fb = power_law_residual(t, logG, b);
  for (int it = 0; it < 200; ++it) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - g * (hi - lo);
      fa = power_law_residual(t, logG, a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + g * (hi - lo);
      fb = power_law_residual(t, logG, b);
    }
  }
  const double T = 0.5 * (lo + hi);
  return std::isfinite(power_law_residual(t, logG, T)) ? std::optional<double>(T) : std::nullopt;
}

}  // namespace detail

/// Fires once ||grad_z u||^2 >= factor * ||grad_z u(0)||^2 with a positive
/// trend over the last 5 samples, or when the stepper hit dt_min. The blow-up
/// time is extrapolated from a power-law fit to the growing samples; if no
/// fit is possible the underflow time is used.
inline BlowupDetection detect_blowup(const std::vector<TraceRow>& rows, double factor, bool dt_underflow = false,
                                     std::optional<double> underflow_time = std::nullopt) {
  BlowupDetection out;
  if (rows.empty()) return out;
  const double g0 = detail::grad_z_sq(rows.front());
  double gmax = g0;
  std::size_t fire = rows.size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double g = detail::grad_z_sq(rows[i]);
    if (!std::isfinite(g)) {
      fire = std::min(fire, i);
      break;
    }
    gmax = std::max(gmax, g);
    if (fire == rows.size() && i >= 4 && g >= factor * g0) {
      std::vector<double> t, y;
      for (std::size_t j = i - 4; j <= i; ++j) {
        t.push_back(rows[j].t);
        y.push_back(detail::grad_z_sq(rows[j]));
      }
      if (detail::slope(t, y) > 0.0) fire = i;
    }
  }
  out.growth_ratio = g0 > 0.0 ? gmax / g0 : 0.0;
  out.fired = fire < rows.size() || dt_underflow;
  if (!out.fired) return out;

  // growing tail up to the firing sample (or the end of the trace)
  const std::size_t end = std::min(fire + 1, rows.size());
  std::vector<double> t, G;
  for (std::size_t j = end; j-- > 0;) {
    const double g = detail::grad_z_sq(rows[j]);
    if (!std::isfinite(g) || (!G.empty() && g >= G.back())) break;
    t.push_back(rows[j].t);
    G.push_back(g);
    if (t.size() == 8) break;
  }
  std::reverse(t.begin(), t.end());
  std::reverse(G.begin(), G.end());
  out.t_est = detail::power_law_time(t, G);
  if (!out.t_est && underflow_time) out.t_est = underflow_time;
  return out;
}

// --------------------------------------------------------------------------

struct ScatterProxyConfig {
  double potential_decay_factor = 100.0;
  double q_ratio_tol = 0.05;
  int cauchy_windows = 3;
  double boundary_threshold = 1e-6;
};

struct ScatterEvidence {
  bool fired = false;
  bool potential_decayed = false;
  bool q_ratio_near_one = false;
  bool cauchy_decreasing = false;
  bool boundary_clean = false;
  double potential_decay_ratio = 0.0;  // max / final
  double q_ratio_final = 0.0;          // Q / ||grad_x u||^2 at the end
  double boundary_max = 0.0;
  std::vector<double> cauchy_times;
  std::vector<double> cauchy_deltas;
};

/// Dyadic times t_end 2^{-k}, k = windows..0, for the Cauchy test.
inline std::vector<double> dyadic_times(double t_end, int windows) {
  std::vector<double> t;
  for (int k = windows; k >= 0; --k) t.push_back(t_end * std::pow(2.0, -k));
  return t;
}

/// ||v(t_{k+1}) - v(t_k)||_Sigma for the linear pullbacks v(t) = e^{-itH} u(t).
inline std::vector<double> cauchy_deltas(const std::vector<Snapshot>& snaps) {
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < snaps.size(); ++k) {
    const Field a = scattering_profile(snaps[k].field, snaps[k].t);
    const Field b = scattering_profile(snaps[k + 1].field, snaps[k + 1].t);
    out.push_back(std::sqrt(norms(b - a).sigma_sq));
  }
  return out;
}

/// Deltas shrink window over window; values under `floor` count as converged.
inline bool deltas_decreasing(const std::vector<double>& d, double floor) {
  if (d.size() < 2) return false;
  for (std::size_t k = 0; k + 1 < d.size(); ++k) {
    if (d[k + 1] <= floor) continue;
    if (!(d[k + 1] < d[k])) return false;
  }
  return true;
}

/// `rows`: the trace; `snaps`: fields at the dyadic Cauchy times, ascending.
inline ScatterEvidence detect_scatter_proxy(const std::vector<TraceRow>& rows, const std::vector<Snapshot>& snaps,
                                            const ScatterProxyConfig& cfg, bool boundary_contaminated = false) {
  ScatterEvidence ev;
  if (rows.empty()) return ev;
  double pmax = 0.0;
  for (const auto& r : rows) {
    pmax = std::max(pmax, r.lp_alpha_plus_2);
    ev.boundary_max = std::max(ev.boundary_max, r.boundary_mass);
  }
  const auto& last = rows.back();
  ev.potential_decay_ratio = last.lp_alpha_plus_2 > 0.0 ? pmax / last.lp_alpha_plus_2 : std::numeric_limits<double>::infinity();
  ev.potential_decayed = ev.potential_decay_ratio >= cfg.potential_decay_factor;
  ev.q_ratio_final = last.grad_x_sq > 0.0 ? last.Q / last.grad_x_sq : 0.0;
  ev.q_ratio_near_one = std::abs(ev.q_ratio_final - 1.0) <= cfg.q_ratio_tol;
  for (const auto& s : snaps) ev.cauchy_times.push_back(s.t);
  ev.cauchy_deltas = cauchy_deltas(snaps);
  double sigma_scale = 0.0;
  if (!snaps.empty()) sigma_scale = std::sqrt(norms(snaps.back().field).sigma_sq);
  ev.cauchy_decreasing = static_cast<int>(ev.cauchy_deltas.size()) >= cfg.cauchy_windows &&
                         deltas_decreasing(ev.cauchy_deltas, 1e-10 * sigma_scale);
  ev.boundary_clean = !boundary_contaminated && ev.boundary_max <= cfg.boundary_threshold;
  ev.fired = ev.potential_decayed && ev.q_ratio_near_one && ev.cauchy_decreasing && ev.boundary_clean;
  return ev;
}

// --------------------------------------------------------------------------

/// ( int_{t0}^{t1} a(t)^q dt )^{1/q} by the trapezoid rule over the trace
/// samples, where a(t) is the recorded L^r_x H^s_y norm; the integrand is
/// interpolated linearly at window ends that fall between samples.
inline double criterion_norm(const std::vector<TraceRow>& rows, double t0, double t1, double q) {
  require(q >= 1.0, "criterion_norm: q must be >= 1");
  require(t1 > t0, "criterion_norm: empty window");
  if (rows.size() < 2) throw InvalidArgument("criterion_norm: trace has fewer than two samples");
  const double eps = 1e-9 * std::max(1.0, std::abs(t1));
  if (t0 < rows.front().t - eps || t1 > rows.back().t + eps)
    throw InvalidArgument("criterion_norm: window lies outside the trace");
  auto f = [&](std::size_t i) { return std::pow(rows[i].criterion_norm, q); };
  KahanSum acc;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const double a = rows[i].t, b = rows[i + 1].t;
    const double lo = std::max(a, t0), hi = std::min(b, t1);
    if (hi <= lo) continue;
    const double fa = f(i), fb = f(i + 1);
    auto interp = [&](double t) { return fa + (fb - fa) * (t - a) / (b - a); };
    acc += 0.5 * (hi - lo) * (interp(lo) + interp(hi));
  }
  return std::pow(acc.value(), 1.0 / q);
}

}  // namespace phnls
