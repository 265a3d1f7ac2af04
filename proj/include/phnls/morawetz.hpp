#pragma once

// Interaction Morawetz diagnostics in the free directions: the cutoff chi_R,
// the correlation weights phi_R, varphi_R, psi_R, the windowed momentum xi,
// the interaction quantity M, the localized coercivity check and a
// Monte-Carlo estimate of the averaged space-time bound.

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "phnls/error.hpp"
#include "phnls/fft.hpp"
#include "phnls/field.hpp"
#include "phnls/functionals.hpp"
#include "phnls/numeric.hpp"

namespace phnls::morawetz {

/// chi(r) = 1 on [0, 1-eta], 0 beyond 1, quintic smoothstep in between.
struct CutoffConfig {
  double eta = 0.1;

  void validate() const { require(eta > 0.0 && eta < 0.5, "cutoff: eta must lie in (0, 1/2)"); }

  [[nodiscard]] double value(double r) const {
    const double a = 1.0 - eta;
    if (r <= a) return 1.0;
    if (r >= 1.0) return 0.0;
    const double t = (r - a) / eta;
    return 1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
  }
  [[nodiscard]] double derivative(double r) const {
    const double a = 1.0 - eta;
    if (r <= a || r >= 1.0) return 0.0;
    const double t = (r - a) / eta;
    return -30.0 * t * t * (1.0 - t) * (1.0 - t) / eta;
  }
};

/// Radial tables of the unit-scale weights; phi_R(x) = phi_1(|x|/R) and so on.
class MorawetzWeights {
 public:
  MorawetzWeights(double R, double alpha, int d, CutoffConfig cutoff, double dr, std::vector<double> phi,
                  std::vector<double> varphi, std::vector<double> psi)
      : R_(R), alpha_(alpha), d_(d), cutoff_(cutoff), dr_(dr), phi_(std::move(phi)), varphi_(std::move(varphi)),
        psi_(std::move(psi)) {}

  [[nodiscard]] double R() const noexcept { return R_; }
  [[nodiscard]] double alpha() const noexcept { return alpha_; }
  [[nodiscard]] int d() const noexcept { return d_; }
  [[nodiscard]] const CutoffConfig& cutoff() const noexcept { return cutoff_; }
  /// Table spacing in units of R.
  [[nodiscard]] double dr() const noexcept { return dr_; }
  [[nodiscard]] const std::vector<double>& phi_table() const noexcept { return phi_; }
  [[nodiscard]] const std::vector<double>& varphi_table() const noexcept { return varphi_; }
  [[nodiscard]] const std::vector<double>& psi_table() const noexcept { return psi_; }

  [[nodiscard]] double phi(double r) const { return lookup(phi_, r / R_, 0.0); }
  [[nodiscard]] double varphi(double r) const { return lookup(varphi_, r / R_, 0.0); }
  /// Beyond the table phi vanishes, so psi decays like (table end) / r.
  [[nodiscard]] double psi(double r) const {
    const double u = r / R_;
    const double end = dr_ * static_cast<double>(psi_.size() - 1);
    if (u >= end) return psi_.back() * end / u;
    return lookup(psi_, u, 0.0);
  }

 private:
  [[nodiscard]] double lookup(const std::vector<double>& t, double u, double beyond) const {
    const double pos = u / dr_;
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= t.size()) return beyond;
    const double f = pos - static_cast<double>(i);
    return (1.0 - f) * t[i] + f * t[i + 1];
  }

  double R_, alpha_;
  int d_;
  CutoffConfig cutoff_;
  double dr_;
  std::vector<double> phi_, varphi_, psi_;
};

/// Default auxiliary points per axis: the unit correlation grid spans [-2.5, 2.5)^d.
inline int default_aux_points(int d) { return d == 1 ? 8192 : d == 2 ? 1024 : 128; }

inline constexpr double kAuxHalfWidth = 2.5;

/// Correlation weights by FFT convolution on the auxiliary grid (the supports
/// have radius 1, so the 5-periodic convolution has no wrap-around on |x| < 2);
/// psi by cumulative trapezoid.
inline MorawetzWeights build_weights(const CutoffConfig& cutoff, double R, double alpha, int d, int aux_points = 0) {
  cutoff.validate();
  require(std::isfinite(R) && R > 0.0, "build_weights: R must be positive");
  require(d >= 1 && d <= 3, "build_weights: d must be 1, 2 or 3");
  require(alpha > 0.0, "build_weights: alpha must be positive");
  const int n = aux_points > 0 ? aux_points : default_aux_points(d);
  require(n >= 16 && n % 2 == 0, "build_weights: auxiliary grid needs an even size >= 16");
  const double h = 2.0 * kAuxHalfWidth / n;
  std::size_t cube = 1;
  for (int a = 0; a < d; ++a) cube *= static_cast<std::size_t>(n);

  ComplexBuffer c2(cube), cp(cube);
  for (std::size_t p = 0; p < cube; ++p) {
    std::size_t rem = p;
    double rs = 0.0;
    for (int a = 0; a < d; ++a) {
      const double x = fft::wavenumber(static_cast<int>(rem % n), n) * h;
      rem /= n;
      rs += x * x;
    }
    const double chi = cutoff.value(std::sqrt(rs));
    c2[p] = chi * chi;
    cp[p] = std::pow(chi, alpha + 2.0);
  }
  ComplexBuffer base = c2;
  fft::transform(base, d, n, 1, fft::Direction::forward);
  fft::transform(c2, d, n, 1, fft::Direction::forward);
  fft::transform(cp, d, n, 1, fft::Direction::forward);
  for (std::size_t p = 0; p < cube; ++p) {
    c2[p] *= base[p];
    cp[p] *= base[p];
  }
  fft::transform(c2, d, n, 1, fft::Direction::backward);
  fft::transform(cp, d, n, 1, fft::Direction::backward);
  // unitary transforms: circular convolution = n^{d/2} * ifft(F G), times cell
  const double norm = std::pow(static_cast<double>(n), 0.5 * d) * std::pow(h, d) / unit_ball_volume(d);

  const int m = n / 2;  // samples along the positive first axis: r = j h, j < n/2
  std::vector<double> phi(m), varphi(m), psi(m);
  for (int j = 0; j < m; ++j) {
    phi[j] = c2[j].real() * norm;
    varphi[j] = cp[j].real() * norm;
  }
  double cum = 0.0;
  psi[0] = phi[0];
  for (int j = 1; j < m; ++j) {
    cum += 0.5 * h * (phi[j - 1] + phi[j]);
    psi[j] = cum / (j * h);
  }
  return {R, alpha, d, cutoff, h, std::move(phi), std::move(varphi), std::move(psi)};
}

// --------------------------------------------------------------------------

namespace detail {

/// chi_R(x - s) at every grid point.
inline std::vector<double> window(const Grid& g, const CutoffConfig& cutoff, const std::vector<double>& s, double R) {
  require(static_cast<int>(s.size()) == g.d(), "morawetz: centre s must have d components");
  std::vector<double> w(g.points());
  for (std::size_t p = 0; p < g.points(); ++p) {
    double rs = 0.0;
    for (int a = 0; a < g.d(); ++a) {
      const double v = g.coord(p, a) - s[a];
      rs += v * v;
    }
    w[p] = cutoff.value(std::sqrt(rs) / R);
  }
  return w;
}

/// Physical field and its x-gradient, reused across (s, R) samples.
struct Prepared {
  Field u;
  std::vector<Field> grad;
};

inline Prepared prepare(const Field& f) {
  Prepared out{to_physical(f), {}};
  for (int a = 0; a < out.u.grid().d(); ++a) out.grad.push_back(partial_x(out.u, a));
  return out;
}

/// Windowed mass and momentum: (int chi^2 |u|^2, Im int chi^2 conj(u) grad u).
inline std::pair<double, std::vector<double>> windowed_moments(const Prepared& pr, const std::vector<double>& chi) {
  const auto& g = pr.u.grid();
  const auto w = g.basis().weights();
  KahanSum den;
  std::vector<KahanSum> num(g.d());
  for (std::size_t k = 0; k < pr.u.y_size(); ++k)
    for (std::size_t p = 0; p < g.points(); ++p) {
      const double c2 = chi[p] * chi[p];
      if (c2 == 0.0) continue;
      const complex u = pr.u.at(p, k);
      den += w[k] * c2 * std::norm(u);
      for (int a = 0; a < g.d(); ++a) num[a] += w[k] * c2 * std::imag(std::conj(u) * pr.grad[a].at(p, k));
    }
  std::vector<double> mom(g.d());
  for (int a = 0; a < g.d(); ++a) mom[a] = num[a].value() * g.cell();
  return {den.value() * g.cell(), mom};
}

inline std::vector<double> xi_from(const Prepared& pr, const std::vector<double>& chi) {
  const auto [den, mom] = windowed_moments(pr, chi);
  const double floor = 1e-12 * mass_l2_sq(pr.u);
  std::vector<double> xi(mom.size(), 0.0);
  if (den > floor)
    for (std::size_t a = 0; a < mom.size(); ++a) xi[a] = -mom[a] / den;
  return xi;
}

}  // namespace detail

/// xi = -Im int chi_R^2(x-s) conj(u) grad_x u / int chi_R^2(x-s) |u|^2, or 0
/// when the windowed mass is below 1e-12 of the total.
inline std::vector<double> xi(const Field& f, const std::vector<double>& s, double R,
                              const CutoffConfig& cutoff = {}) {
  require(R > 0.0, "xi: R must be positive");
  const auto pr = detail::prepare(f);
  return detail::xi_from(pr, detail::window(pr.u.grid(), cutoff, s, R));
}

/// Im int chi_R^2(x-s) conj(v) grad_x v with v = e^{i x.xi} u.
inline std::vector<double> windowed_momentum(const Field& f, const std::vector<double>& s, double R,
                                             const std::vector<double>& shift, const CutoffConfig& cutoff = {}) {
  const auto pr = detail::prepare(f);
  const auto chi = detail::window(pr.u.grid(), cutoff, s, R);
  auto [den, mom] = detail::windowed_moments(pr, chi);
  for (std::size_t a = 0; a < mom.size(); ++a) mom[a] += shift[a] * den;
  return mom;
}

// --------------------------------------------------------------------------
// Interaction quantity

namespace detail {

/// y-reduced density rho and current J_a = int Im(conj(u) d_a u) dy.
inline std::pair<std::vector<double>, std::vector<std::vector<double>>> density_current(const Field& f) {
  const auto pr = prepare(f);
  const auto& g = pr.u.grid();
  const auto w = g.basis().weights();
  std::vector<double> rho(g.points(), 0.0);
  std::vector<std::vector<double>> J(g.d(), std::vector<double>(g.points(), 0.0));
  for (std::size_t k = 0; k < pr.u.y_size(); ++k)
    for (std::size_t p = 0; p < g.points(); ++p) {
      const complex u = pr.u.at(p, k);
      rho[p] += w[k] * std::norm(u);
      for (int a = 0; a < g.d(); ++a) J[a][p] += w[k] * std::imag(std::conj(u) * pr.grad[a].at(p, k));
    }
  return {rho, J};
}

}  // namespace detail

/// M = 2 sum_a int int rho(x1) K_a(x1 - x2) J_a(x2) dx1 dx2 with K(w) = psi_R(|w|) w,
/// as a zero-padded (aperiodic) FFT convolution.
inline double interaction_M(const Field& f, const MorawetzWeights& wts) {
  const auto& g = f.grid();
  require(wts.d() == g.d(), "interaction_M: weight dimension differs from the field");
  const auto [rho, J] = detail::density_current(f);
  const int n = g.n();
  const int n2 = 2 * n;
  const int d = g.d();
  std::size_t cube = 1;
  for (int a = 0; a < d; ++a) cube *= static_cast<std::size_t>(n2);
  const double h = g.h();

  // offset vector of padded index q in units of h
  auto offsets = [&](std::size_t q, std::array<int, 3>& off) {
    for (int a = 0; a < d; ++a) {
      off[a] = fft::wavenumber(static_cast<int>(q % n2), n2);
      q /= n2;
    }
  };
  auto padded_index = [&](std::size_t p) {
    std::size_t q = 0, stride = 1;
    for (int a = 0; a < d; ++a) {
      q += g.axis_index(p, a) * stride;
      stride *= n2;
    }
    return q;
  };

  ComplexBuffer acc(cube, complex(0.0));
  for (int a = 0; a < d; ++a) {
    ComplexBuffer K(cube), Jp(cube, complex(0.0));
    std::array<int, 3> off{};
    for (std::size_t q = 0; q < cube; ++q) {
      offsets(q, off);
      double rs = 0.0;
      for (int b = 0; b < d; ++b) rs += static_cast<double>(off[b]) * off[b];
      const double r = std::sqrt(rs) * h;
      K[q] = r > 0.0 ? wts.psi(r) * off[a] * h : 0.0;
    }
    for (std::size_t p = 0; p < g.points(); ++p) Jp[padded_index(p)] = J[a][p];
    fft::transform(K, d, n2, 1, fft::Direction::forward);
    fft::transform(Jp, d, n2, 1, fft::Direction::forward);
    for (std::size_t q = 0; q < cube; ++q) acc[q] += K[q] * Jp[q];
  }
  fft::transform(acc, d, n2, 1, fft::Direction::backward);
  const double conv_norm = std::pow(static_cast<double>(n2), 0.5 * d);
  KahanSum total;
  for (std::size_t p = 0; p < g.points(); ++p) total += rho[p] * acc[padded_index(p)].real() * conv_norm;
  const double cell = g.cell();
  return 2.0 * total.value() * cell * cell;
}

/// O(N^{2d}) direct double sum of the same quantity.
inline double interaction_M_direct(const Field& f, const MorawetzWeights& wts) {
  const auto& g = f.grid();
  require(wts.d() == g.d(), "interaction_M: weight dimension differs from the field");
  const auto [rho, J] = detail::density_current(f);
  KahanSum total;
  for (std::size_t p1 = 0; p1 < g.points(); ++p1)
    for (std::size_t p2 = 0; p2 < g.points(); ++p2) {
      double rs = 0.0;
      std::array<double, 3> w{};
      for (int a = 0; a < g.d(); ++a) {
        w[a] = g.coord(p1, a) - g.coord(p2, a);
        rs += w[a] * w[a];
      }
      const double r = std::sqrt(rs);
      if (r == 0.0) continue;
      const double ps = wts.psi(r);
      double dot = 0.0;
      for (int a = 0; a < g.d(); ++a) dot += ps * w[a] * J[a][p2];
      total += rho[p1] * dot;
    }
  const double cell = g.cell();
  return 2.0 * total.value() * cell * cell;
}

// --------------------------------------------------------------------------
// Coercivity

struct CoercivityResult {
  double Q_loc = 0.0;
  double grad_loc = 0.0;
  bool pass = true;
};

namespace detail {

/// ||grad_x v||^2 and ||v||_{alpha+2}^{alpha+2} for v = chi_R(x-s) e^{i x.xi} u. The
/// gradient is assembled from grad chi (closed form) and the spectral grad u,
/// so a window crossing the box edge does not see a jump.
inline std::pair<double, double> localized_norms(const Prepared& pr, const CutoffConfig& cutoff,
                                                 const std::vector<double>& s, double R,
                                                 const std::vector<double>& xi) {
  const auto& g = pr.u.grid();
  const int d = g.d();
  const double alpha = g.domain().alpha;
  const auto w = g.basis().weights();
  std::vector<double> chi(g.points());
  std::vector<std::array<double, 3>> dchi(g.points());
  for (std::size_t p = 0; p < g.points(); ++p) {
    double rs = 0.0;
    std::array<double, 3> v{};
    for (int a = 0; a < d; ++a) {
      v[a] = g.coord(p, a) - s[a];
      rs += v[a] * v[a];
    }
    const double r = std::sqrt(rs);
    chi[p] = cutoff.value(r / R);
    const double dr = r > 0.0 ? cutoff.derivative(r / R) / (R * r) : 0.0;
    for (int a = 0; a < d; ++a) dchi[p][a] = dr * v[a];
  }
  KahanSum grad, pot;
  for (std::size_t k = 0; k < pr.u.y_size(); ++k)
    for (std::size_t p = 0; p < g.points(); ++p) {
      const complex u = pr.u.at(p, k);
      if (chi[p] == 0.0 && dchi[p][0] == 0.0) continue;
      double gs = 0.0;
      for (int a = 0; a < d; ++a) {
        const complex ga = dchi[p][a] * u + chi[p] * (complex(0.0, xi[a]) * u + pr.grad[a].at(p, k));
        gs += std::norm(ga);
      }
      grad += w[k] * gs;
      pot += w[k] * abs_pow_from_sq(chi[p] * chi[p] * std::norm(u), alpha + 2.0);
    }
  return {grad.value() * g.cell(), pot.value() * g.cell()};
}

inline CoercivityResult coercivity_from(const Prepared& pr, const CutoffConfig& cutoff, const std::vector<double>& s,
                                        double R, double delta) {
  const auto& g = pr.u.grid();
  const auto xi = xi_from(pr, window(g, cutoff, s, R));
  const auto [grad, pot] = localized_norms(pr, cutoff, s, R, xi);
  const double alpha = g.domain().alpha;
  CoercivityResult out;
  out.grad_loc = grad;
  out.Q_loc = grad - alpha * g.d() / (2.0 * (alpha + 2.0)) * pot;
  out.pass = out.Q_loc >= delta * out.grad_loc;
  return out;
}

}  // namespace detail

/// Q and ||grad_x .||^2 of chi_R(.-s) u^xi; pass when Q_loc >= delta * grad_loc.
inline CoercivityResult coercivity_check(const Field& f, const std::vector<double>& s, double R, double delta,
                                         const CutoffConfig& cutoff = {}) {
  require(R > 0.0, "coercivity_check: R must be positive");
  return detail::coercivity_from(detail::prepare(f), cutoff, s, R, delta);
}

// --------------------------------------------------------------------------
// Averaged left-hand side

struct TimedField {
  double t;
  Field field;
};

struct AveragedLhsOptions {
  double t_start = 0.0;     // a
  double T0 = 1.0;          // window [a, a + T0]
  double J0 = 1.0;          // R log-uniform on [R0, R0 e^{J0}]
  double R0 = 1.0;
  double s_half_width = 1.0;  // s uniform on [-W, W]^d
  int samples = 1000;
  std::uint64_t seed = 1;
  CutoffConfig cutoff{};
};

struct AveragedLhs {
  double estimate = 0.0;
  double std_error = 0.0;
  int samples = 0;
  int times = 0;
};

/// Monte-Carlo estimate of
///   (J0 T0)^{-1} int_a^{a+T0} int_{R0}^{R0 e^{J0}} R^{-d} int_s
///       ||chi_R(.-s) u||^2 ||grad_x(chi_R(.-s) u^xi)||^2 ds dR/R dt.
/// Times are drawn uniformly from the fields inside the window, which act as
/// equispaced quadrature nodes.
inline AveragedLhs averaged_lhs(const std::vector<TimedField>& fields, const AveragedLhsOptions& opt) {
  require(opt.T0 > 0.0 && opt.J0 > 0.0 && opt.R0 > 0.0 && opt.s_half_width > 0.0 && opt.samples >= 2,
          "averaged_lhs: T0, J0, R0, s range must be positive and samples >= 2");
  std::vector<detail::Prepared> prep;
  for (const auto& tf : fields)
    if (tf.t >= opt.t_start - 1e-12 && tf.t <= opt.t_start + opt.T0 + 1e-12) prep.push_back(detail::prepare(tf.field));
  if (prep.empty()) throw InvalidArgument("averaged_lhs: no fields inside the time window");
  const int d = prep.front().u.grid().d();
  if (d >= 3) throw InvalidArgument("averaged_lhs: only d = 1 or 2 is supported");

  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::size_t> pick(0, prep.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double volume = std::pow(2.0 * opt.s_half_width, d);
  KahanSum sum, sum_sq;
  for (int i = 0; i < opt.samples; ++i) {
    const auto& pr = prep[pick(rng)];
    const double R = opt.R0 * std::exp(opt.J0 * unit(rng));
    std::vector<double> s(d);
    for (auto& v : s) v = opt.s_half_width * (2.0 * unit(rng) - 1.0);
    const auto chi = detail::window(pr.u.grid(), opt.cutoff, s, R);
    const auto [mass_loc, mom] = detail::windowed_moments(pr, chi);
    (void)mom;
    const auto xi = detail::xi_from(pr, chi);
    const double grad = detail::localized_norms(pr, opt.cutoff, s, R, xi).first;
    const double val = volume * std::pow(R, -d) * mass_loc * grad;
    sum += val;
    sum_sq += val * val;
  }
  const double n = opt.samples;
  AveragedLhs out;
  out.estimate = sum.value() / n;
  const double var = std::max(0.0, sum_sq.value() / n - out.estimate * out.estimate) * n / (n - 1.0);
  out.std_error = std::sqrt(var / n);
  out.samples = opt.samples;
  out.times = static_cast<int>(prep.size());
  return out;
}

}  // namespace phnls::morawetz
