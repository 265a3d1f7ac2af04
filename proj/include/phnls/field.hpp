#pragma once

// Tensor-grid state on R^d x R: a periodic Fourier grid in x and Hermite
// functions in y. Storage is x-fastest, y-slowest:
//   data[k * P + p],  p = i_1 + N i_2 + ... + N^{d-1} i_d,  k = y index.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phnls/error.hpp"
#include "phnls/fft.hpp"
#include "phnls/hermite.hpp"
#include "phnls/numeric.hpp"

namespace phnls {

struct DomainConfig {
  int d = 1;
  double L = 16.0;  // x-box is [-L, L) per axis
  int n_x = 256;
  int n_max = 32;
  int q = 64;
  double alpha = 5.0;
  double omega = 1.0;

  void validate() const {
    require(d >= 1 && d <= 3, "domain: d must be 1, 2 or 3");
    require(L > 0.0, "domain: L must be positive");
    require(n_x >= 2 && (n_x & (n_x - 1)) == 0, "domain: n_x must be a power of two");
    require(n_max >= 1, "domain: n_max must be >= 1");
    require(q >= 2 * n_max, "domain: q must be >= 2*n_max");
    require(alpha > 0.0, "domain: alpha must be positive");
    require(omega > 0.0, "domain: omega must be positive");
  }

  /// 4/d < alpha < 4/(d-1) (alpha > 4 when d = 1).
  [[nodiscard]] bool in_intercritical_window() const {
    if (alpha <= 4.0 / d) return false;
    return d == 1 || alpha < 4.0 / (d - 1);
  }

  bool operator==(const DomainConfig&) const = default;
};

enum class XSpace : std::uint32_t { physical = 0, fourier = 1 };
enum class YSpace : std::uint32_t { nodes = 0, hermite = 1 };

/// Immutable discretization data shared by all fields on one domain.
class Grid {
 public:
  explicit Grid(const DomainConfig& cfg) : cfg_(cfg), basis_((cfg.validate(), cfg.n_max), cfg.q) {
    if (!cfg.in_intercritical_window())
      std::cerr << "phnls: warning: alpha=" << cfg.alpha << " is outside the intercritical window for d=" << cfg.d
                << "\n";
    const int n = cfg_.n_x;
    h_ = 2.0 * cfg_.L / n;
    x1_.resize(n);
    k1_.resize(n);
    for (int j = 0; j < n; ++j) {
      x1_[j] = -cfg_.L + j * h_;
      k1_[j] = fft::wavenumber(j, n) * pi / cfg_.L;
    }
    points_ = 1;
    for (int a = 0; a < cfg_.d; ++a) points_ *= n;
    xi_sq_.resize(points_);
    r_.resize(points_);
    box_.resize(points_);
    for (std::size_t p = 0; p < points_; ++p) {
      double ks = 0.0, rs = 0.0, bx = 0.0;
      std::size_t rem = p;
      for (int a = 0; a < cfg_.d; ++a) {
        const std::size_t i = rem % n;
        rem /= n;
        ks += k1_[i] * k1_[i];
        rs += x1_[i] * x1_[i];
        bx = std::max(bx, std::abs(x1_[i]));
      }
      xi_sq_[p] = ks;
      r_[p] = std::sqrt(rs);
      box_[p] = bx;
    }
  }

  [[nodiscard]] const DomainConfig& domain() const noexcept { return cfg_; }
  [[nodiscard]] const hermite::HermiteBasis& basis() const noexcept { return basis_; }
  [[nodiscard]] int d() const noexcept { return cfg_.d; }
  [[nodiscard]] int n() const noexcept { return cfg_.n_x; }
  [[nodiscard]] std::size_t points() const noexcept { return points_; }
  [[nodiscard]] double h() const noexcept { return h_; }
  [[nodiscard]] double cell() const noexcept { return std::pow(h_, cfg_.d); }
  /// 1-D coordinates x_j = -L + j h.
  [[nodiscard]] const std::vector<double>& x1() const noexcept { return x1_; }
  /// 1-D angular wavenumbers in FFT order.
  [[nodiscard]] const std::vector<double>& k1() const noexcept { return k1_; }
  [[nodiscard]] const std::vector<double>& xi_sq() const noexcept { return xi_sq_; }
  [[nodiscard]] const std::vector<double>& radius() const noexcept { return r_; }
  /// max_a |x_a| per point.
  [[nodiscard]] const std::vector<double>& box_radius() const noexcept { return box_; }
  /// Index along axis a of flattened point p.
  [[nodiscard]] std::size_t axis_index(std::size_t p, int a) const noexcept {
    for (int i = 0; i < a; ++i) p /= cfg_.n_x;
    return p % cfg_.n_x;
  }
  [[nodiscard]] double coord(std::size_t p, int a) const noexcept { return x1_[axis_index(p, a)]; }
  [[nodiscard]] double wavenumber(std::size_t p, int a) const noexcept { return k1_[axis_index(p, a)]; }

 private:
  DomainConfig cfg_;
  hermite::HermiteBasis basis_;
  double h_ = 0.0;
  std::size_t points_ = 0;
  std::vector<double> x1_, k1_, xi_sq_, r_, box_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(const DomainConfig& cfg) { return std::make_shared<const Grid>(cfg); }

/// Complex field on the tensor grid with explicit representation tags.
class Field {
 public:
  Field() = default;
  Field(GridPtr grid, XSpace xs, YSpace ys)
      : grid_(std::move(grid)), xs_(xs), ys_(ys), data_(grid_->points() * y_extent(*grid_, ys)) {}

  [[nodiscard]] const GridPtr& grid_ptr() const noexcept { return grid_; }
  [[nodiscard]] const Grid& grid() const noexcept { return *grid_; }
  [[nodiscard]] const DomainConfig& domain() const noexcept { return grid_->domain(); }
  [[nodiscard]] XSpace x_space() const noexcept { return xs_; }
  [[nodiscard]] YSpace y_space() const noexcept { return ys_; }
  [[nodiscard]] std::size_t points_x() const noexcept { return grid_->points(); }
  [[nodiscard]] std::size_t y_size() const noexcept { return y_extent(*grid_, ys_); }
  [[nodiscard]] ComplexBuffer& data() noexcept { return data_; }
  [[nodiscard]] const ComplexBuffer& data() const noexcept { return data_; }
  complex& at(std::size_t p, std::size_t k) noexcept { return data_[k * points_x() + p]; }
  [[nodiscard]] const complex& at(std::size_t p, std::size_t k) const noexcept { return data_[k * points_x() + p]; }

  void set_tags(XSpace xs, YSpace ys) {
    require(y_extent(*grid_, ys) == y_size(), "field: y-tag change must keep the storage extent");
    xs_ = xs;
    ys_ = ys;
  }
  // Internal: swap storage when the y extent changes.
  void reset(ComplexBuffer data, XSpace xs, YSpace ys) {
    require(data.size() == points_x() * y_extent(*grid_, ys), "field: storage size mismatch");
    data_ = std::move(data);
    xs_ = xs;
    ys_ = ys;
  }

  static std::size_t y_extent(const Grid& g, YSpace ys) {
    return ys == YSpace::nodes ? static_cast<std::size_t>(g.domain().q) : static_cast<std::size_t>(g.domain().n_max);
  }

  Field& operator*=(complex s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

 private:
  GridPtr grid_;
  XSpace xs_ = XSpace::physical;
  YSpace ys_ = YSpace::nodes;
  ComplexBuffer data_;
};

// --------------------------------------------------------------------------
// Representation changes

inline void convert_x_inplace(Field& f, XSpace target) {
  if (f.x_space() == target) return;
  const auto& g = f.grid();
  fft::transform(f.data(), g.d(), g.n(), static_cast<int>(f.y_size()),
                 target == XSpace::fourier ? fft::Direction::forward : fft::Direction::backward);
  f.set_tags(target, f.y_space());
}

inline void convert_y_inplace(Field& f, YSpace target) {
  if (f.y_space() == target) return;
  const auto& g = f.grid();
  const auto& basis = g.basis();
  const Eigen::Index rows = 2 * static_cast<Eigen::Index>(g.points());
  ComplexBuffer out(g.points() * Field::y_extent(g, target));
  Eigen::Map<const Eigen::MatrixXd> in(reinterpret_cast<const double*>(f.data().data()), rows,
                                       static_cast<Eigen::Index>(f.y_size()));
  Eigen::Map<Eigen::MatrixXd> res(reinterpret_cast<double*>(out.data()), rows,
                                  static_cast<Eigen::Index>(Field::y_extent(g, target)));
  if (target == YSpace::hermite)
    res.noalias() = in * basis.analysis_matrix();
  else
    res.noalias() = in * basis.table().transpose();
  f.reset(std::move(out), f.x_space(), target);
}

inline Field to_representation(Field f, XSpace xs, YSpace ys) {
  // y first when leaving nodes keeps the FFT batch small.
  if (ys == YSpace::hermite) {
    convert_y_inplace(f, ys);
    convert_x_inplace(f, xs);
  } else {
    convert_x_inplace(f, xs);
    convert_y_inplace(f, ys);
  }
  return f;
}

inline Field to_spectral(const Field& f) { return to_representation(f, XSpace::fourier, YSpace::hermite); }
inline Field to_physical(const Field& f) { return to_representation(f, XSpace::physical, YSpace::nodes); }

// --------------------------------------------------------------------------
// Arithmetic

inline Field operator+(Field a, const Field& b) {
  const Field bb = to_representation(b, a.x_space(), a.y_space());
  for (std::size_t i = 0; i < a.data().size(); ++i) a.data()[i] += bb.data()[i];
  return a;
}
inline Field operator-(Field a, const Field& b) {
  const Field bb = to_representation(b, a.x_space(), a.y_space());
  for (std::size_t i = 0; i < a.data().size(); ++i) a.data()[i] -= bb.data()[i];
  return a;
}
inline Field operator*(complex s, Field a) {
  a *= s;
  return a;
}

/// Pointwise conjugate in physical space.
inline Field conjugate(const Field& f) {
  Field p = to_physical(f);
  for (auto& v : p.data()) v = std::conj(v);
  return p;
}

// --------------------------------------------------------------------------
// Constructors

struct XProfile {
  enum class Kind { gaussian, gaussian_shifted } kind = Kind::gaussian;
  double sigma = 1.0;
  std::vector<double> x0;  // per axis, shifted only
  std::vector<double> xi0;

  static XProfile gaussian(double sigma) { return {Kind::gaussian, sigma, {}, {}}; }
  static XProfile gaussian_shifted(double sigma, std::vector<double> x0, std::vector<double> xi0) {
    return {Kind::gaussian_shifted, sigma, std::move(x0), std::move(xi0)};
  }
};

/// amplitude * g(x) * e_n(y) sampled on the physical grid; g is L^2-normalized.
inline Field init_product_state(const GridPtr& grid, const XProfile& profile, int n, complex amplitude) {
  const auto& cfg = grid->domain();
  require(n >= 0 && n < cfg.n_max, "init_product_state: Hermite index must be < n_max");
  require(profile.sigma > 0.0, "init_product_state: sigma must be positive");
  if (profile.sigma > cfg.L / 4.0) throw ResolutionError("init_product_state: profile wider than the box (sigma > L/4)");
  const int d = cfg.d;
  std::vector<double> x0(d, 0.0), xi0(d, 0.0);
  if (profile.kind == XProfile::Kind::gaussian_shifted) {
    require(static_cast<int>(profile.x0.size()) == d && static_cast<int>(profile.xi0.size()) == d,
            "init_product_state: shift vectors must have d entries");
    x0 = profile.x0;
    xi0 = profile.xi0;
  }
  const double s2 = profile.sigma * profile.sigma;
  const double norm = std::pow(pi * s2, -0.25 * d);
  std::vector<complex> gx(grid->points());
  for (std::size_t p = 0; p < grid->points(); ++p) {
    double e = 0.0, phase = 0.0;
    for (int a = 0; a < d; ++a) {
      const double x = grid->coord(p, a);
      e += (x - x0[a]) * (x - x0[a]);
      phase += xi0[a] * x;
    }
    gx[p] = norm * std::exp(-0.5 * e / s2) * std::polar(1.0, phase);
  }
  Field f(grid, XSpace::physical, YSpace::nodes);
  const auto& table = grid->basis().table();
  for (int k = 0; k < cfg.q; ++k) {
    const complex yk = amplitude * table(k, n);
    for (std::size_t p = 0; p < grid->points(); ++p) f.at(p, k) = yk * gx[p];
  }
  return f;
}

// --------------------------------------------------------------------------
// Norms

struct NormBundle {
  double l2 = 0.0;
  double grad_x_sq = 0.0;
  double dy_sq = 0.0;
  double y_weight_sq = 0.0;
  std::map<double, double> lp;  // p -> ||u||_p
  double sigma_sq = 0.0;
};

/// Integral of |u|^p by trapezoid in x and Gauss-Hermite in y.
inline double lp_integral(const Field& f, double p) {
  require(p >= 1.0, "lp norm needs p >= 1");
  const Field ph = to_physical(f);
  const auto& g = ph.grid();
  const auto w = g.basis().weights();
  KahanSum total;
  for (std::size_t k = 0; k < ph.y_size(); ++k) {
    KahanSum row;
    for (std::size_t p_ = 0; p_ < g.points(); ++p_) row += abs_pow_from_sq(std::norm(ph.at(p_, k)), p);
    total += w[k] * row.value();
  }
  return total.value() * g.cell();
}

/// y-reduced density rho(x) = int |u|^2 dy on the physical x grid.
inline std::vector<double> density_x(const Field& f) {
  const Field ph = to_representation(f, XSpace::physical, YSpace::nodes);
  const auto& g = ph.grid();
  const auto w = g.basis().weights();
  std::vector<double> rho(g.points(), 0.0);
  for (std::size_t k = 0; k < ph.y_size(); ++k)
    for (std::size_t p = 0; p < g.points(); ++p) rho[p] += w[k] * std::norm(ph.at(p, k));
  return rho;
}

inline double mass_l2_sq(const Field& f) {
  const auto rho = density_x(f);
  KahanSum s;
  for (double v : rho) s += v;
  return s.value() * f.grid().cell();
}

namespace detail {
// sum over x and extended m of |(ladder c)_m|^2 for sign +1 (y) / -1 (d/dy),
// including the mode n_max that a fixed-length ladder drops.
inline double ladder_energy(const Field& spec_y, double sign) {
  const auto& g = spec_y.grid();
  const std::size_t nm = spec_y.y_size();
  KahanSum total;
  for (std::size_t p = 0; p < g.points(); ++p) {
    for (std::size_t m = 0; m <= nm; ++m) {
      complex v = 0.0;
      if (m + 1 < nm) v += std::sqrt(0.5 * (m + 1)) * spec_y.at(p, m + 1);
      if (m >= 1 && m - 1 < nm) v += sign * std::sqrt(0.5 * m) * spec_y.at(p, m - 1);
      total += std::norm(v);
    }
  }
  return total.value() * g.cell();
}
}  // namespace detail

inline double grad_x_sq(const Field& f) {
  const Field s = to_representation(f, XSpace::fourier, f.y_space());
  const auto& g = s.grid();
  const auto& xi2 = g.xi_sq();
  const bool nodes = s.y_space() == YSpace::nodes;
  const auto w = g.basis().weights();
  KahanSum total;
  for (std::size_t k = 0; k < s.y_size(); ++k) {
    KahanSum row;
    for (std::size_t p = 0; p < g.points(); ++p) row += xi2[p] * std::norm(s.at(p, k));
    total += (nodes ? w[k] : 1.0) * row.value();
  }
  return total.value() * g.cell();
}

inline NormBundle norms(const Field& f, const std::vector<double>& p_list = {}) {
  for (double p : p_list) require(p >= 1.0, "norms: p must be >= 1");
  NormBundle nb;
  nb.l2 = std::sqrt(mass_l2_sq(f));
  const Field spec = to_spectral(f);
  nb.grad_x_sq = grad_x_sq(spec);
  nb.dy_sq = detail::ladder_energy(spec, -1.0);
  nb.y_weight_sq = detail::ladder_energy(spec, +1.0);
  for (double p : p_list) nb.lp[p] = std::pow(lp_integral(f, p), 1.0 / p);
  nb.sigma_sq = nb.grad_x_sq + nb.dy_sq + nb.l2 * nb.l2 + nb.y_weight_sq;
  return nb;
}

/// ( int ||u(x,.)||_{H^s_y}^p dx )^{1/p}, or the sup over the grid for p = inf.
inline double aniso_norm(const Field& f, double p, double s = 0.0) {
  require(p >= 1.0, "aniso_norm: p must be >= 1");
  require(s >= 0.0, "aniso_norm: s must be >= 0");
  const Field c = to_representation(f, XSpace::physical, YSpace::hermite);
  const auto& g = c.grid();
  std::vector<double> inner(g.points(), 0.0);
  for (std::size_t n = 0; n < c.y_size(); ++n) {
    const double wgt = std::pow(2.0 * n + 1.0, s);
    for (std::size_t x = 0; x < g.points(); ++x) inner[x] += wgt * std::norm(c.at(x, n));
  }
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : inner) m = std::max(m, v);
    return std::sqrt(m);
  }
  KahanSum acc;
  for (double v : inner) acc += std::pow(v, 0.5 * p);
  return std::pow(acc.value() * g.cell(), 1.0 / p);
}

/// Mass at points with max_a |x_a| > fraction * L.
inline double boundary_mass(const Field& f, double fraction = 0.9) {
  const auto rho = density_x(f);
  const auto& g = f.grid();
  const double lim = fraction * g.domain().L;
  KahanSum s;
  for (std::size_t p = 0; p < g.points(); ++p)
    if (g.box_radius()[p] > lim) s += rho[p];
  return s.value() * g.cell();
}

// --------------------------------------------------------------------------
// x-derivatives and multipliers

/// Physical-space partial derivative along x-axis a (spectral; Nyquist mode dropped).
inline Field partial_x(const Field& f, int a) {
  Field s = to_representation(f, XSpace::fourier, f.y_space());
  const auto& g = s.grid();
  const int n = g.n();
  for (std::size_t p = 0; p < g.points(); ++p) {
    const std::size_t i = g.axis_index(p, a);
    const double k = (static_cast<int>(i) == n / 2) ? 0.0 : g.k1()[i];
    const complex mult(0.0, k);
    for (std::size_t y = 0; y < s.y_size(); ++y) s.at(p, y) *= mult;
  }
  convert_x_inplace(s, XSpace::physical);
  return s;
}

/// Multiply by a function of x (sampled per flattened point) in physical x.
inline Field multiply_x(const Field& f, const std::vector<complex>& m) {
  Field s = to_representation(f, XSpace::physical, f.y_space());
  require(m.size() == s.points_x(), "multiply_x: multiplier size mismatch");
  for (std::size_t y = 0; y < s.y_size(); ++y)
    for (std::size_t p = 0; p < s.points_x(); ++p) s.at(p, y) *= m[p];
  return s;
}

// --------------------------------------------------------------------------
// Scaling operator u -> lambda^{d/2} u(lambda x, y)

namespace detail {
// Periodic band-limited interpolation kernel for even N at offset s grid cells.
inline double periodic_sinc(double s, int n) {
  if (std::abs(s) < 1e-14) return 1.0;
  const double t = std::tan(pi * s / n);
  if (std::abs(t) < 1e-300) return std::cos(pi * s) / std::cos(pi * s / n);
  return std::sin(pi * s) / (n * t);
}

/// Fraction of the mass with max_a |x_a| >= r.
inline double mass_fraction_outside(const Field& f, double r) {
  const auto rho = density_x(f);
  KahanSum out, all;
  for (std::size_t p = 0; p < rho.size(); ++p) {
    all += rho[p];
    if (f.grid().box_radius()[p] >= r) out += rho[p];
  }
  return all.value() > 0.0 ? out.value() / all.value() : 0.0;
}

/// Fraction of the x-spectral mass with max_a |xi_a| >= k.
inline double spectral_fraction_outside(const Field& f, double k) {
  const Field s = to_representation(f, XSpace::fourier, YSpace::hermite);
  const auto& g = s.grid();
  KahanSum out, all;
  for (std::size_t n = 0; n < s.y_size(); ++n)
    for (std::size_t p = 0; p < g.points(); ++p) {
      const double v = std::norm(s.at(p, n));
      all += v;
      double kmax = 0.0;
      for (int a = 0; a < g.d(); ++a) kmax = std::max(kmax, std::abs(g.wavenumber(p, a)));
      if (kmax >= k) out += v;
    }
  return all.value() > 0.0 ? out.value() / all.value() : 0.0;
}
}  // namespace detail

inline Field scale_x(const Field& f, double lambda) {
  require(lambda > 0.0, "scale_x: lambda must be positive");
  if (lambda == 1.0) return f;
  const auto& g = f.grid();
  const double L = g.domain().L;
  if (lambda < 1.0) {
    const double lost = detail::mass_fraction_outside(f, lambda * L);
    if (lost > 1e-12)
      throw ResolutionError("scale_x: widening by 1/" + std::to_string(lambda) + " pushes mass fraction " +
                            std::to_string(lost) + " out of the box");
  } else {
    // Coarse guard: discretization tails sit well below this level.
    const double lost = detail::spectral_fraction_outside(f, pi / (g.h() * lambda));
    if (lost > 1e-6)
      throw ResolutionError("scale_x: narrowing by " + std::to_string(lambda) + " pushes spectral fraction " +
                            std::to_string(lost) + " past the Nyquist wavenumber");
  }
  const int n = g.n();
  Eigen::MatrixXd T(n, n);
  for (int j = 0; j < n; ++j) {
    const double target = lambda * g.x1()[j];
    for (int jp = 0; jp < n; ++jp)
      T(j, jp) = (std::abs(target) < L) ? detail::periodic_sinc((target - g.x1()[jp]) / g.h(), n) : 0.0;
  }
  const Eigen::MatrixXcd Tt = T.transpose().cast<complex>();
  Field out = to_representation(f, XSpace::physical, f.y_space());
  std::size_t inner = 1;
  for (int a = 0; a < g.d(); ++a) {
    const std::size_t outer = out.data().size() / (inner * n);
    for (std::size_t o = 0; o < outer; ++o) {
      complex* base = out.data().data() + o * inner * n;
      Eigen::Map<Eigen::MatrixXcd> block(base, static_cast<Eigen::Index>(inner), n);
      const Eigen::MatrixXcd tmp = block * Tt;
      block = tmp;
    }
    inner *= n;
  }
  out *= std::pow(lambda, 0.5 * g.d());
  return out;
}

// --------------------------------------------------------------------------
// Operators A_1(t) = y sin t - i cos t d/dy,  A_2(t) = y cos t + i sin t d/dy

struct OperatorResult {
  Field field;
  double leakage = 0.0;  // integrated energy of the dropped top Hermite mode
};

inline OperatorResult apply_Aj(const Field& f, double t, int j) {
  require(j == 1 || j == 2, "apply_Aj: j must be 1 or 2");
  const Field c = to_representation(f, f.x_space(), YSpace::hermite);
  const complex cy = j == 1 ? complex(std::sin(t), 0.0) : complex(std::cos(t), 0.0);
  const complex cd = j == 1 ? complex(0.0, -std::cos(t)) : complex(0.0, std::sin(t));
  Field out(c.grid_ptr(), c.x_space(), YSpace::hermite);
  const std::size_t nm = c.y_size();
  const auto& g = c.grid();
  KahanSum leak;
  for (std::size_t p = 0; p < g.points(); ++p) {
    for (std::size_t m = 0; m < nm; ++m) {
      complex up = (m + 1 < nm) ? std::sqrt(0.5 * (m + 1)) * c.at(p, m + 1) : complex(0.0);
      complex down = (m >= 1) ? std::sqrt(0.5 * m) * c.at(p, m - 1) : complex(0.0);
      out.at(p, m) = cy * (up + down) + cd * (up - down);
    }
    const complex top = std::sqrt(0.5 * nm) * c.at(p, nm - 1);
    leak += std::norm(cy * top - cd * top);
  }
  return {std::move(out), leak.value() * g.cell()};
}

}  // namespace phnls
