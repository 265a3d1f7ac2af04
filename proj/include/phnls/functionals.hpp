#pragma once

// Scalar functionals of a field: mass, energy, action, the semivirial
// functional Q, I_omega, the rescaling lambda_star, the closed-form scaling
// profile, the truncated virial with its remainder, and the scattering
// criterion exponents.

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include <json.hpp>

#include "phnls/error.hpp"
#include "phnls/field.hpp"

namespace phnls {

struct FunctionalReport {
  double mass = 0.0;
  double energy = 0.0;
  double action_omega = 0.0;
  double Q = 0.0;
  double I_omega = 0.0;
  std::optional<double> lambda_star;
  NormBundle norm_bundle;
  double time = 0.0;
};

/// The four base quantities that determine every functional along the
/// x-scaling orbit u -> u^lambda.
struct ScalingProfile {
  double grad_x_sq = 0.0;  // ||grad_x u||^2
  double potential = 0.0;  // ||u||_{alpha+2}^{alpha+2}
  double y_energy = 0.0;   // ||d_y u||^2 + ||y u||^2
  double mass = 0.0;
  double alpha = 0.0;
  int d = 1;

  [[nodiscard]] double virial_coefficient() const { return alpha * d / (2.0 * (alpha + 2.0)); }
  [[nodiscard]] double potential_exponent() const { return 0.5 * alpha * d; }

  /// S_omega(u^lambda).
  [[nodiscard]] double action(double lambda, double omega) const {
    return 0.5 * lambda * lambda * grad_x_sq - std::pow(lambda, potential_exponent()) * potential / (alpha + 2.0) +
           0.5 * (y_energy + omega * mass);
  }
  /// Q(u^lambda).
  [[nodiscard]] double Q(double lambda) const {
    return lambda * lambda * grad_x_sq - virial_coefficient() * std::pow(lambda, potential_exponent()) * potential;
  }
  [[nodiscard]] std::optional<double> lambda_star() const {
    const double e = alpha * d - 4.0;
    if (!(grad_x_sq > 0.0) || !(potential > 0.0) || e == 0.0) return std::nullopt;
    return std::pow(2.0 * (alpha + 2.0) * grad_x_sq / (alpha * d * potential), 2.0 / e);
  }
};

inline ScalingProfile scaling_profile(const Field& f) {
  const auto& c = f.domain();
  const NormBundle nb = norms(f);
  return {nb.grad_x_sq, lp_integral(f, c.alpha + 2.0), nb.dy_sq + nb.y_weight_sq, nb.l2 * nb.l2, c.alpha, c.d};
}

inline double mass(const Field& f) { return mass_l2_sq(f); }

inline double energy(const Field& f) {
  const auto p = scaling_profile(f);
  return 0.5 * (p.grad_x_sq + p.y_energy) - p.potential / (p.alpha + 2.0);
}

inline double action(const Field& f, double omega) { return scaling_profile(f).action(1.0, omega); }

inline double semivirial_Q(const Field& f) { return scaling_profile(f).Q(1.0); }

inline std::optional<double> lambda_star(const Field& f) { return scaling_profile(f).lambda_star(); }

inline FunctionalReport functional_report(const Field& f, double omega, double time = 0.0) {
  const auto& c = f.domain();
  FunctionalReport r;
  r.norm_bundle = norms(f, {c.alpha + 2.0});
  const auto& nb = r.norm_bundle;
  const double pot = std::pow(nb.lp.at(c.alpha + 2.0), c.alpha + 2.0);
  const ScalingProfile prof{nb.grad_x_sq, pot, nb.dy_sq + nb.y_weight_sq, nb.l2 * nb.l2, c.alpha, c.d};
  r.mass = prof.mass;
  r.energy = 0.5 * (prof.grad_x_sq + prof.y_energy) - pot / (c.alpha + 2.0);
  r.action_omega = r.energy + 0.5 * omega * r.mass;
  r.Q = prof.Q(1.0);
  r.I_omega = r.action_omega - 2.0 / (c.alpha * c.d) * r.Q;
  r.lambda_star = prof.lambda_star();
  r.time = time;
  return r;
}

inline nlohmann::ordered_json to_json(const FunctionalReport& r) {
  nlohmann::ordered_json j;
  j["time"] = r.time;
  j["mass"] = r.mass;
  j["energy"] = r.energy;
  j["action_omega"] = r.action_omega;
  j["Q"] = r.Q;
  j["I_omega"] = r.I_omega;
  j["lambda_star"] = r.lambda_star ? nlohmann::ordered_json(*r.lambda_star) : nlohmann::ordered_json(nullptr);
  j["l2"] = r.norm_bundle.l2;
  j["grad_x_sq"] = r.norm_bundle.grad_x_sq;
  j["dy_sq"] = r.norm_bundle.dy_sq;
  j["y_weight_sq"] = r.norm_bundle.y_weight_sq;
  j["sigma_sq"] = r.norm_bundle.sigma_sq;
  for (const auto& [p, v] : r.norm_bundle.lp) {
    char key[48];
    std::snprintf(key, sizeof key, "lp_%g", p);
    j[key] = v;
  }
  return j;
}

struct ProfilePoint {
  double lambda;
  double action;
  double Q;
};

/// Closed-form S_omega(u^lambda) and Q(u^lambda) over a lambda grid.
inline std::vector<ProfilePoint> scan_action_profile(const Field& f, double omega, const std::vector<double>& lambdas) {
  const auto prof = scaling_profile(f);
  std::vector<ProfilePoint> out;
  out.reserve(lambdas.size());
  for (double l : lambdas) {
    require(l > 0.0, "scan_action_profile: lambda must be positive");
    out.push_back({l, prof.action(l, omega), prof.Q(l)});
  }
  return out;
}

// --------------------------------------------------------------------------
// Truncated virial

namespace virial_weight {

// Profile w(r): r^2 on [0,1]; degree-9 polynomial in t = r-1 on [1,2] matching
// r^2 to fourth order at r=1 and a flat plateau to fourth order at r=2;
// constant 11/5 beyond. Satisfies w >= 0, w' >= 0 and w'' <= 2.
inline constexpr std::array<double, 10> kTransition = {1.0, 2.0, 1.0, 0.0, 0.0, -119.0 / 5.0, 49.0, -38.0, 12.0, -1.0};
inline constexpr double kPlateau = 11.0 / 5.0;

/// Derivatives 0..4 of the unit profile at r >= 0.
inline std::array<double, 5> derivatives(double r) {
  if (r <= 1.0) return {r * r, 2.0 * r, 2.0, 0.0, 0.0};
  if (r >= 2.0) return {kPlateau, 0.0, 0.0, 0.0, 0.0};
  const double t = r - 1.0;
  std::array<double, 5> out{};
  for (int k = 0; k <= 4; ++k) {
    double acc = 0.0;
    for (int i = 9; i >= k; --i) {
      double coef = kTransition[i];
      for (int j = 0; j < k; ++j) coef *= (i - j);
      acc = acc * t + coef;
    }
    out[k] = acc;
  }
  return out;
}

/// Derivatives of w_R(r) = R^2 w(r/R).
inline std::array<double, 5> derivatives(double r, double R) {
  const auto w = derivatives(r / R);
  return {R * R * w[0], R * w[1], w[2], w[3] / R, w[4] / (R * R)};
}

}  // namespace virial_weight

namespace detail {
inline void check_virial_radius(const Field& f, double R) {
  require(R > 0.0, "truncated virial: R must be positive");
  if (R > 0.8 * f.domain().L) throw InvalidArgument("truncated virial: R > 0.8 L, weight support leaves the box");
}
}  // namespace detail

/// V_R = int w_R(|x|) |u|^2 dz.
inline double truncated_virial(const Field& f, double R) {
  detail::check_virial_radius(f, R);
  const auto rho = density_x(f);
  const auto& g = f.grid();
  KahanSum s;
  for (std::size_t p = 0; p < g.points(); ++p) s += virial_weight::derivatives(g.radius()[p], R)[0] * rho[p];
  return s.value() * g.cell();
}

/// Plain semivirial V_semi = int |x|^2 |u|^2 dz.
inline double semivirial_V(const Field& f) {
  const auto rho = density_x(f);
  const auto& g = f.grid();
  KahanSum s;
  for (std::size_t p = 0; p < g.points(); ++p) s += g.radius()[p] * g.radius()[p] * rho[p];
  return s.value() * g.cell();
}

struct VirialRemainder {
  double A_R = 0.0;
  /// gradient-annulus, radial-derivative, potential-annulus, bi-Laplacian terms.
  std::array<double, 4> components{};
};

/// Remainder A_R = V_R'' - 8 Q(u) from the localized radial virial identity
///   V_R'' = 4 Re int d_j d_k w_R  d_j u* d_k u  - int (Lap^2 w_R) |u|^2
///           - 2 alpha/(alpha+2) int (Lap w_R) |u|^{alpha+2}.
/// The bi-Laplacian term is evaluated as int (Lap w_R - 2d) Lap|u|^2: the fifth
/// derivative of w jumps at the knots and the direct sum converges only at O(h^2).
inline VirialRemainder truncated_virial_remainder(const Field& f, double R) {
  detail::check_virial_radius(f, R);
  const Field u = to_representation(f, XSpace::physical, YSpace::nodes);
  const auto& g = u.grid();
  const int d = g.d();
  const double alpha = g.domain().alpha;
  std::vector<Field> grad;
  for (int a = 0; a < d; ++a) grad.push_back(partial_x(u, a));
  Field lap_u = partial_x(grad[0], 0);
  for (int a = 1; a < d; ++a) lap_u = lap_u + partial_x(grad[a], a);
  const auto w = g.basis().weights();

  KahanSum t_grad, t_radial, t_pot, t_bilap;
  for (std::size_t p = 0; p < g.points(); ++p) {
    const double r = g.radius()[p];
    if (r <= R) continue;  // weight equals |x|^2 there: every integrand vanishes
    const auto wd = virial_weight::derivatives(r, R);
    const double c_grad = 4.0 * (wd[1] / r - 2.0);
    const double c_rad = 4.0 * (wd[2] / (r * r) - wd[1] / (r * r * r));
    const double lap = wd[2] + (d - 1) * wd[1] / r;
    const double c_pot = -2.0 * alpha / (alpha + 2.0) * (lap - 2.0 * d);
    double grad_sq = 0.0, radial_sq = 0.0, pot = 0.0, lap_dens = 0.0;
    for (std::size_t k = 0; k < u.y_size(); ++k) {
      complex xdot = 0.0;
      double gs = 0.0;
      for (int a = 0; a < d; ++a) {
        const complex ga = grad[a].at(p, k);
        gs += std::norm(ga);
        xdot += g.coord(p, a) * ga;
      }
      const double a2 = std::norm(u.at(p, k));
      grad_sq += w[k] * gs;
      radial_sq += w[k] * std::norm(xdot);
      pot += w[k] * abs_pow_from_sq(a2, alpha + 2.0);
      lap_dens += w[k] * (2.0 * std::real(std::conj(u.at(p, k)) * lap_u.at(p, k)) + 2.0 * gs);
    }
    t_grad += c_grad * grad_sq;
    t_radial += c_rad * radial_sq;
    t_pot += c_pot * pot;
    t_bilap += -(lap - 2.0 * d) * lap_dens;
  }
  VirialRemainder out;
  const double cell = g.cell();
  out.components = {t_grad.value() * cell, t_radial.value() * cell, t_pot.value() * cell, t_bilap.value() * cell};
  out.A_R = out.components[0] + out.components[1] + out.components[2] + out.components[3];
  return out;
}

// --------------------------------------------------------------------------

struct CriterionExponents {
  double q;
  double r;
  double s_c;
  double s;
};

/// Exponents of the L^q_t L^r_x H^s_y scattering criterion.
inline CriterionExponents criterion_exponents(int d, double alpha) {
  require(d >= 1 && alpha > 0.0, "criterion_exponents: need d >= 1 and alpha > 0");
  const double den = 2.0 * alpha + 4.0 - d * alpha;
  if (den <= 0.0) throw InvalidArgument("criterion_exponents: 2 alpha + 4 - d alpha <= 0, outside admissible range");
  const double sc = 0.5 * d - 2.0 / alpha;
  return {2.0 * alpha * (alpha + 2.0) / den, alpha + 2.0, sc, 1.0 - sc};
}

}  // namespace phnls
