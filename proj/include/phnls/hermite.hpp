#pragma once

// Spectral machinery for the 1-D harmonic oscillator H = -d^2/dy^2 + y^2:
// Hermite functions, Gauss-Hermite transforms, ladder operators and
// functional calculus on coefficient vectors.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "phnls/error.hpp"
#include "phnls/numeric.hpp"

namespace phnls::hermite {

/// Values e_0(y), ..., e_{count-1}(y) of the normalized Hermite functions.
///
/// Uses the three-term recurrence on a scaled sequence; the Gaussian factor is
/// tracked as a separate log-scale so large |y| does not underflow e_0 before
/// the polynomial part has grown.
inline std::vector<double> functions_at(double y, int count) {
  std::vector<double> out(static_cast<std::size_t>(std::max(count, 0)), 0.0);
  double log_scale = -0.25 * std::log(pi) - 0.5 * y * y;
  double prev = 0.0;
  double cur = 1.0;
  constexpr double kBig = 1e150;
  for (int n = 0; n < count; ++n) {
    out[n] = cur * std::exp(log_scale);
    const double next = std::sqrt(2.0 / (n + 1)) * y * cur - std::sqrt(double(n) / (n + 1)) * prev;
    prev = cur;
    cur = next;
    if (std::abs(cur) > kBig) {
      prev /= kBig;
      cur /= kBig;
      log_scale += std::log(kBig);
    }
  }
  return out;
}

/// Immutable Hermite basis with its Gauss-Hermite quadrature.
///
/// Quadrature weights are folded with e^{y^2} so that
/// sum_k w_k f(y_k) approximates the plain integral of f.
class HermiteBasis {
 public:
  HermiteBasis(int n_max, int q) : n_max_(n_max), q_(q) {
    require(n_max >= 1, "hermite basis needs n_max >= 1");
    require(q >= 2 * n_max, "quadrature size q must be at least 2*n_max to resolve products e_m e_n");
    compute_nodes();
    table_.resize(q_, n_max_);
    analysis_.resize(q_, n_max_);
    for (int k = 0; k < q_; ++k) {
      const auto e = functions_at(nodes_[k], n_max_);
      for (int n = 0; n < n_max_; ++n) {
        table_(k, n) = e[n];
        analysis_(k, n) = weights_[k] * e[n];
      }
    }
    eigenvalues_.resize(n_max_);
    for (int n = 0; n < n_max_; ++n) eigenvalues_[n] = 2.0 * n + 1.0;
  }

  [[nodiscard]] int n_max() const noexcept { return n_max_; }
  [[nodiscard]] int q() const noexcept { return q_; }
  [[nodiscard]] std::span<const double> nodes() const noexcept { return nodes_; }
  [[nodiscard]] std::span<const double> weights() const noexcept { return weights_; }
  [[nodiscard]] std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }
  /// Entry (k, n) = e_n(y_k).
  [[nodiscard]] const Eigen::MatrixXd& table() const noexcept { return table_; }
  /// Entry (k, n) = w_k e_n(y_k); analysis is values^T * analysis().
  [[nodiscard]] const Eigen::MatrixXd& analysis_matrix() const noexcept { return analysis_; }

 private:
  void compute_nodes() {
    // Golub-Welsch: eigenvalues of the symmetric Jacobi matrix of the
    // orthonormal Hermite polynomials are the Gauss nodes.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(q_);
    Eigen::VectorXd sub(std::max(q_ - 1, 0));
    for (int k = 1; k < q_; ++k) sub[k - 1] = std::sqrt(0.5 * k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    nodes_.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + q_);
    // Newton polish on e_q using e_q' = sqrt(2q) e_{q-1} - y e_q.
    for (double& y : nodes_) {
      for (int it = 0; it < 3; ++it) {
        const auto e = functions_at(y, q_ + 1);
        const double f = e[q_];
        const double df = std::sqrt(2.0 * q_) * e[q_ - 1] - y * f;
        if (df == 0.0) break;
        y -= f / df;
      }
    }
    std::sort(nodes_.begin(), nodes_.end());
    // Christoffel numbers in folded form: w_k = 1 / sum_{n<q} e_n(y_k)^2.
    weights_.resize(q_);
    for (int k = 0; k < q_; ++k) {
      const auto e = functions_at(nodes_[k], q_);
      KahanSum s;
      for (double v : e) s += v * v;
      weights_[k] = 1.0 / s.value();
    }
  }

  int n_max_;
  int q_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::vector<double> eigenvalues_;
  Eigen::MatrixXd table_;
  Eigen::MatrixXd analysis_;
};

inline HermiteBasis build_basis(int n_max, int q) { return HermiteBasis(n_max, q); }

/// Coefficients c_n = <f, e_n> in L^2_y.
struct HermiteCoeffs {
  std::vector<complex> coeffs;

  [[nodiscard]] std::size_t size() const noexcept { return coeffs.size(); }
  [[nodiscard]] double norm_sq() const {
    KahanSum s;
    for (const auto& c : coeffs) s += std::norm(c);
    return s.value();
  }
};

inline HermiteCoeffs analyze(std::span<const complex> values, const HermiteBasis& basis) {
  require(static_cast<int>(values.size()) == basis.q(), "analyze: expected one sample per quadrature node");
  HermiteCoeffs out{std::vector<complex>(basis.n_max())};
  const auto& a = basis.analysis_matrix();
  for (int n = 0; n < basis.n_max(); ++n) {
    complex acc = 0.0;
    for (int k = 0; k < basis.q(); ++k) acc += a(k, n) * values[k];
    out.coeffs[n] = acc;
  }
  return out;
}

inline std::vector<complex> synthesize(const HermiteCoeffs& c, const HermiteBasis& basis) {
  require(static_cast<int>(c.size()) <= basis.n_max(), "synthesize: more coefficients than basis modes");
  std::vector<complex> values(basis.q());
  const auto& t = basis.table();
  for (int k = 0; k < basis.q(); ++k) {
    complex acc = 0.0;
    for (std::size_t n = 0; n < c.size(); ++n) acc += t(k, static_cast<int>(n)) * c.coeffs[n];
    values[k] = acc;
  }
  return values;
}

/// Functional calculus: c_n -> (2n+1)^gamma c_n.
inline HermiteCoeffs apply_H_power(const HermiteCoeffs& c, double gamma) {
  HermiteCoeffs out = c;
  for (std::size_t n = 0; n < out.size(); ++n) out.coeffs[n] *= std::pow(2.0 * n + 1.0, gamma);
  return out;
}

/// Result of a ladder-operator application truncated to the input length.
struct LadderResult {
  HermiteCoeffs coeffs;
  /// Energy pushed into mode n_max and dropped: |c_{n_max-1}|^2 n_max / 2.
  double leakage = 0.0;
};

namespace detail {
// sign = +1 for y, -1 for d/dy:
//   y e_n   = sqrt(n/2) e_{n-1} + sqrt((n+1)/2) e_{n+1}
//   e_n'    = sqrt(n/2) e_{n-1} - sqrt((n+1)/2) e_{n+1}
inline LadderResult ladder(const HermiteCoeffs& c, double sign) {
  const std::size_t n_max = c.size();
  LadderResult out{HermiteCoeffs{std::vector<complex>(n_max)}, 0.0};
  for (std::size_t m = 0; m < n_max; ++m) {
    complex v = 0.0;
    if (m + 1 < n_max) v += std::sqrt(0.5 * (m + 1)) * c.coeffs[m + 1];
    if (m >= 1) v += sign * std::sqrt(0.5 * m) * c.coeffs[m - 1];
    out.coeffs.coeffs[m] = v;
  }
  if (n_max > 0) out.leakage = std::norm(c.coeffs[n_max - 1]) * 0.5 * static_cast<double>(n_max);
  return out;
}
}  // namespace detail

inline LadderResult apply_y(const HermiteCoeffs& c) { return detail::ladder(c, +1.0); }
inline LadderResult apply_dy(const HermiteCoeffs& c) { return detail::ladder(c, -1.0); }

}  // namespace phnls::hermite
