#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "phnls/morawetz.hpp"

using namespace phnls;
using namespace phnls::morawetz;

namespace {

GridPtr grid(int d, double L, int n_x, int n_max) {
  DomainConfig c;
  c.d = d;
  c.L = L;
  c.n_x = n_x;
  c.n_max = n_max;
  c.q = 2 * n_max;
  c.alpha = d == 1 ? 5.0 : 3.0;
  return make_grid(c);
}

Field packet(const GridPtr& g, double k, complex amp = 1.0) {
  std::vector<double> x0(g->d(), 0.3), xi(g->d(), k);
  return init_product_state(g, XProfile::gaussian_shifted(1.0, x0, xi), 0, amp) +
         init_product_state(g, XProfile::gaussian_shifted(0.7, std::vector<double>(g->d(), -0.5), xi), 1, 0.4 * amp);
}

}  // namespace

TEST(Cutoff, Profile) {
  const CutoffConfig c{0.1};
  EXPECT_EQ(c.value(0.0), 1.0);
  EXPECT_EQ(c.value(0.9), 1.0);
  EXPECT_EQ(c.value(1.0), 0.0);
  EXPECT_NEAR(c.value(0.95), 0.5, 1e-14);
  for (double r = 0.0; r < 1.2; r += 1e-3) {
    EXPECT_GE(c.value(r), 0.0);
    EXPECT_LE(c.value(r), 1.0);
    EXPECT_LE(c.derivative(r), 0.0);
    const double h = 1e-6;
    if (r > 0.0) EXPECT_NEAR(c.derivative(r), (c.value(r + h) - c.value(r - h)) / (2 * h), 1e-5);
  }
  EXPECT_THROW(CutoffConfig{0.6}.validate(), InvalidArgument);
}

TEST(Weights, PhiAtOriginByQuadrature) {
  const CutoffConfig c{0.1};
  // phi(0) = |B_1|^{-1} int chi^4, d = 1
  double direct = 0.0;
  const int m = 200000;
  for (int i = 0; i < m; ++i) {
    const double r = (i + 0.5) / m;
    direct += std::pow(c.value(r), 4.0) / m;
  }
  const auto w = build_weights(c, 1.0, 5.0, 1);
  EXPECT_NEAR(w.phi(0.0), direct, 1e-5);
  const auto w4 = build_weights(c, 4.0, 5.0, 1);
  EXPECT_NEAR(w4.phi(2.0), w.phi(0.5), 1e-14);
  EXPECT_EQ(w.phi(2.5), 0.0);
}

TEST(Weights, Ordering) {
  for (int d : {1, 2}) {
    for (double eta : {0.1, 0.05}) {
      const auto w = build_weights(CutoffConfig{eta}, 1.0, d == 1 ? 5.0 : 3.0, d);
      double gap = 0.0;
      for (double r = 0.0; r < 2.4; r += 0.01) {
        EXPECT_GE(w.psi(r) - w.phi(r), -1e-10) << "d=" << d << " r=" << r;
        EXPECT_GE(w.phi(r), -1e-12);
        gap = std::max(gap, std::abs(w.phi(r) - w.varphi(r)));
      }
      EXPECT_LE(gap, 3.0 * eta) << "d=" << d << " eta=" << eta;
    }
  }
  EXPECT_THROW((void)build_weights(CutoffConfig{0.1}, -1.0, 5.0, 1), InvalidArgument);
}

TEST(Xi, Examples) {
  const auto g = grid(1, 8.0, 128, 4);
  const Field real = init_product_state(g, XProfile::gaussian(1.0), 0, 1.0);
  EXPECT_NEAR(xi(real, {0.0}, 2.0)[0], 0.0, 1e-13);
  const Field mod = init_product_state(g, XProfile::gaussian_shifted(1.0, {0.0}, {1.5}), 0, 1.0);
  EXPECT_NEAR(xi(mod, {0.3}, 2.0)[0], -1.5, 1e-10);
  const Field far = init_product_state(g, XProfile::gaussian_shifted(0.3, {-6.0}, {1.0}), 0, 1.0);
  EXPECT_EQ(xi(far, {6.0}, 1.0)[0], 0.0);
}

TEST(Xi, GaugeCovarianceAndCentredMomentum) {
  // h = 0.25 resolves the narrower packet after the 0.7 frequency shift
  const auto g = grid(2, 8.0, 64, 4);
  const Field u = packet(g, 0.4);
  const std::vector<double> s{0.2, -0.1};
  const auto x0 = xi(u, s, 2.0);
  std::vector<complex> ph(g->points());
  for (std::size_t p = 0; p < g->points(); ++p) ph[p] = std::polar(1.0, 0.7 * g->coord(p, 0) - 0.2 * g->coord(p, 1));
  const auto x1 = xi(multiply_x(u, ph), s, 2.0);
  EXPECT_NEAR(x1[0], x0[0] - 0.7, 1e-10);
  EXPECT_NEAR(x1[1], x0[1] + 0.2, 1e-10);
  const auto mom = windowed_momentum(u, s, 2.0, x0);
  for (double v : mom) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(InteractionM, VanishesForRealFields) {
  const auto g = grid(1, 8.0, 64, 4);
  const auto w = build_weights(CutoffConfig{0.1}, 2.0, 5.0, 1);
  EXPECT_NEAR(interaction_M(init_product_state(g, XProfile::gaussian(1.0), 0, 1.0), w), 0.0, 1e-14);
}

TEST(InteractionM, FftMatchesDirectSum) {
  for (int d : {1, 2}) {
    const auto g = grid(d, 6.0, d == 1 ? 32 : 8, 4);
    const auto w = build_weights(CutoffConfig{0.1}, 3.0, g->domain().alpha, d);
    // counter-propagating components; equal frequencies cancel M in d = 1
    const std::vector<double> k(d, 0.6), mk(d, -0.6);
    const Field u = init_product_state(g, XProfile::gaussian_shifted(1.0, std::vector<double>(d, 0.3), k), 0, 1.0) +
                    init_product_state(g, XProfile::gaussian_shifted(0.7, std::vector<double>(d, -0.5), mk), 1,
                                       complex(0.4, 0.3));
    const double fast = interaction_M(u, w);
    const double slow = interaction_M_direct(u, w);
    EXPECT_NEAR(fast, slow, 1e-10 * std::abs(slow)) << "d=" << d;
    EXPECT_GT(std::abs(slow), 1e-6);
  }
}

TEST(InteractionM, OddUnderConjugation) {
  const auto g = grid(1, 8.0, 64, 4);
  const auto w = build_weights(CutoffConfig{0.1}, 2.0, 5.0, 1);
  const Field u = packet(g, 0.5);
  EXPECT_NEAR(interaction_M(conjugate(u), w), -interaction_M(u, w), 1e-12);
}

TEST(Coercivity, Examples) {
  const auto g = grid(1, 8.0, 128, 8);
  const Field zero = complex(0.0) * packet(g, 0.0);
  EXPECT_TRUE(coercivity_check(zero, {0.0}, 2.0, 0.01).pass);
  const Field small = packet(g, 0.3, 0.5);
  const auto r = coercivity_check(small, {0.0}, 2.0, 0.01);
  EXPECT_TRUE(r.pass);
  EXPECT_GT(r.grad_loc, 0.0);
  const Field big = packet(g, 0.0, 3.0);
  EXPECT_FALSE(coercivity_check(big, {0.0}, 2.0, 0.01).pass);
}

TEST(Coercivity, MonotoneInDelta) {
  const auto g = grid(1, 8.0, 128, 8);
  for (double a : {0.5, 1.0, 1.5, 2.0}) {
    const Field u = packet(g, 0.2, a);
    // once it passes, every smaller delta passes too
    bool passed = false;
    for (double delta : {0.9, 0.5, 0.1, 0.01, 0.0}) {
      const bool now = coercivity_check(u, {0.1}, 1.5, delta).pass;
      if (passed) EXPECT_TRUE(now) << "amp " << a << " delta " << delta;
      passed = passed || now;
    }
  }
}

TEST(AveragedLhs, ZeroFieldAndErrors) {
  const auto g = grid(1, 8.0, 64, 4);
  const Field zero = complex(0.0) * packet(g, 0.0);
  AveragedLhsOptions o;
  o.samples = 50;
  const auto r = averaged_lhs({{0.0, zero}, {0.5, zero}}, o);
  EXPECT_EQ(r.estimate, 0.0);
  EXPECT_EQ(r.times, 2);
  o.t_start = 5.0;
  EXPECT_THROW((void)averaged_lhs({{0.0, zero}}, o), InvalidArgument);
  const auto g3 = grid(3, 4.0, 8, 2);
  EXPECT_THROW((void)averaged_lhs({{0.0, complex(0.0) * packet(g3, 0.0)}}, AveragedLhsOptions{}), InvalidArgument);
}

TEST(AveragedLhs, SampleCountConvergence) {
  const auto g = grid(1, 8.0, 128, 4);
  const Field u = packet(g, 0.3);
  AveragedLhsOptions o;
  o.samples = 400;
  const auto a = averaged_lhs({{0.0, u}}, o);
  o.samples = 1600;
  o.seed = 7;
  const auto b = averaged_lhs({{0.0, u}}, o);
  EXPECT_GT(a.estimate, 0.0);
  EXPECT_NEAR(b.std_error / a.std_error, 0.5, 0.15);
  EXPECT_NEAR(a.estimate, b.estimate, 4.0 * a.std_error);
}
