#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "phnls/evolution.hpp"
#include "phnls/functionals.hpp"

using namespace phnls;

namespace {

GridPtr grid1(double L = 16.0, int n_x = 256, int n_max = 16) {
  DomainConfig c;
  c.L = L;
  c.n_x = n_x;
  c.n_max = n_max;
  c.q = 2 * n_max;
  return make_grid(c);
}

Field gaussian(const GridPtr& g, complex amp = 1.0, double sigma = 1.0) {
  return init_product_state(g, XProfile::gaussian(sigma), 0, amp);
}

}  // namespace

TEST(Functionals, GaussianProductState) {
  // q = 64 so the y quadrature of |e_0|^7 is exact to rounding
  const auto g = grid1(16.0, 256, 32);
  const Field f = gaussian(g);
  const double p7 = 2.0 / (7.0 * std::pow(std::numbers::pi, 2.5));
  const double E = 0.75 - p7 / 7.0;
  EXPECT_NEAR(mass(f), 1.0, 1e-12);
  EXPECT_NEAR(energy(f), E, 1e-11);
  EXPECT_NEAR(semivirial_Q(f), 0.5 - 5.0 / 14.0 * p7, 1e-11);
  EXPECT_NEAR(energy(f), 0.747666, 1e-6);
  EXPECT_NEAR(action(f, 1.0), E + 0.5, 1e-11);
  EXPECT_NEAR(action(f, 2.0), E + 1.0, 1e-11);
  const auto r = functional_report(f, 1.0, 0.25);
  EXPECT_EQ(r.time, 0.25);
  EXPECT_NEAR(r.energy, energy(f), 1e-15);
  ASSERT_TRUE(r.lambda_star.has_value());
  const auto j = to_json(r);
  EXPECT_TRUE(j.contains("energy"));
  EXPECT_TRUE(j.contains("lambda_star"));
}

TEST(Functionals, LambdaStarClosedForm) {
  ScalingProfile p{1.0, 1.0, 0.0, 1.0, 5.0, 1};
  ASSERT_TRUE(p.lambda_star());
  EXPECT_NEAR(*p.lambda_star(), 7.84, 1e-12);
  EXPECT_NEAR(p.Q(*p.lambda_star()), 0.0, 1e-10);
  p.potential = 0.0;
  EXPECT_FALSE(p.lambda_star());
  p = {0.0, 1.0, 0.0, 1.0, 5.0, 1};
  EXPECT_FALSE(p.lambda_star());
  // mass-critical exponent: no scaling critical point
  p = {1.0, 1.0, 0.0, 1.0, 4.0, 1};
  EXPECT_FALSE(p.lambda_star());
}

TEST(Functionals, ActionProfileMatchesRescaledFields) {
  const auto g = grid1(24.0, 512, 8);
  const Field f = gaussian(g, 2.0);
  const std::vector<double> lams{0.8, 1.0, 1.2};
  const auto scan = scan_action_profile(f, 1.0, lams);
  for (std::size_t i = 0; i < lams.size(); ++i) {
    const Field s = scale_x(f, lams[i]);
    EXPECT_NEAR(scan[i].action, action(s, 1.0), 1e-9);
    EXPECT_NEAR(scan[i].Q, semivirial_Q(s), 1e-9);
  }
  EXPECT_THROW((void)scan_action_profile(f, 1.0, {0.0}), InvalidArgument);
}

TEST(Functionals, QIsTheScalingDerivative) {
  const auto p = scaling_profile(gaussian(grid1(), 3.0));
  const double h = 1e-5;
  const double dS = (p.action(1.0 + h, 1.0) - p.action(1.0 - h, 1.0)) / (2.0 * h);
  EXPECT_NEAR(dS, p.Q(1.0), 1e-8 * std::abs(p.Q(1.0)) + 1e-9);
}

TEST(Functionals, ActionMaximizedAtLambdaStar) {
  const auto p = scaling_profile(gaussian(grid1(), 2.0));
  const double ls = *p.lambda_star();
  for (double f : {0.5, 0.9, 0.99, 1.01, 1.1, 2.0}) EXPECT_LT(p.action(f * ls, 1.0), p.action(ls, 1.0));
}

TEST(Functionals, CriterionExponents) {
  const auto e = criterion_exponents(1, 5.0);
  EXPECT_NEAR(e.q, 70.0 / 9.0, 1e-14);
  EXPECT_EQ(e.r, 7.0);
  EXPECT_NEAR(e.s_c, 0.1, 1e-15);
  EXPECT_NEAR(e.s, 0.9, 1e-15);
  for (int d : {1, 2}) {
    DomainConfig c;
    c.d = d;
    for (double a = 4.0 / d + 0.1; a < (d == 1 ? 12.0 : 3.95); a += 0.25) {
      const auto x = criterion_exponents(d, a);
      EXPECT_LT(x.s_c, 0.5);
      EXPECT_GT(x.s, 0.5);
      EXPECT_GT(x.q, 0.0);
    }
  }
  EXPECT_THROW((void)criterion_exponents(3, 4.0), InvalidArgument);
  EXPECT_THROW((void)criterion_exponents(0, 4.0), InvalidArgument);
}

TEST(VirialWeight, ShapeConstraints) {
  for (double r = 0.0; r <= 3.0; r += 1e-3) {
    const auto w = virial_weight::derivatives(r);
    EXPECT_GE(w[0], 0.0);
    EXPECT_GE(w[1], -1e-12);
    EXPECT_LE(w[2], 2.0 + 1e-12);
  }
  for (double knot : {1.0, 2.0}) {
    const auto lo = virial_weight::derivatives(knot - 1e-9);
    const auto hi = virial_weight::derivatives(knot + 1e-9);
    // a one-sided step of 1e-9 moves w'''' by |w^(5)| * 1e-9, up to ~3e-6
    for (int k = 0; k < 5; ++k) EXPECT_NEAR(lo[k], hi[k], k < 4 ? 1e-6 : 1e-5) << "knot " << knot << " order " << k;
    EXPECT_EQ(virial_weight::derivatives(knot)[4], 0.0);
  }
  EXPECT_NEAR(virial_weight::derivatives(2.5)[0], 11.0 / 5.0, 0.0);
  const auto s = virial_weight::derivatives(3.0, 2.0);
  EXPECT_NEAR(s[0], 4.0 * virial_weight::derivatives(1.5)[0], 1e-14);
}

TEST(TruncatedVirial, RemainderVanishesWhenMassIsInside) {
  const auto g = grid1();
  const Field f = gaussian(g, 1.0, 0.7);
  EXPECT_LT(std::abs(truncated_virial_remainder(f, 12.0).A_R), 1e-12);
  EXPECT_NEAR(truncated_virial(f, 12.0), semivirial_V(f), 1e-12);
  EXPECT_THROW((void)truncated_virial(f, 13.0), InvalidArgument);
  EXPECT_THROW((void)truncated_virial_remainder(f, -1.0), InvalidArgument);
}

TEST(TruncatedVirial, SecondDerivativeAlongTheFlow) {
  // V_R'' = 8 Q + A_R checked by finite differences of the evolved field
  const auto g = grid1(16.0, 512, 24);
  const Field u0 = gaussian(g, 1.5);
  const double R = 1.0;
  const double h = 0.01;
  const int sub = 10;
  auto flow = [&](double t) {
    Field u = to_spectral(u0);
    for (int i = 0; i < sub; ++i) u = strang_step(u, t / sub);
    return u;
  };
  const double fd = (-truncated_virial(flow(2 * h), R) + 16.0 * truncated_virial(flow(h), R) -
                     30.0 * truncated_virial(u0, R) + 16.0 * truncated_virial(flow(-h), R) -
                     truncated_virial(flow(-2 * h), R)) /
                    (12.0 * h * h);
  const auto rem = truncated_virial_remainder(u0, R);
  const double rhs = 8.0 * semivirial_Q(u0) + rem.A_R;
  EXPECT_GT(std::abs(rem.A_R), 0.05 * std::abs(rhs));
  EXPECT_NEAR(fd, rhs, 1e-4 * (std::abs(8.0 * semivirial_Q(u0)) + std::abs(rem.A_R)));
}
