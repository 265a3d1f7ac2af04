#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "phnls/field.hpp"
#include "phnls/snapshot.hpp"

using namespace phnls;

namespace {

DomainConfig dom(int d, double L, int n_x, int n_max) {
  DomainConfig c;
  c.d = d;
  c.L = L;
  c.n_x = n_x;
  c.n_max = n_max;
  c.q = 2 * n_max;
  return c;
}

Field gaussian(const GridPtr& g, int n = 0, complex amp = 1.0, double sigma = 1.0) {
  return init_product_state(g, XProfile::gaussian(sigma), n, amp);
}

Field random_smooth(const GridPtr& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Field f = gaussian(g, 0, 0.0);
  for (int t = 0; t < 3; ++t) {
    std::vector<double> x0(g->d()), xi(g->d());
    for (int a = 0; a < g->d(); ++a) {
      x0[a] = 2.0 * u(rng);
      xi[a] = u(rng);
    }
    f = f + init_product_state(g, XProfile::gaussian_shifted(0.8 + 0.3 * u(rng), x0, xi), t,
                               complex(u(rng), u(rng)));
  }
  return f;
}

double rel_diff(const Field& a, const Field& b) {
  return std::sqrt(mass_l2_sq(a - b) / mass_l2_sq(b));
}

}  // namespace

TEST(Field, ProductStateNorms) {
  // n_max = 32 (q = 64) resolves |e_0|^7 at the y nodes to rounding
  const auto g = make_grid(dom(1, 16.0, 256, 32));
  const auto nb = norms(gaussian(g), {7.0});
  EXPECT_NEAR(nb.l2, 1.0, 1e-12);
  EXPECT_NEAR(nb.grad_x_sq, 0.5, 1e-12);
  EXPECT_NEAR(nb.dy_sq, 0.5, 1e-12);
  EXPECT_NEAR(nb.y_weight_sq, 0.5, 1e-12);
  EXPECT_NEAR(nb.sigma_sq, 2.5, 1e-12);
  const double want = 2.0 / (7.0 * std::pow(std::numbers::pi, 2.5));
  EXPECT_NEAR(std::pow(nb.lp.at(7.0), 7.0), want, 1e-12);
  EXPECT_NEAR(want, 0.0163327, 1e-7);
}

TEST(Field, ProductStateNormsTwoD) {
  const auto g = make_grid(dom(2, 12.0, 64, 8));
  const auto nb = norms(gaussian(g));
  EXPECT_NEAR(nb.l2, 1.0, 1e-12);
  EXPECT_NEAR(nb.grad_x_sq, 1.0, 1e-12);
}

TEST(Field, ExcitedModeEnergies) {
  // e_3: ||y e_n||^2 = ||e_n'||^2 = n + 1/2
  const auto g = make_grid(dom(1, 16.0, 128, 16));
  const auto nb = norms(gaussian(g, 3));
  EXPECT_NEAR(nb.dy_sq, 3.5, 1e-11);
  EXPECT_NEAR(nb.y_weight_sq, 3.5, 1e-11);
}

TEST(Field, RepresentationRoundTrip) {
  const auto g = make_grid(dom(1, 16.0, 256, 16));
  const Field f = random_smooth(g, 1);
  EXPECT_LT(rel_diff(to_physical(to_spectral(f)), f), 1e-13);
  const Field mixed = to_representation(f, XSpace::fourier, YSpace::nodes);
  EXPECT_LT(rel_diff(to_physical(mixed), f), 1e-13);
}

TEST(Field, NormsIndependentOfRepresentation) {
  const auto g = make_grid(dom(1, 16.0, 256, 16));
  const Field f = random_smooth(g, 2);
  const auto a = norms(f, {7.0});
  const auto b = norms(to_spectral(f), {7.0});
  EXPECT_NEAR(a.l2, b.l2, 1e-13);
  EXPECT_NEAR(a.grad_x_sq, b.grad_x_sq, 1e-12 * a.grad_x_sq);
  EXPECT_NEAR(a.lp.at(7.0), b.lp.at(7.0), 1e-12);
  EXPECT_NEAR(aniso_norm(f, 7.0, 0.3), aniso_norm(to_spectral(f), 7.0, 0.3), 1e-12);
}

TEST(Field, PhysicalAndSpectralParseval) {
  const auto g = make_grid(dom(2, 10.0, 32, 8));
  const Field f = random_smooth(g, 3);
  const Field s = to_spectral(f);
  double spec = 0.0;
  for (const auto& v : s.data()) spec += std::norm(v);
  EXPECT_NEAR(spec * g->cell() / mass_l2_sq(f), 1.0, 1e-12);
}

TEST(Field, AnisoNormExamples) {
  const auto g = make_grid(dom(1, 16.0, 256, 16));
  const Field f = gaussian(g);
  // ||e_0||_{H^s} = 1, so the norm reduces to ||g||_{L^p}
  const double l7 = std::pow(std::pow(std::numbers::pi, -1.75) * std::sqrt(2.0 * std::numbers::pi / 7.0), 1.0 / 7.0);
  EXPECT_NEAR(aniso_norm(f, 7.0, 0.0), l7, 1e-12);
  EXPECT_NEAR(aniso_norm(f, 7.0, 0.3), l7, 1e-12);
  EXPECT_NEAR(aniso_norm(f, 2.0, 0.0), 1.0, 1e-12);
  // e_1 picks up 3^{s/2}
  EXPECT_NEAR(aniso_norm(gaussian(g, 1), 7.0, 0.3), std::pow(3.0, 0.15) * l7, 1e-12);
  EXPECT_NEAR(aniso_norm(f, INFINITY), std::pow(std::numbers::pi, -0.25), 1e-12);
  EXPECT_THROW((void)aniso_norm(f, 0.5), InvalidArgument);
}

TEST(Field, ScaleXIdentityAndLaws) {
  const auto g = make_grid(dom(1, 24.0, 512, 8));
  const Field f = random_smooth(g, 4);
  EXPECT_EQ(rel_diff(scale_x(f, 1.0), f), 0.0);
  for (double lam : {0.7, 1.3}) {
    const Field s = scale_x(f, lam);
    const auto a = norms(f, {7.0});
    const auto b = norms(s, {7.0});
    EXPECT_NEAR(b.l2, a.l2, 1e-10);
    EXPECT_NEAR(b.grad_x_sq / a.grad_x_sq, lam * lam, 1e-9);
    EXPECT_NEAR(b.dy_sq, a.dy_sq, 1e-9);
    EXPECT_NEAR(std::pow(b.lp.at(7.0) / a.lp.at(7.0), 7.0), std::pow(lam, 2.5), 1e-9);
  }
  EXPECT_LT(rel_diff(scale_x(scale_x(f, 1.25), 0.8), f), 1e-10);
}

TEST(Field, ScaleXRefusesToLoseMass) {
  const auto g = make_grid(dom(1, 8.0, 128, 8));
  const Field f = gaussian(g, 0, 1.0, 1.5);
  EXPECT_THROW((void)scale_x(f, 0.3), ResolutionError);
  EXPECT_THROW((void)scale_x(f, 0.0), InvalidArgument);
}

TEST(Field, OperatorIdentity) {
  // ||A_1(t) u||^2 + ||A_2(t) u||^2 = ||y u||^2 + ||d_y u||^2 for every t
  const auto g = make_grid(dom(1, 16.0, 128, 24));
  const Field f = random_smooth(g, 5);
  const auto nb = norms(f);
  for (double t : {0.0, 0.4, 1.3, 3.0}) {
    const auto a1 = apply_Aj(f, t, 1);
    const auto a2 = apply_Aj(f, t, 2);
    const double lhs = mass_l2_sq(a1.field) + a1.leakage + mass_l2_sq(a2.field) + a2.leakage;
    EXPECT_NEAR(lhs / (nb.y_weight_sq + nb.dy_sq), 1.0, 1e-10) << "t=" << t;
  }
  EXPECT_THROW((void)apply_Aj(f, 0.0, 3), InvalidArgument);
}

TEST(Field, BoundaryMass) {
  const auto g = make_grid(dom(1, 16.0, 256, 8));
  EXPECT_LT(boundary_mass(gaussian(g)), 1e-40);
  const Field far = init_product_state(g, XProfile::gaussian_shifted(0.5, {15.0}, {0.0}), 0, 1.0);
  EXPECT_GT(boundary_mass(far), 0.5);
}

TEST(Field, PartialXOfGaussian) {
  const auto g = make_grid(dom(1, 16.0, 256, 8));
  const Field f = to_physical(gaussian(g));
  const Field df = partial_x(f, 0);
  double err = 0.0;
  for (std::size_t p = 0; p < g->points(); ++p) err = std::max(err, std::abs(df.at(p, 0) + g->coord(p, 0) * f.at(p, 0)));
  EXPECT_LT(err, 1e-12);
}

TEST(Field, ConstructorErrors) {
  auto bad = dom(1, 16.0, 100, 8);
  EXPECT_THROW(make_grid(bad), InvalidArgument);
  bad = dom(1, 16.0, 128, 8);
  bad.q = 15;
  EXPECT_THROW(make_grid(bad), InvalidArgument);
  const auto g = make_grid(dom(1, 4.0, 64, 8));
  EXPECT_THROW((void)init_product_state(g, XProfile::gaussian(1.5), 0, 1.0), ResolutionError);
  EXPECT_THROW((void)init_product_state(g, XProfile::gaussian(0.5), 8, 1.0), InvalidArgument);
}

TEST(Snapshot, BitExactRoundTrip) {
  const auto g = make_grid(dom(2, 8.0, 16, 4));
  for (const Field& f : {random_smooth(g, 6), to_spectral(random_smooth(g, 7))}) {
    const auto buf = snapshot::encode(f);
    const Field back = snapshot::decode(buf);
    EXPECT_EQ(back.domain(), f.domain());
    EXPECT_EQ(back.x_space(), f.x_space());
    EXPECT_EQ(back.y_space(), f.y_space());
    ASSERT_EQ(back.data().size(), f.data().size());
    for (std::size_t i = 0; i < f.data().size(); ++i) EXPECT_EQ(back.data()[i], f.data()[i]);
    EXPECT_EQ(snapshot::encode(back), buf);
  }
}

TEST(Snapshot, FileRoundTripAndErrors) {
  const auto g = make_grid(dom(1, 8.0, 32, 4));
  const Field f = random_smooth(g, 8);
  const auto path = std::filesystem::temp_directory_path() / "phnls_test_snapshot.phnl";
  snapshot::save(f, path);
  const Field back = snapshot::load(path, g);
  EXPECT_EQ(&back.grid(), g.get());
  EXPECT_EQ(snapshot::encode(back), snapshot::encode(f));

  auto buf = snapshot::encode(f);
  buf[0] = 'X';
  EXPECT_THROW((void)snapshot::decode(buf), FormatError);
  buf = snapshot::encode(f);
  buf.resize(buf.size() - 3);
  EXPECT_THROW((void)snapshot::decode(buf), FormatError);
  const auto other = make_grid(dom(1, 8.0, 64, 4));
  EXPECT_EQ(snapshot::load(path, other).domain(), f.domain());
  EXPECT_THROW((void)snapshot::load(path.string() + ".missing"), FormatError);
  std::filesystem::remove(path);
}
