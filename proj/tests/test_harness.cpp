#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "phnls/harness.hpp"

using namespace phnls;
namespace fs = std::filesystem;

namespace {

// wide enough that sub-threshold runs stay off the boundary until t = 0.5
DomainConfig small_domain() {
  DomainConfig c;
  c.L = 32.0;
  c.n_x = 1024;
  c.n_max = 32;
  c.q = 64;
  return c;
}

const GroundStateResult& ground_state() {
  static const GroundStateResult gs = solve_petviashvili(make_grid(small_domain()), 1.0);
  return gs;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("phnls_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(ScatterProxy, FiresForDispersingSmallData) {
  DomainConfig c;
  c.L = 64.0;
  c.n_x = 1024;
  c.n_max = 8;
  c.q = 16;
  const auto g = make_grid(c);
  const Field u0 = init_product_state(g, XProfile::gaussian(1.0), 0, 0.8);
  StepConfig sc;
  sc.dt = 0.01;
  sc.observe_every = 0.25;
  sc.snapshot_times = dyadic_times(8.0, 3);
  const auto tr = evolve(u0, 8.0, sc, 1.0);
  ASSERT_EQ(tr.verdict, Verdict::completed);
  const auto ev = detect_scatter_proxy(tr.rows, tr.snapshots, ScatterProxyConfig{});
  EXPECT_TRUE(ev.potential_decayed) << ev.potential_decay_ratio;
  EXPECT_TRUE(ev.q_ratio_near_one) << ev.q_ratio_final;
  EXPECT_TRUE(ev.cauchy_decreasing);
  EXPECT_TRUE(ev.boundary_clean);
  EXPECT_TRUE(ev.fired);
  EXPECT_FALSE(detect_blowup(tr.rows, 100.0).fired);
}

TEST(ScatterProxy, StandingWaveDoesNotFire) {
  const auto& gs = ground_state();
  StepConfig sc;
  sc.dt = 1e-3;
  sc.observe_every = 0.05;
  sc.snapshot_times = dyadic_times(0.2, 2);
  const auto tr = evolve(gs.field, 0.2, sc, 1.0);
  const auto ev = detect_scatter_proxy(tr.rows, tr.snapshots, ScatterProxyConfig{});
  EXPECT_FALSE(ev.potential_decayed);
  EXPECT_FALSE(ev.q_ratio_near_one);
  EXPECT_FALSE(ev.fired);
}

TEST(Assess, MismatchRules) {
  ExperimentConfig cfg;
  std::vector<TraceRow> rows(12);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].t = 0.1 * i;
    rows[i].grad_x_sq = std::pow(1.25 - rows[i].t, -3.0);
    rows[i].lp_alpha_plus_2 = 1.0;
  }
  harness::RunFacts f;
  f.verdict = Verdict::blowup_detected;
  f.classification_in = ThresholdClass::K_minus;
  auto a = harness::assess(cfg, rows, {}, f);
  EXPECT_EQ(a.outcome, harness::Outcome::blowup);
  EXPECT_FALSE(a.mismatch);
  f.classification_in = ThresholdClass::above_threshold;
  EXPECT_FALSE(harness::assess(cfg, rows, {}, f).mismatch);
  f.classification_in = ThresholdClass::K_plus;
  a = harness::assess(cfg, rows, {}, f);
  EXPECT_TRUE(a.mismatch);
  EXPECT_NE(a.mismatch_reason.find("K_plus"), std::string::npos);

  for (auto& r : rows) r.grad_x_sq = 1.0;
  f.verdict = Verdict::completed;
  EXPECT_EQ(harness::assess(cfg, rows, {}, f).outcome, harness::Outcome::inconclusive);
}

TEST(Assess, FactsJsonRoundTrip) {
  harness::RunFacts f{ThresholdClass::K_minus, 3.5, Verdict::blowup_detected, true, 0.25};
  const auto back = harness::facts_from_json(harness::to_json(f));
  EXPECT_EQ(back.classification_in, f.classification_in);
  EXPECT_EQ(back.m_omega, f.m_omega);
  EXPECT_EQ(back.verdict, f.verdict);
  EXPECT_EQ(back.dt_underflow, true);
  ASSERT_TRUE(back.stop_time);
  EXPECT_EQ(*back.stop_time, 0.25);
  auto bad = harness::to_json(f);
  bad["verdict"] = "exploded";
  EXPECT_THROW((void)harness::facts_from_json(bad), FormatError);
}

TEST(Harness, CauchyTimes) {
  ExperimentConfig cfg;
  cfg.t_max = 8.0;
  EXPECT_EQ(harness::cauchy_times(cfg), dyadic_times(8.0, 3));
  cfg.detectors.cauchy_t_end = 4.0;
  EXPECT_EQ(harness::cauchy_times(cfg), dyadic_times(4.0, 3));
  cfg.t_max = 0.0;
  EXPECT_TRUE(harness::cauchy_times(cfg).empty());
}

TEST(Harness, RunPersistsAndRecomputes) {
  ExperimentConfig cfg;
  cfg.domain = small_domain();
  cfg.initial.scale = 0.8;
  cfg.t_max = 0.5;
  cfg.step.dt = 5e-3;
  cfg.step.observe_every = 0.05;
  cfg.morawetz.enabled = true;
  cfg.morawetz.R = {2.0};
  cfg.morawetz.s = {-1.0, 0.0, 1.0};
  cfg.morawetz.every = 0.25;
  const auto dir = scratch("run");
  harness::RunOptions opts;
  opts.ground_state = ground_state();
  const auto res = harness::run(cfg, dir, opts);

  EXPECT_EQ(res.report.classification_in, ThresholdClass::K_plus);
  EXPECT_EQ(res.trace.verdict, Verdict::completed);
  EXPECT_FALSE(res.report.assessment.mismatch);
  for (const char* f : {"config.toml", "ground_state.json", "trace.csv", "criterion.csv", "run.json",
                        "snapshots.csv", "report.json", "morawetz.csv", "morawetz.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;

  const auto rec = harness::recompute_evidence(dir);
  EXPECT_TRUE(rec.identical) << rec.stored << "\n" << rec.recomputed;

  const auto rows = harness::load_trace(dir);
  ASSERT_EQ(rows.size(), res.trace.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].energy, res.trace.rows[i].energy);
    EXPECT_EQ(rows[i].criterion_norm, res.trace.rows[i].criterion_norm);
  }
  EXPECT_EQ(to_text(harness::load_run_config(dir)), to_text(cfg));

  const auto snaps = harness::load_snapshots(dir);
  ASSERT_EQ(snaps.size(), harness::cauchy_times(cfg).size());
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    EXPECT_EQ(snaps[i].t, res.trace.snapshots[i].t);
    EXPECT_LT(std::sqrt(mass(snaps[i].field - res.trace.snapshots[i].field)), 1e-13);
  }

  // probe rows at t = 0.25 and 0.5 reappear when recomputed from the snapshots
  const auto [mrows, summary] = harness::morawetz_from_run(cfg, dir);
  int matched = 0;
  for (const auto& a : res.morawetz_rows)
    for (const auto& b : mrows)
      if (a.t == b.t && a.s == b.s && a.R == b.R) {
        EXPECT_NEAR(a.M, b.M, 1e-12 * (1.0 + std::abs(a.M)));
        EXPECT_NEAR(a.Q_loc, b.Q_loc, 1e-12 * (1.0 + std::abs(a.Q_loc)));
        EXPECT_EQ(a.pass, b.pass);
        ++matched;
      }
  EXPECT_EQ(matched, 6);
  EXPECT_EQ(summary.samples, static_cast<int>(mrows.size()));

  std::ifstream is(dir / "trace.csv");
  std::string first;
  std::getline(is, first);
  EXPECT_EQ(first, "# " + harness::provenance(cfg));
  fs::remove_all(dir);
}

TEST(Harness, TamperedReportIsDetected) {
  ExperimentConfig cfg;
  cfg.domain = small_domain();
  cfg.initial.scale = 0.5;
  cfg.t_max = 0.2;
  cfg.step.observe_every = 0.05;
  const auto dir = scratch("tamper");
  harness::RunOptions opts;
  opts.ground_state = ground_state();
  (void)harness::run(cfg, dir, opts);
  auto j = nlohmann::ordered_json::parse(std::ifstream(dir / "report.json"));
  j["outcome"] = "scatter_proxy";
  std::ofstream(dir / "report.json") << j.dump(2);
  EXPECT_FALSE(harness::recompute_evidence(dir).identical);
  fs::remove_all(dir);
}

TEST(Harness, InitialFieldKinds) {
  ExperimentConfig cfg;
  cfg.domain = small_domain();
  const auto& gs = ground_state();
  cfg.initial.scale = 0.7;
  EXPECT_NEAR(mass(harness::initial_field(cfg, gs.field.grid_ptr(), gs)), 0.49 * mass(gs.field), 1e-12);
  cfg.initial.kind = InitialSpec::Kind::product_state;
  cfg.initial.scale = 1.0;
  cfg.initial.n = 2;
  EXPECT_NEAR(mass(harness::initial_field(cfg, gs.field.grid_ptr(), gs)), 1.0, 1e-12);
  const auto path = scratch("init.phnl");
  snapshot::save(gs.field, path);
  cfg.initial.kind = InitialSpec::Kind::file;
  cfg.initial.path = path.string();
  cfg.initial.scale = 2.0;
  EXPECT_NEAR(mass(harness::initial_field(cfg, gs.field.grid_ptr(), gs)), 4.0 * mass(gs.field), 1e-10);
  fs::remove(path);
}

// Below threshold the sign of Q persists, the action is conserved (up to the
// projection loss) and
// sup_t ||u||_Sigma^2 stays within a fixed multiple of m_omega.
TEST(Invariants, KPlusPersistenceAndSigmaBound) {
  const auto& gs = ground_state();
  std::vector<double> ratios;
  for (double c : {0.8, 0.9, 0.95}) {
    const Field u0 = complex(c) * gs.field;
    ASSERT_EQ(classify(u0, 1.0, gs.m_omega), ThresholdClass::K_plus);
    StepConfig sc;
    sc.dt = 1e-3;
    sc.cfl_c = 0.02;
    sc.observe_every = 0.05;
    const auto tr = evolve(u0, 0.5, sc, 1.0);
    ASSERT_EQ(tr.verdict, Verdict::completed);
    double sup_sigma = 0.0;
    // Hermite projection loss of the nonlinear phase: O(dt) accumulated, about
    // 4e-5 of the action at dt = 1e-3 and n_max = 32 for these profiles
    for (const auto& r : tr.rows) {
      EXPECT_GE(r.Q, -1e-6 * r.grad_x_sq) << "c=" << c << " t=" << r.t;
      EXPECT_LT(std::abs(r.action_omega - tr.rows[0].action_omega), 1e-4 * std::abs(tr.rows[0].action_omega))
          << "c=" << c << " t=" << r.t;
      sup_sigma = std::max(sup_sigma, r.sigma_sq);
    }
    ratios.push_back(sup_sigma / gs.m_omega);
  }
  double mean = 0.0;
  for (double r : ratios) mean += r / ratios.size();
  for (double r : ratios) EXPECT_LT(std::abs(r / mean - 1.0), 0.2);
}
