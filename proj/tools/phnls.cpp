// phnls: command-line front end for ground states, dichotomy runs and the
// verify suites.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "phnls/acceptance.hpp"
#include "phnls/config.hpp"
#include "phnls/detectors.hpp"
#include "phnls/ground_state.hpp"
#include "phnls/harness.hpp"
#include "phnls/snapshot.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace phnls;

namespace {

struct FieldRef {
  std::string path;
  double scale = 1.0;
};

/// "PATH" or "PATH:scale=c".
FieldRef parse_field_ref(const std::string& s) {
  FieldRef r{s, 1.0};
  const auto colon = s.rfind(':');
  if (colon != std::string::npos && s.compare(colon + 1, 6, "scale=") == 0) {
    r.path = s.substr(0, colon);
    const std::string v = s.substr(colon + 7);
    std::size_t pos = 0;
    try {
      r.scale = std::stod(v, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != v.size()) throw InvalidArgument("bad scale in '" + s + "'");
  }
  return r;
}

fs::path certificate_path(const std::string& gs) { return gs + ".json"; }

/// Ground state stored by `ground-state`; m_omega from the certificate when present.
GroundStateResult load_ground_state(const std::string& path, const GridPtr& grid) {
  GroundStateResult g;
  g.field = snapshot::load(path, grid);
  g.m_omega = action(g.field, g.field.domain().omega);
  std::ifstream is(certificate_path(path));
  if (is) {
    const json j = json::parse(is);
    g.m_omega = j.at("m_omega").get<double>();
    g.elliptic_residual = j.value("elliptic_residual", 0.0);
    g.Q_value = j.value("Q_value", 0.0);
    g.lambda_star_value = j.value("lambda_star_value", 0.0);
  }
  return g;
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

int cmd_ground_state(const std::string& config, const std::string& out, const std::string& method) {
  ExperimentConfig cfg = load_config(config);
  if (method == "scaling_descent") cfg.gs_method = GroundStateMethod::scaling_descent;
  else if (method == "petviashvili") cfg.gs_method = GroundStateMethod::petviashvili;
  else if (!method.empty()) throw InvalidArgument("--method must be petviashvili or scaling_descent");
  const auto grid = make_grid(cfg.domain);
  const auto gs = harness::solve_ground_state(cfg, grid);
  if (const auto parent = fs::path(out).parent_path(); !parent.empty()) fs::create_directories(parent);
  snapshot::save(gs.field, out);
  json j = to_json(gs);
  j["version"] = kVersion;
  j["config_hash"] = config_hash(cfg);
  snapshot::write_atomic(certificate_path(out), j.dump(2) + "\n");
  print_json(j);
  return 0;
}

int cmd_evolve(const std::string& config, const std::string& init, const std::string& out, bool progress) {
  ExperimentConfig cfg = load_config(config);
  harness::RunOptions opts;
  opts.progress = progress;
  if (!init.empty()) {
    const auto ref = parse_field_ref(init);
    const auto grid = make_grid(cfg.domain);
    auto gs = load_ground_state(ref.path, grid);
    if (!(gs.field.domain() == cfg.domain)) throw InvalidArgument("ground state domain differs from the config domain");
    cfg.initial.kind = InitialSpec::Kind::file;
    cfg.initial.path = ref.path;
    cfg.initial.scale = ref.scale;
    opts.initial = complex(ref.scale) * gs.field;
    opts.ground_state = std::move(gs);
  }
  const auto res = harness::run(cfg, out, opts);
  json j = harness::to_json(res.report);
  print_json(j);
  return res.report.assessment.mismatch ? 3 : 0;
}

int cmd_classify(const std::string& config, const std::string& init, const std::string& gs_path) {
  const ExperimentConfig cfg = load_config(config);
  const auto grid = make_grid(cfg.domain);
  const auto ref = parse_field_ref(init);
  const Field u = complex(ref.scale) * snapshot::load(ref.path, grid);
  if (!(u.domain() == cfg.domain)) throw InvalidArgument("field domain differs from the config domain");
  const double m = gs_path.empty() ? harness::solve_ground_state(cfg, grid).m_omega
                                   : load_ground_state(gs_path, grid).m_omega;
  const auto prof = scaling_profile(u);
  json j;
  j["classification"] = to_string(classify(u, cfg.domain.omega, m));
  j["action_omega"] = prof.action(1.0, cfg.domain.omega);
  j["Q"] = prof.Q(1.0);
  j["mass"] = prof.mass;
  j["m_omega"] = m;
  j["version"] = kVersion;
  j["config_hash"] = config_hash(cfg);
  print_json(j);
  return 0;
}

int cmd_morawetz(const std::string& config, const std::string& dir) {
  const ExperimentConfig cfg = load_config(config);
  const auto [rows, summary] = harness::morawetz_from_run(cfg, dir);
  const auto prov = harness::provenance(cfg);
  snapshot::write_atomic(fs::path(dir) / "morawetz.csv", harness::morawetz_csv(rows, prov));
  json j = harness::to_json(summary);
  j["version"] = kVersion;
  j["config_hash"] = config_hash(cfg);
  snapshot::write_atomic(fs::path(dir) / "morawetz.json", j.dump(2) + "\n");
  print_json(j);
  return 0;
}

int cmd_verify(const std::string& suite, const std::string& work, const std::string& json_out) {
  const fs::path dir = work.empty() ? fs::temp_directory_path() / "phnls-verify" : fs::path(work);
  fs::create_directories(dir);
  const auto results = acceptance::run_suite(suite, dir, [](const acceptance::CriterionResult& r) {
    std::cout << acceptance::format_line(r) << std::endl;
  });
  json table = json::array();
  const acceptance::CriterionResult* first_fail = nullptr;
  for (const auto& r : results) {
    table.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"seconds", r.seconds}, {"detail", r.detail}});
    if (!r.pass && !first_fail) first_fail = &r;
  }
  if (!json_out.empty()) snapshot::write_atomic(json_out, table.dump(2) + "\n");
  if (first_fail) {
    std::cerr << "verify: first failure: " << first_fail->name << ": " << first_fail->detail << "\n";
    return 1;
  }
  return 0;
}

int cmd_criterion(const std::string& dir, const std::vector<double>& window) {
  const ExperimentConfig cfg = harness::load_run_config(dir);
  const auto rows = harness::load_trace(dir);
  const auto ex = criterion_exponents(cfg.domain.d, cfg.domain.alpha);
  const double v = criterion_norm(rows, window[0], window[1], ex.q);
  json j;
  j["t0"] = window[0];
  j["t1"] = window[1];
  j["q"] = ex.q;
  j["r"] = ex.r;
  j["s"] = ex.s;
  j["criterion_norm"] = v;
  print_json(j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fourier-Hermite solver and diagnostics for NLS with partial harmonic confinement"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config, out, init, method, gs, trace, suite = "all", work, json_out;
  std::vector<double> window;
  bool progress = false;

  auto* c_gs = app.add_subcommand("ground-state", "solve for the ground state and write it as a PHNL file");
  c_gs->add_option("--config", config, "experiment config")->required()->check(CLI::ExistingFile);
  c_gs->add_option("--out", out, "output PHNL file; the certificate goes to OUT.json")->required();
  c_gs->add_option("--method", method, "petviashvili or scaling_descent (default: config)");

  auto* c_ev = app.add_subcommand("evolve", "dichotomy run: classify, evolve, detect, persist");
  c_ev->add_option("--config", config, "experiment config")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--init", init, "ground state file, optionally GS:scale=c (default: config initial)");
  c_ev->add_option("--out", out, "run directory")->required();
  c_ev->add_flag("--progress", progress, "print one line per observation");

  auto* c_cl = app.add_subcommand("classify", "threshold classification of a stored field");
  c_cl->add_option("--config", config, "experiment config")->required()->check(CLI::ExistingFile);
  c_cl->add_option("--init", init, "field file, optionally FIELD:scale=c")->required();
  c_cl->add_option("--gs", gs, "stored ground state for m_omega (default: solve)");

  auto* c_mw = app.add_subcommand("morawetz", "Morawetz table and summary from a run's snapshots");
  c_mw->add_option("--config", config, "config with the [morawetz] R, s, delta, eta")->required()->check(CLI::ExistingFile);
  c_mw->add_option("--trace", trace, "run directory")->required()->check(CLI::ExistingDirectory);

  auto* c_vf = app.add_subcommand("verify", "run property suites and acceptance criteria");
  c_vf->add_option("--suite", suite, "suite name")->check(CLI::IsMember(acceptance::suite_names()));
  c_vf->add_option("--work", work, "scratch directory for the dichotomy runs");
  c_vf->add_option("--json", json_out, "write the result table as JSON");

  auto* c_cr = app.add_subcommand("criterion", "windowed scattering-criterion norm of a stored trace");
  c_cr->add_option("--trace", trace, "run directory")->required()->check(CLI::ExistingDirectory);
  c_cr->add_option("--window", window, "T0 T1")->required()->expected(2);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*c_gs) return cmd_ground_state(config, out, method);
    if (*c_ev) return cmd_evolve(config, init, out, progress);
    if (*c_cl) return cmd_classify(config, init, gs);
    if (*c_mw) return cmd_morawetz(config, trace);
    if (*c_vf) return cmd_verify(suite, work, json_out);
    if (*c_cr) return cmd_criterion(trace, window);
  } catch (const std::exception& e) {
    std::cerr << "phnls: error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
