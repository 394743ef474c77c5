#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ddhinf/audit.hpp"
#include "ddhinf/config.hpp"
#include "ddhinf/datagen.hpp"
#include "ddhinf/errors.hpp"
#include "ddhinf/runner.hpp"
#include "ddhinf/synth.hpp"

namespace fs = std::filesystem;
using namespace ddhinf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

SolverSettings settings_from_env() {
  SolverSettings s;
  if (const char* tol = std::getenv("DDHINF_SOLVER_TOL")) {
    char* end = nullptr;
    const double v = std::strtod(tol, &end);
    if (end == tol || !(v > 0.0) || !std::isfinite(v))
      throw InputError("DDHINF_SOLVER_TOL must be a positive number");
    s.tol_feas = v;
    s.tol_gap = v;
  }
  return s;
}

ScenarioConfig load_config(const std::string& path, std::optional<std::uint64_t> seed,
                           std::optional<double> headroom, const std::string& out_dir) {
  ScenarioConfig cfg =
      path.empty() ? ScenarioConfig::example44_defaults() : ScenarioConfig::load(path);
  if (seed) {
    cfg.data.seed = *seed;
    cfg.simulation.seed = *seed * 1000 + 17;
  }
  if (headroom) cfg.simulation.headroom = *headroom;
  if (!out_dir.empty()) cfg.outputs.dir = out_dir;
  cfg.validate();
  return cfg;
}

void print_run_table(const ComparisonReport& report) {
  std::printf("%-16s %9s %9s %6s %6s %6s %6s\n", "controller", "gamma0", "gammaT", "dissip",
              "invar", "constr", "conv");
  for (const auto& run : report.runs) {
    std::printf("%-16s %9.4f %9.4f %6s %6s %6s %6s\n", run.name.c_str(), run.gamma0,
                run.gamma_final, run.dissipation.ok ? "ok" : "FAIL",
                run.invariance ? (run.invariance->ok ? "ok" : "FAIL") : "-",
                run.constraints.ok ? "ok" : (run.constraints_claimed ? "FAIL" : "viol"),
                run.convergence.ok ? "ok" : "FAIL");
  }
  std::printf("dataset %s  disturbance %s  total %.2fs\n", report.dataset_hash.c_str(),
              report.disturbance_hash.c_str(), report.total_time);
}

int cmd_excite(const ScenarioConfig& cfg) {
  DataSet data = excite(cfg.plant, cfg.data.J, cfg.data.input_bound, cfg.data.eps, cfg.data.seed,
                        cfg.data.state_bound);
  const NoiseModel nm = noise_model_pointwise(cfg.data.eps, data.J, cfg.plant.n());
  const ConsistencyForm form = consistency_form(data, nm);
  const fs::path dir = fs::path(cfg.outputs.dir) / "dataset";
  data.write_csv_dir(dir.string(), cfg.data.eps, cfg.data.seed);
  const double interior = slater_margin(form);
  std::printf("wrote %s (J=%d, eps=%g, seed=%llu)\n", dir.string().c_str(), (int)data.J,
              cfg.data.eps, (unsigned long long)cfg.data.seed);
  std::printf("model-set interior margin: %.3e (%s)\n", interior,
              interior > 0.0 ? "usable" : "degenerate - collect more data");
  return interior > 0.0 ? kExitOk : kExitError;
}

int cmd_synth(const ScenarioConfig& cfg, const SolverSettings& settings) {
  DataSet data = excite(cfg.plant, cfg.data.J, cfg.data.input_bound, cfg.data.eps, cfg.data.seed,
                        cfg.data.state_bound);
  const NoiseModel nm = noise_model_pointwise(cfg.data.eps, data.J, cfg.plant.n());
  ConsistencyForm form = consistency_form(data, nm);
  SynthesisSpec spec = SynthesisSpec::from_plant(cfg.plant, std::move(form), cfg.simulation.x0,
                                                 cfg.synthesis.sigma0, cfg.synthesis.r0, true);
  if (cfg.synthesis.auto_r0) {
    const auto found = find_feasible_r0(spec, settings);
    if (!found) {
      std::fprintf(stderr, "synthesis infeasible on the whole invariance-level grid\n");
      return kExitInfeasible;
    }
    spec.r0 = found->r0;
    std::printf("auto-selected invariance level r0 = %g\n", spec.r0);
  }
  Program prog = build_static(spec);
  SolverReport rep = solve(prog, settings);
  if (rep.status != SolveStatus::Optimal) {
    std::fprintf(stderr, "synthesis failed (%s): %s\n", to_string(rep.status).c_str(),
                 rep.message.c_str());
    return kExitInfeasible;
  }
  const Controller ctrl = extract_controller(spec, prog, rep);
  fs::create_directories(cfg.outputs.dir);
  const fs::path out = fs::path(cfg.outputs.dir) / "controller.json";
  std::ofstream os(out);
  os << controller_to_json(ctrl);
  std::printf("gamma = %.6f (eta = %.8f), solve %.1f ms, worst margin %.2e\n", ctrl.gamma,
              ctrl.eta, 1000.0 * rep.solve_time, rep.worst_residual);
  std::printf("wrote %s\n", out.string().c_str());
  return kExitOk;
}

int cmd_run(const ScenarioConfig& cfg, const SolverSettings& settings) {
  ComparisonReport report = run_scenario(cfg, settings);
  print_run_table(report);
  std::printf("artifacts: %s\n", cfg.outputs.dir.c_str());
  return report.ok ? kExitOk : kExitError;
}

int cmd_audit(const ScenarioConfig& cfg, const std::string& dir) {
  const fs::path root(dir.empty() ? cfg.outputs.dir : dir);
  if (!fs::exists(root / "comparison.json"))
    throw InputError("no comparison.json under " + root.string() + "; run a scenario first");
  bool all_ok = true;
  int audited = 0;
  for (const auto& name : cfg.controllers) {
    const fs::path run_dir = root / name;
    if (!fs::exists(run_dir / "trajectory.csv")) continue;
    std::ifstream ts(run_dir / "trajectory.csv");
    TrajectoryLog log = TrajectoryLog::read_csv(ts, cfg.plant.n(), cfg.plant.m(), cfg.plant.p1(),
                                                cfg.plant.p2());
    log.sigma0 = cfg.synthesis.sigma0;
    std::ifstream cs(run_dir / "controller.json");
    std::ostringstream cbuf;
    cbuf << cs.rdbuf();
    const Controller ctrl = controller_from_json(cbuf.str());

    double gamma_bar = ctrl.gamma;
    {
      std::ifstream as(run_dir / "audit.json");
      if (as) {
        std::ostringstream abuf;
        abuf << as.rdbuf();
        const auto stored = nlohmann::json::parse(abuf.str());
        if (stored.contains("gamma_bar")) gamma_bar = stored["gamma_bar"].get<double>();
      }
    }
    const DissipationReport diss = dissipation_report(log, gamma_bar, ctrl.P);
    const ConstraintReport constr = constraint_report(log, cfg.plant.y2max);
    const ConvergenceReport conv =
        convergence_report(log, 1e-3, std::min(10, (int)log.steps.size()));
    const bool constrained = name != "baseline";
    bool ok = diss.ok && conv.ok && (!constrained || constr.ok);
    std::printf("%-16s dissipation %-4s constraints %-4s convergence %-4s", name.c_str(),
                diss.ok ? "ok" : "FAIL", constr.ok ? "ok" : (constrained ? "FAIL" : "viol"),
                conv.ok ? "ok" : "FAIL");
    if (name == "static") {
      const InvarianceReport inv = invariance_report(log, ctrl.P, cfg.synthesis.r0, ctrl.gamma);
      ok = ok && inv.ok;
      std::printf(" invariance %-4s", inv.ok ? "ok" : "FAIL");
    }
    std::printf("\n");
    all_ok = all_ok && ok;
    ++audited;
  }
  if (audited == 0) throw InputError("no trajectories found under " + root.string());
  return all_ok ? kExitOk : kExitError;
}

int cmd_reproduce(const std::string& out_dir, const SolverSettings& settings) {
  ComparisonReport report = reproduce_example(out_dir, settings);
  print_run_table(report);
  bool ok = true;
  for (const auto& claim : report.claims) {
    std::printf("[%s] %s%s%s\n", claim.pass ? "PASS" : "FAIL", claim.name.c_str(),
                claim.detail.empty() ? "" : ": ", claim.detail.c_str());
    ok = ok && claim.pass;
  }
  return ok ? kExitOk : kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"data-driven H-infinity synthesis toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> headroom;
  app.add_option("--config", config_path, "scenario config JSON (defaults to the built-in example)")
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides config outputs.dir)");
  app.add_option("--seed", seed, "override data seed (simulation seed derives from it)");
  app.add_option("--headroom", headroom, "energy-forecast headroom h (default 1.0)");

  auto* excite_cmd = app.add_subcommand("excite", "collect a noisy dataset and report its quality");
  auto* synth_cmd = app.add_subcommand("synth", "solve the constrained gain synthesis once");
  auto* run_cmd = app.add_subcommand("run", "run the configured closed-loop scenario");
  auto* audit_cmd = app.add_subcommand("audit", "re-audit stored trajectories");
  auto* repro_cmd =
      app.add_subcommand("reproduce-example", "three-way benchmark comparison with claim checks");

  CLI11_PARSE(app, argc, argv);

  try {
    const SolverSettings settings = settings_from_env();
    if (repro_cmd->parsed()) {
      return cmd_reproduce(out_dir.empty() ? "out" : out_dir, settings);
    }
    const ScenarioConfig cfg = load_config(config_path, seed, headroom, out_dir);
    if (excite_cmd->parsed()) return cmd_excite(cfg);
    if (synth_cmd->parsed()) return cmd_synth(cfg, settings);
    if (run_cmd->parsed()) return cmd_run(cfg, settings);
    if (audit_cmd->parsed()) return cmd_audit(cfg, out_dir);
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
