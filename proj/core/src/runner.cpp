#include "ddhinf/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ddhinf/datagen.hpp"
#include "ddhinf/errors.hpp"
#include "ddhinf/rng.hpp"
#include "json_util.hpp"

namespace ddhinf {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string hash_matrices(std::initializer_list<const Matrix*> mats) {
  detail::Fnv1a h;
  for (const Matrix* M : mats) h.update(*M);
  return h.hex();
}

std::string hash_disturbance(const std::vector<Vector>& w) {
  detail::Fnv1a h;
  for (const auto& wt : w) h.update(Matrix(wt));
  return h.hex();
}

int convergence_tail(int T) { return std::min(10, T); }

ControllerRun run_fixed_gain(const std::string& name, const PlantModel& plant,
                             const SynthesisSpec& base, const std::vector<Vector>& w,
                             const ScenarioConfig& cfg, const SolverSettings& settings,
                             bool constrained) {
  ControllerRun run;
  run.name = name;
  run.constraints_claimed = constrained;

  SynthesisSpec spec = base;
  spec.constrained = constrained;
  const auto t0 = Clock::now();
  Program prog = build_static(spec);
  SolverReport rep = solve(prog, settings);
  if (rep.status != SolveStatus::Optimal)
    throw InfeasibleError(name + " synthesis failed (" + to_string(rep.status) +
                          "): " + rep.message);
  run.initial = extract_controller(spec, prog, rep);
  run.synth_time = seconds_since(t0);
  run.feasible = true;
  run.gamma0 = run.gamma_final = run.gamma_bar = run.initial.gamma;

  const Matrix K = run.initial.K;
  Feedback fb = [&K](int, const Vector& x) { return Vector(K * x); };
  run.log = simulate(plant, fb, cfg.simulation.x0, w, cfg.simulation.T);
  run.log.seed = cfg.simulation.seed;
  run.log.controller_id = name;
  run.log.sigma0 = cfg.synthesis.sigma0;

  run.dissipation = dissipation_report(run.log, run.initial.gamma, run.initial.P);
  if (constrained)
    run.invariance =
        invariance_report(run.log, run.initial.P, spec.r0, run.initial.gamma);
  run.constraints = constraint_report(run.log, plant.y2max);
  run.convergence = convergence_report(run.log, 1e-3, convergence_tail(cfg.simulation.T));
  run.mean_step_time = 0.0;
  run.pass = run.dissipation.ok && run.convergence.ok &&
             (!run.invariance || run.invariance->ok) &&
             (!run.constraints_claimed || run.constraints.ok);
  return run;
}

ControllerRun run_moving_horizon(const PlantModel& plant, const SynthesisSpec& base,
                                 const std::vector<Vector>& w, const ScenarioConfig& cfg,
                                 const SolverSettings& settings) {
  ControllerRun run;
  run.name = "moving-horizon";
  run.constraints_claimed = true;

  const int T = cfg.simulation.T;
  const double h = cfg.simulation.headroom;
  std::vector<double> remaining(T + 1, 0.0);
  for (int t = T - 1; t >= 0; --t) remaining[t] = remaining[t + 1] + w[t].squaredNorm();

  const double sigma_start =
      h == 1.0 ? cfg.synthesis.sigma0 : std::max(h * remaining[0], 1e-15);
  LoopState st = init(base, cfg.simulation.x0, sigma_start, base.r0, settings);

  const auto t0 = Clock::now();
  Vector x = cfg.simulation.x0;
  run.log.seed = cfg.simulation.seed;
  run.log.controller_id = run.name;
  run.log.sigma0 = cfg.synthesis.sigma0;
  run.log.steps.reserve(T);
  double eta_prev = -std::numeric_limits<double>::infinity();
  double total_step_time = 0.0;
  for (int t = 0; t < T; ++t) {
    const double delta_t = st.Delta;
    const double sigma_t = st.sigma;
    StepDecision d = mhc_step(st, x);
    total_step_time += d.solve_time;
    run.step_diagnostics.push_back(diagnostics_line(t, d, delta_t, sigma_t));
    if (t == 0) {
      run.initial = st.prev_ctrl;
      run.gamma0 = d.gamma;
    }
    run.gamma_final = d.gamma;
    if (d.eta < eta_prev - 1e-9) run.eta_monotone = false;
    eta_prev = d.eta;
    if (d.source != StepDecision::Source::FreshSolve || d.grid_retuned)
      run.all_steps_feasible = false;

    const Vector u = d.K * x;
    const StepResult s = step(plant, x, u, w[t]);
    TrajectoryRecord rec;
    rec.t = t;
    rec.x = x;
    rec.u = u;
    rec.w = w[t];
    rec.y1 = s.y1;
    rec.y2 = s.y2;
    run.log.steps.push_back(std::move(rec));
    x = s.x_next;

    if (h == 1.0) {
      const SigmaUpdate su = sigma_update(st.sigma, w[t].squaredNorm());
      st.sigma = su.value;
      st.sigma_exhausted = st.sigma_exhausted || su.exhausted;
    } else {
      st.sigma = std::max(h * remaining[t + 1], 1e-15);
    }
  }
  run.synth_time = seconds_since(t0);
  run.mean_step_time = total_step_time / T;
  run.feasible = true;
  run.history = st.history;
  run.gamma_bar = st.gamma_bar;
  run.guarantee_suspended = st.guarantee_suspended;

  run.dissipation = dissipation_report(run.log, run.gamma_bar, run.initial.P);
  run.constraints = constraint_report(run.log, plant.y2max);
  run.convergence = convergence_report(run.log, 1e-3, convergence_tail(T));
  run.pass = run.dissipation.ok && run.constraints.ok && run.convergence.ok &&
             !run.guarantee_suspended;
  return run;
}

nlohmann::json run_json(const ControllerRun& run) {
  nlohmann::json doc;
  doc["name"] = run.name;
  doc["feasible"] = run.feasible;
  doc["pass"] = run.pass;
  doc["gamma0"] = run.gamma0;
  doc["gamma_final"] = run.gamma_final;
  doc["gamma_bar"] = run.gamma_bar;
  doc["eta_monotone"] = run.eta_monotone;
  doc["all_steps_feasible"] = run.all_steps_feasible;
  doc["guarantee_suspended"] = run.guarantee_suspended;
  doc["constraints_claimed"] = run.constraints_claimed;
  doc["synth_time"] = run.synth_time;
  doc["mean_step_time"] = run.mean_step_time;
  doc["dissipation"] = {{"ok", run.dissipation.ok},
                        {"worst_slack", run.dissipation.worst_slack},
                        {"gamma_bar", run.dissipation.gamma_bar}};
  if (run.invariance) {
    doc["invariance"] = {{"ok", run.invariance->ok},
                         {"precondition_ok", run.invariance->precondition_ok},
                         {"max_level", run.invariance->max_level},
                         {"level_ratio", run.invariance->level_ratio},
                         {"r", run.invariance->r}};
  }
  std::vector<double> excess(run.constraints.excess.data(),
                             run.constraints.excess.data() + run.constraints.excess.size());
  doc["constraints"] = {{"ok", run.constraints.ok}, {"excess", excess}};
  doc["convergence"] = {{"ok", run.convergence.ok},
                        {"tail_max_norm", run.convergence.tail_max_norm},
                        {"final_norm", run.convergence.final_norm}};
  return doc;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

void write_plot_csvs(const fs::path& dir, const ComparisonReport& report, int T) {
  std::ostringstream gcsv, ucsv, xcsv;
  gcsv << "t";
  ucsv << "t";
  xcsv << "t";
  for (const auto& run : report.runs) {
    gcsv << ",gamma_" << run.name;
    const Eigen::Index m = run.log.steps.front().u.size();
    for (Eigen::Index i = 1; i <= m; ++i) ucsv << ",u" << i << "_" << run.name;
    const Eigen::Index n = run.log.steps.front().x.size();
    for (Eigen::Index i = 1; i <= n; ++i) xcsv << ",x" << i << "_" << run.name;
  }
  gcsv << "\n";
  ucsv << "\n";
  xcsv << "\n";
  for (int t = 0; t < T; ++t) {
    gcsv << t;
    ucsv << t;
    xcsv << t;
    for (const auto& run : report.runs) {
      const double g =
          run.history.empty() ? run.gamma0 : run.history[static_cast<std::size_t>(t)].gamma;
      gcsv << "," << detail::fmt17(g);
      const auto& rec = run.log.steps[static_cast<std::size_t>(t)];
      for (Eigen::Index i = 0; i < rec.u.size(); ++i) ucsv << "," << detail::fmt17(rec.u(i));
      for (Eigen::Index i = 0; i < rec.x.size(); ++i) xcsv << "," << detail::fmt17(rec.x(i));
    }
    gcsv << "\n";
    ucsv << "\n";
    xcsv << "\n";
  }
  write_text(dir / "gamma_vs_t.csv", gcsv.str());
  write_text(dir / "u_vs_t.csv", ucsv.str());
  write_text(dir / "x_vs_t.csv", xcsv.str());
}

void write_artifacts(const ScenarioConfig& cfg, const DataSet& data,
                     const ComparisonReport& report) {
  const fs::path root(cfg.outputs.dir);
  fs::create_directories(root);
  write_text(root / "config.json", cfg.to_json());
  data.write_csv_dir((root / "dataset").string(), cfg.data.eps, cfg.data.seed);
  for (const auto& run : report.runs) {
    const fs::path dir = root / run.name;
    fs::create_directories(dir);
    write_text(dir / "controller.json", controller_to_json(run.initial));
    {
      std::ofstream out(dir / "trajectory.csv");
      if (!out) throw InputError("cannot write " + (dir / "trajectory.csv").string());
      run.log.write_csv(out);
    }
    write_text(dir / "audit.json", run_json(run).dump(2));
    if (!run.step_diagnostics.empty()) {
      std::ostringstream lines;
      for (const auto& line : run.step_diagnostics) lines << line << "\n";
      write_text(dir / "steps.jsonl", lines.str());
    }
  }
  if (cfg.outputs.plot_data && !report.runs.empty()) {
    fs::create_directories(root / "plots");
    write_plot_csvs(root / "plots", report, cfg.simulation.T);
  }
  write_text(root / "comparison.json", report.to_json());
}

}  // namespace

std::vector<Vector> disturbance_sequence(const ScenarioConfig::Simulation& sim, Eigen::Index n,
                                         double sigma0) {
  if (sim.T < 1) throw InputError("disturbance_sequence: horizon must be >= 1");
  std::vector<Vector> w;
  w.reserve(static_cast<std::size_t>(sim.T));
  if (sim.disturbance == "zero") {
    for (int t = 0; t < sim.T; ++t) w.push_back(Vector::Zero(n));
    return w;
  }
  if (sim.disturbance != "decaying")
    throw InputError("disturbance_sequence: unknown profile \"" + sim.disturbance + "\"");
  if (!(sigma0 > 0.0)) throw InputError("disturbance_sequence: sigma0 must be positive");
  Rng rng(sim.seed);
  double energy = 0.0;
  for (int t = 0; t < sim.T; ++t) energy += std::pow(sim.rho, 2.0 * t);
  const double c = std::sqrt(sigma0 / energy);
  for (int t = 0; t < sim.T; ++t) w.push_back(c * std::pow(sim.rho, t) * rng.unit_vec(n));
  return w;
}

const ControllerRun* ComparisonReport::find(const std::string& name) const {
  for (const auto& run : runs)
    if (run.name == name) return &run;
  return nullptr;
}

std::string ComparisonReport::to_json() const {
  nlohmann::json doc;
  doc["ok"] = ok;
  doc["dataset_hash"] = dataset_hash;
  doc["disturbance_hash"] = disturbance_hash;
  doc["total_time"] = total_time;
  doc["runs"] = nlohmann::json::array();
  for (const auto& run : runs) doc["runs"].push_back(run_json(run));
  doc["claims"] = nlohmann::json::array();
  for (const auto& claim : claims)
    doc["claims"].push_back({{"name", claim.name}, {"pass", claim.pass}, {"detail", claim.detail}});
  return doc.dump(2);
}

namespace {

struct Prepared {
  DataSet data;
  std::vector<Vector> w;
  SynthesisSpec base;
};

Prepared prepare(const ScenarioConfig& cfg, const SolverSettings& settings) {
  cfg.validate();
  Prepared prep;
  prep.data = excite(cfg.plant, cfg.data.J, cfg.data.input_bound, cfg.data.eps, cfg.data.seed,
                     cfg.data.state_bound);
  const NoiseModel nm = noise_model_pointwise(cfg.data.eps, prep.data.J, cfg.plant.n());
  ConsistencyForm form = consistency_form(prep.data, nm);
  prep.w = disturbance_sequence(cfg.simulation, cfg.plant.n(), cfg.synthesis.sigma0);
  prep.base = SynthesisSpec::from_plant(cfg.plant, std::move(form), cfg.simulation.x0,
                                        cfg.synthesis.sigma0, 1.0, true);
  if (cfg.synthesis.auto_r0) {
    const auto found = find_feasible_r0(prep.base, settings);
    if (!found) throw InfeasibleError("no feasible invariance level found on the search grid");
    prep.base.r0 = found->r0;
  } else {
    prep.base.r0 = cfg.synthesis.r0;
  }
  return prep;
}

ComparisonReport run_all(const ScenarioConfig& cfg, const SolverSettings& settings,
                         const Prepared& prep) {
  const auto t0 = Clock::now();
  ComparisonReport report;
  report.dataset_hash = hash_matrices({&prep.data.Xplus, &prep.data.X, &prep.data.U});
  report.disturbance_hash = hash_disturbance(prep.w);
  for (const auto& name : cfg.controllers) {
    if (name == "baseline")
      report.runs.push_back(run_fixed_gain(name, cfg.plant, prep.base, prep.w, cfg, settings,
                                           false));
    else if (name == "static")
      report.runs.push_back(run_fixed_gain(name, cfg.plant, prep.base, prep.w, cfg, settings,
                                           true));
    else
      report.runs.push_back(run_moving_horizon(cfg.plant, prep.base, prep.w, cfg, settings));
  }
  report.ok = std::all_of(report.runs.begin(), report.runs.end(),
                          [](const ControllerRun& r) { return r.pass; });
  report.total_time = seconds_since(t0);
  return report;
}

}  // namespace

ComparisonReport run_controllers(const ScenarioConfig& cfg, const SolverSettings& settings) {
  return run_all(cfg, settings, prepare(cfg, settings));
}

ComparisonReport run_scenario(const ScenarioConfig& cfg, const SolverSettings& settings) {
  const Prepared prep = prepare(cfg, settings);
  ComparisonReport report = run_all(cfg, settings, prep);
  write_artifacts(cfg, prep.data, report);
  return report;
}

ComparisonReport reproduce_example(const std::string& out_dir, const SolverSettings& settings) {
  ScenarioConfig cfg = ScenarioConfig::example44_defaults();
  if (!out_dir.empty()) cfg.outputs.dir = out_dir;
  const Prepared prep = prepare(cfg, settings);
  ComparisonReport report = run_all(cfg, settings, prep);

  const ControllerRun* baseline = report.find("baseline");
  const ControllerRun* fixed = report.find("static");
  const ControllerRun* moving = report.find("moving-horizon");
  if (!baseline || !fixed || !moving)
    throw UsageError("reproduce_example: built-in config must run all three controllers");
  auto add = [&report](const std::string& name, bool pass, std::string detail) {
    report.claims.push_back({name, pass, std::move(detail)});
  };
  {
    const double excess = baseline->constraints.excess.maxCoeff();
    std::ostringstream msg;
    msg << "max constraint excess " << excess;
    add("baseline-violates-input-bound", excess > 1e-9, msg.str());
  }
  {
    std::ostringstream msg;
    msg << "max constraint excess " << fixed->constraints.excess.maxCoeff();
    add("static-satisfies-constraints", fixed->constraints.ok, msg.str());
  }
  {
    std::ostringstream msg;
    msg << "max constraint excess " << moving->constraints.excess.maxCoeff();
    add("moving-horizon-satisfies-constraints", moving->constraints.ok, msg.str());
  }
  add("moving-horizon-feasible-every-step",
      moving->all_steps_feasible && !moving->guarantee_suspended, "");
  add("gamma-non-increasing", moving->eta_monotone, "");
  {
    std::ostringstream msg;
    msg << "final gamma " << moving->gamma_final << " vs static " << fixed->gamma0;
    add("moving-horizon-gamma-below-static", moving->gamma_final < fixed->gamma0, msg.str());
  }
  add("all-claimed-audits-pass", report.ok, "");
  report.ok = report.ok && std::all_of(report.claims.begin(), report.claims.end(),
                                       [](const Claim& c) { return c.pass; });

  write_artifacts(cfg, prep.data, report);
  return report;
}

}  // namespace ddhinf
