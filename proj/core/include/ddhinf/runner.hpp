#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ddhinf/audit.hpp"
#include "ddhinf/config.hpp"
#include "ddhinf/mhc.hpp"
#include "ddhinf/synth.hpp"

namespace ddhinf {

/// Disturbance realization for a scenario. "decaying" draws unit directions
/// from the simulation seed and scales them as c * rho^t so the total energy
/// equals sigma0 exactly; "zero" returns zero vectors.
std::vector<Vector> disturbance_sequence(const ScenarioConfig::Simulation& sim, Eigen::Index n,
                                         double sigma0);

struct ControllerRun {
  std::string name;
  bool feasible = false;
  Controller initial;
  TrajectoryLog log;
  DissipationReport dissipation;
  std::optional<InvarianceReport> invariance;
  ConstraintReport constraints;
  ConvergenceReport convergence;
  /// Whether constraint satisfaction is part of this controller's claims
  /// (false for the unconstrained baseline, which is expected to violate).
  bool constraints_claimed = false;
  std::vector<LoopState::HistoryEntry> history;
  std::vector<std::string> step_diagnostics;
  double gamma0 = 0.0;
  double gamma_final = 0.0;
  double gamma_bar = 0.0;
  bool eta_monotone = true;
  bool all_steps_feasible = true;
  bool guarantee_suspended = false;
  double synth_time = 0.0;
  double mean_step_time = 0.0;
  /// Conjunction of the audits this controller actually claims.
  bool pass = false;
};

struct Claim {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ComparisonReport {
  std::vector<ControllerRun> runs;
  std::vector<Claim> claims;
  std::string dataset_hash;
  std::string disturbance_hash;
  double total_time = 0.0;
  bool ok = false;

  const ControllerRun* find(const std::string& name) const;
  std::string to_json() const;
};

/// Runs every controller in the config on one shared dataset and disturbance
/// realization; no artifacts are written.
ComparisonReport run_controllers(const ScenarioConfig& cfg, const SolverSettings& settings = {});

/// run_controllers plus the artifact tree under cfg.outputs.dir: resolved
/// config, dataset CSVs, per-controller controller/trajectory/audit files,
/// per-step JSONL diagnostics, plot-data CSVs, and comparison.json.
ComparisonReport run_scenario(const ScenarioConfig& cfg, const SolverSettings& settings = {});

/// The built-in benchmark comparison: baseline vs static vs moving-horizon on
/// the example plant, with the qualitative claims evaluated and recorded.
ComparisonReport reproduce_example(const std::string& out_dir, const SolverSettings& settings = {});

}  // namespace ddhinf
