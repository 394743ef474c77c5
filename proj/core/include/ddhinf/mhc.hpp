#pragma once

#include <string>
#include <vector>

#include "ddhinf/synth.hpp"

namespace ddhinf {

/// Carried-over dissipation credit: Delta_t = Delta_{t-1} -
/// (x'P_{t-1}x - x'P_{t-2}x) evaluated at x = x_{t-1}.
double delta_update(double delta_prev, const Vector& x_prev, const SymMatrix& P_prev,
                    const SymMatrix& P_prev2);

struct SigmaUpdate {
  double value = 0.0;
  bool exhausted = false;
};

/// Remaining-energy forecast update: max(sigma - w_energy, 1e-15), flagging
/// when the floor clamps (forecast exhausted).
SigmaUpdate sigma_update(double sigma, double w_energy);

struct StepDecision {
  enum class Source { FreshSolve, FallbackPrevious };

  Matrix K;
  double eta = 0.0;
  double gamma = 0.0;
  Source source = Source::FreshSolve;
  /// Margins of the adopted tuple on this step's program.
  std::vector<double> margins;
  /// Margins of the previous step's tuple on this step's program (t >= 1);
  /// these stay nonnegative whenever the energy forecast held and r was kept.
  std::vector<double> prev_margins;
  /// True when the previous tuple was adopted because the fresh solve came
  /// back with a lower objective inside solver tolerance.
  bool polished = false;
  /// True when feasibility was recovered by re-tuning r on a log grid.
  bool grid_retuned = false;
  double r_used = 0.0;
  double solve_time = 0.0;
  double cond_Q = 0.0;
  bool cond_warning = false;
};

std::string to_string(StepDecision::Source s);

struct LoopState {
  int t = 0;
  SymMatrix P_prev;
  SymMatrix P_prev2;
  double Delta = 0.0;
  double sigma = 0.0;
  bool sigma_exhausted = false;
  double r = 0.0;
  Vector x_prev;

  struct HistoryEntry {
    int t = 0;
    double eta = 0.0;
    double gamma = 0.0;
    bool feasible = false;
    bool fallback = false;
    double solve_time = 0.0;
  };
  std::vector<HistoryEntry> history;

  SynthesisSpec base;
  SolverSettings settings;
  Controller prev_ctrl;
  bool have_prev = false;
  /// Set from the first reuse of a previous gain on an infeasible step; the
  /// attenuation bookkeeping is heuristic from that point on.
  bool guarantee_suspended = false;
  /// Largest gamma over fresh-solve steps.
  double gamma_bar = 0.0;
};

/// Prepares the moving-horizon loop. Validates inputs and the model-set
/// interior; the first synthesis happens in the first mhc_step call, which
/// throws InfeasibleError if the initial program cannot be solved.
LoopState init(const SynthesisSpec& spec, const Vector& x0, double sigma0, double r0,
               const SolverSettings& settings = {});

/// One controller update: assembles the step program at (x_t, sigma_t, r_t,
/// P_{t-1}, Delta_t) with the level-continuity constraint from t >= 1, solves
/// it (warm-started from the previous tuple), and falls back to an r re-tune
/// and then to the previous gain when infeasible. Updates the P chain, Delta,
/// and history; sigma is advanced separately via sigma_update.
StepDecision mhc_step(LoopState& state, const Vector& x_t);

/// One JSONL diagnostics record for a completed step.
std::string diagnostics_line(int t, const StepDecision& d, double delta, double sigma);

}  // namespace ddhinf
