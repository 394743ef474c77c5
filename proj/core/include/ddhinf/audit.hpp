#pragma once

#include <string>
#include <vector>

#include "ddhinf/matlin.hpp"
#include "ddhinf/plant.hpp"

namespace ddhinf {

/// Audits run on a finished TrajectoryLog plus the declared certificates
/// (P0, gamma_bar, r); they never consult the synthesis modules.

struct DissipationReport {
  /// slack(t) = gamma_bar^2 sum_{i<=t}|w(i)|^2 + x0'P0x0 - sum_{i<=t}|y1(i)|^2.
  std::vector<double> slack;
  double worst_slack = 0.0;
  double gamma_bar = 0.0;
  double tolerance = 0.0;
  bool ok = false;
};

DissipationReport dissipation_report(const TrajectoryLog& log, double gamma_bar,
                                     const SymMatrix& P0);

struct InvarianceReport {
  /// False when r < x0'Px0 + gamma^2 sigma0 or the logged disturbance energy
  /// exceeds sigma0: the invariance claim is then vacuous, not violated.
  bool precondition_ok = false;
  double max_level = 0.0;
  double level_ratio = 0.0;
  double r = 0.0;
  bool ok = false;
};

/// Checks that the trajectory never leaves the level set {x : x'Px <= r}.
/// gamma strengthens the precondition check to r >= x0'Px0 + gamma^2 sigma0;
/// pass 0 to check only r >= x0'Px0.
InvarianceReport invariance_report(const TrajectoryLog& log, const SymMatrix& P, double r,
                                   double gamma = 0.0);

struct ConstraintReport {
  /// Per row v: max_t y2v(t) - y2max(v).
  Vector excess;
  double tolerance = 0.0;
  bool ok = false;
};

ConstraintReport constraint_report(const TrajectoryLog& log, const Vector& y2max);

struct ConvergenceReport {
  double tail_max_norm = 0.0;
  double final_norm = 0.0;
  int tail = 0;
  double tolerance = 0.0;
  bool ok = false;
};

/// True iff max |x(t)| over the last `tail` logged steps is below tol.
ConvergenceReport convergence_report(const TrajectoryLog& log, double tol, int tail);

struct AuditReport {
  DissipationReport dissipation;
  InvarianceReport invariance;
  ConstraintReport constraints;
  ConvergenceReport convergence;
  double gamma_bar = 0.0;

  bool ok() const {
    return dissipation.ok && invariance.ok && constraints.ok && convergence.ok;
  }
};

AuditReport audit_all(const TrajectoryLog& log, const SymMatrix& P0, double gamma_bar,
                      const Vector& y2max, double r, double gamma, double conv_tol = 1e-3,
                      int conv_tail = 10);

std::string audit_to_json(const AuditReport& report);

}  // namespace ddhinf
