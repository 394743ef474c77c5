#include "ddhinf/audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <json.hpp>

#include "ddhinf/errors.hpp"

namespace ddhinf {

namespace {

constexpr double kRelTol = 1e-6;
constexpr double kAbsTol = 1e-9;

void require_complete(const TrajectoryLog& log) {
  if (log.steps.empty()) throw InputError("audit: empty trajectory log");
  for (const auto& rec : log.steps) {
    if (!rec.x.allFinite() || !rec.u.allFinite() || !rec.w.allFinite() || !rec.y1.allFinite() ||
        !rec.y2.allFinite())
      throw InputError("audit: trajectory log has non-finite entries");
  }
}

}  // namespace

DissipationReport dissipation_report(const TrajectoryLog& log, double gamma_bar,
                                     const SymMatrix& P0) {
  require_complete(log);
  if (!(gamma_bar > 0.0) || !std::isfinite(gamma_bar))
    throw InputError("dissipation audit: gamma_bar must be positive");
  const Vector& x0 = log.steps.front().x;
  if (P0.dim() != x0.size()) throw InputError("dissipation audit: P0 dimension mismatch");
  Eigen::LLT<Matrix> llt(P0.mat());
  if (llt.info() != Eigen::Success)
    throw DomainError("dissipation audit: P0 must be positive definite");

  DissipationReport rep;
  rep.gamma_bar = gamma_bar;
  const double v0 = x0.dot(P0.mat() * x0);
  rep.tolerance = kRelTol * (1.0 + v0);
  const double g2 = gamma_bar * gamma_bar;
  double wsum = 0.0;
  double ysum = 0.0;
  rep.slack.reserve(log.steps.size());
  rep.worst_slack = std::numeric_limits<double>::infinity();
  for (const auto& rec : log.steps) {
    wsum += rec.w.squaredNorm();
    ysum += rec.y1.squaredNorm();
    const double s = g2 * wsum + v0 - ysum;
    rep.slack.push_back(s);
    rep.worst_slack = std::min(rep.worst_slack, s);
  }
  rep.ok = rep.worst_slack >= -rep.tolerance;
  return rep;
}

InvarianceReport invariance_report(const TrajectoryLog& log, const SymMatrix& P, double r,
                                   double gamma) {
  require_complete(log);
  if (!(r > 0.0) || !std::isfinite(r)) throw InputError("invariance audit: r must be positive");
  if (gamma < 0.0 || !std::isfinite(gamma))
    throw InputError("invariance audit: gamma must be finite and >= 0");
  const Vector& x0 = log.steps.front().x;
  if (P.dim() != x0.size()) throw InputError("invariance audit: P dimension mismatch");

  InvarianceReport rep;
  rep.r = r;
  const double v0 = x0.dot(P.mat() * x0);
  double wsum = 0.0;
  for (const auto& rec : log.steps) wsum += rec.w.squaredNorm();
  const bool energy_ok = log.sigma0 <= 0.0 || wsum <= log.sigma0 * (1.0 + kRelTol);
  const bool level_ok = r >= v0 + gamma * gamma * log.sigma0 - kRelTol * (1.0 + r);
  rep.precondition_ok = energy_ok && level_ok;

  rep.max_level = -std::numeric_limits<double>::infinity();
  for (const auto& rec : log.steps)
    rep.max_level = std::max(rep.max_level, rec.x.dot(P.mat() * rec.x));
  rep.level_ratio = rep.max_level / r;
  rep.ok = rep.precondition_ok && rep.max_level <= r * (1.0 + kRelTol);
  return rep;
}

ConstraintReport constraint_report(const TrajectoryLog& log, const Vector& y2max) {
  require_complete(log);
  const Eigen::Index p2 = log.steps.front().y2.size();
  if (y2max.size() != p2) throw InputError("constraint audit: y2max dimension mismatch");

  ConstraintReport rep;
  rep.tolerance = kAbsTol;
  rep.excess = Vector::Constant(p2, -std::numeric_limits<double>::infinity());
  for (const auto& rec : log.steps)
    rep.excess = rep.excess.cwiseMax(rec.y2 - y2max);
  rep.ok = p2 == 0 || rep.excess.maxCoeff() <= kAbsTol;
  return rep;
}

ConvergenceReport convergence_report(const TrajectoryLog& log, double tol, int tail) {
  require_complete(log);
  if (!(tol > 0.0)) throw InputError("convergence audit: tolerance must be positive");
  if (tail < 1) throw InputError("convergence audit: tail window must be >= 1");
  if (static_cast<int>(log.steps.size()) < tail)
    throw InputError("convergence audit: log shorter than the tail window");

  ConvergenceReport rep;
  rep.tail = tail;
  rep.tolerance = tol;
  rep.tail_max_norm = 0.0;
  const std::size_t start = log.steps.size() - static_cast<std::size_t>(tail);
  for (std::size_t i = start; i < log.steps.size(); ++i)
    rep.tail_max_norm = std::max(rep.tail_max_norm, log.steps[i].x.norm());
  rep.final_norm = log.steps.back().x.norm();
  rep.ok = rep.tail_max_norm < tol;
  return rep;
}

AuditReport audit_all(const TrajectoryLog& log, const SymMatrix& P0, double gamma_bar,
                      const Vector& y2max, double r, double gamma, double conv_tol,
                      int conv_tail) {
  AuditReport rep;
  rep.gamma_bar = gamma_bar;
  rep.dissipation = dissipation_report(log, gamma_bar, P0);
  rep.invariance = invariance_report(log, P0, r, gamma);
  rep.constraints = constraint_report(log, y2max);
  rep.convergence = convergence_report(log, conv_tol, conv_tail);
  return rep;
}

std::string audit_to_json(const AuditReport& report) {
  nlohmann::json doc;
  doc["ok"] = report.ok();
  doc["gamma_bar"] = report.gamma_bar;
  doc["dissipation"] = {{"ok", report.dissipation.ok},
                        {"worst_slack", report.dissipation.worst_slack},
                        {"tolerance", report.dissipation.tolerance},
                        {"gamma_bar", report.dissipation.gamma_bar}};
  doc["invariance"] = {{"ok", report.invariance.ok},
                       {"precondition_ok", report.invariance.precondition_ok},
                       {"max_level", report.invariance.max_level},
                       {"level_ratio", report.invariance.level_ratio},
                       {"r", report.invariance.r}};
  std::vector<double> excess(report.constraints.excess.data(),
                             report.constraints.excess.data() + report.constraints.excess.size());
  doc["constraints"] = {{"ok", report.constraints.ok},
                        {"excess", excess},
                        {"tolerance", report.constraints.tolerance}};
  doc["convergence"] = {{"ok", report.convergence.ok},
                        {"tail_max_norm", report.convergence.tail_max_norm},
                        {"final_norm", report.convergence.final_norm},
                        {"tail", report.convergence.tail},
                        {"tolerance", report.convergence.tolerance}};
  return doc.dump(2);
}

}  // namespace ddhinf
