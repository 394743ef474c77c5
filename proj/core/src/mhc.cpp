#include "ddhinf/mhc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "ddhinf/errors.hpp"

namespace ddhinf {

namespace {

constexpr double kSigmaFloor = 1e-15;
constexpr double kDeltaSlack = 1e-6;
constexpr double kCondWarn = 1e12;

Program step_program(const SynthesisSpec& spec, int t, const SymMatrix& P_prev, double delta,
                     const Vector& x_t) {
  Program prog = build_static(spec);
  if (t >= 1) {
    const Eigen::Index n = spec.n();
    LmiBuilder b("level-continuity", {1, n});
    Matrix level(1, 1);
    level(0, 0) = x_t.dot(P_prev.mat() * x_t) + delta;
    b.constant(0, 0, level);
    b.constant(1, 0, x_t);
    b.term(1, 1, prog.var("Q"), Matrix::Identity(n, n), Matrix::Identity(n, n));
    prog.add_lmi(b.build());
  }
  return prog;
}

Point tuple_point(const Program& prog, const Controller& c) {
  Point p;
  p.set_scalar(prog.var("eta"), c.eta);
  p.set(prog.var("Q"), c.Q);
  p.set(prog.var("Y"), c.Y);
  p.set_scalar(prog.var("alpha"), c.alpha);
  p.set_scalar(prog.var("beta"), c.beta);
  return p;
}

bool margins_pass(const Program& prog, const std::vector<double>& margins, double tol_feas) {
  const auto& lmis = prog.lmis();
  if (margins.size() != lmis.size()) return false;
  for (std::size_t k = 0; k < lmis.size(); ++k) {
    const double scale = 1.0 + lmis[k].constant.mat().cwiseAbs().maxCoeff();
    if (margins[k] < -tol_feas * scale) return false;
  }
  return true;
}

double condition_of(const Matrix& Q) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(Q);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace

double delta_update(double delta_prev, const Vector& x_prev, const SymMatrix& P_prev,
                    const SymMatrix& P_prev2) {
  if (P_prev.dim() != x_prev.size() || P_prev2.dim() != x_prev.size())
    throw InputError("delta_update: level matrices must match the state dimension");
  const double now = x_prev.dot(P_prev.mat() * x_prev);
  const double before = x_prev.dot(P_prev2.mat() * x_prev);
  return delta_prev - (now - before);
}

SigmaUpdate sigma_update(double sigma, double w_energy) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InputError("sigma must be finite and >= 0");
  if (!(w_energy >= 0.0) || !std::isfinite(w_energy))
    throw InputError("disturbance energy must be finite and >= 0");
  SigmaUpdate out;
  const double raw = sigma - w_energy;
  if (raw < kSigmaFloor) {
    out.value = kSigmaFloor;
    out.exhausted = true;
  } else {
    out.value = raw;
  }
  return out;
}

std::string to_string(StepDecision::Source s) {
  return s == StepDecision::Source::FreshSolve ? "fresh-solve" : "fallback-previous";
}

LoopState init(const SynthesisSpec& spec, const Vector& x0, double sigma0, double r0,
               const SolverSettings& settings) {
  SynthesisSpec base = spec;
  base.x0 = x0;
  base.sigma0 = sigma0;
  base.r0 = r0;
  base.validate();
  if (!base.constrained)
    throw UsageError("moving-horizon loop runs the constrained program; set constrained = true");
  if (!(slater_margin(base.form) > 0.0))
    throw PreconditionError(
        "consistency form has no strict interior; collect more data or relax the noise bound");
  LoopState st;
  st.sigma = sigma0;
  st.r = r0;
  st.x_prev = Vector::Zero(base.n());
  st.base = std::move(base);
  st.settings = settings;
  return st;
}

StepDecision mhc_step(LoopState& state, const Vector& x_t) {
  if (state.r <= 0.0 || state.base.form.n <= 0)
    throw UsageError("mhc_step called on an uninitialized loop state");
  const Eigen::Index n = state.base.n();
  if (x_t.size() != n) throw InputError("measured state has the wrong dimension");
  if (!x_t.allFinite()) throw InputError("measured state has non-finite entries");

  const auto wall0 = std::chrono::steady_clock::now();
  StepDecision d;
  d.r_used = state.r;

  SynthesisSpec spec_t = state.base;
  spec_t.x0 = x_t;
  spec_t.sigma0 = state.sigma;
  spec_t.r0 = state.r;
  Program prog = step_program(spec_t, state.t, state.P_prev, state.Delta, x_t);

  Point warm;
  bool have_warm = false;
  if (state.have_prev) {
    warm = tuple_point(prog, state.prev_ctrl);
    have_warm = true;
    d.prev_margins = constraint_margins(prog, warm);
  }

  SolverReport rep = solve(prog, state.settings, have_warm ? &warm : nullptr);

  Controller adopted;
  bool have_adopted = false;
  if (rep.status == SolveStatus::Optimal) {
    try {
      Controller fresh = extract_controller(spec_t, prog, rep);
      if (state.have_prev && fresh.eta < state.prev_ctrl.eta &&
          margins_pass(prog, d.prev_margins, state.settings.tol_feas)) {
        adopted = state.prev_ctrl;
        adopted.margins = d.prev_margins;
        d.polished = true;
      } else {
        adopted = std::move(fresh);
      }
      have_adopted = true;
    } catch (const CertificationError&) {
      have_adopted = false;
    }
  }

  if (!have_adopted) {
    if (state.t == 0)
      throw InfeasibleError("initial gain synthesis failed (" + to_string(rep.status) +
                            "): " + rep.message);
    double best_eta = -std::numeric_limits<double>::infinity();
    Controller best;
    double best_r = 0.0;
    for (int k = 0; k < 17; ++k) {
      const double expo = -2.0 + 0.25 * k;
      if (std::abs(expo) < 1e-12) continue;
      const double r_try = state.r * std::pow(10.0, expo);
      SynthesisSpec spec_g = spec_t;
      spec_g.r0 = r_try;
      Program prog_g = step_program(spec_g, state.t, state.P_prev, state.Delta, x_t);
      Point warm_g = tuple_point(prog_g, state.prev_ctrl);
      SolverReport rep_g = solve(prog_g, state.settings, &warm_g);
      if (rep_g.status != SolveStatus::Optimal) continue;
      try {
        Controller cand = extract_controller(spec_g, prog_g, rep_g);
        if (cand.eta > best_eta) {
          best_eta = cand.eta;
          best = std::move(cand);
          best_r = r_try;
        }
      } catch (const CertificationError&) {
      }
    }
    if (best_r > 0.0) {
      adopted = std::move(best);
      have_adopted = true;
      d.grid_retuned = true;
      d.r_used = best_r;
      state.r = best_r;
    } else {
      if (!state.have_prev)
        throw InfeasibleError("step program infeasible and no previous gain to fall back on");
      adopted = state.prev_ctrl;
      adopted.margins = d.prev_margins;
      have_adopted = true;
      d.source = StepDecision::Source::FallbackPrevious;
      state.guarantee_suspended = true;
    }
  }

  d.K = adopted.K;
  d.eta = adopted.eta;
  d.gamma = adopted.gamma;
  d.margins = adopted.margins;
  d.cond_Q = condition_of(adopted.Q);
  if (d.cond_Q > kCondWarn) {
    d.cond_warning = true;
    if (d.source == StepDecision::Source::FreshSolve && !d.polished &&
        !margins_pass(prog, d.margins, state.settings.tol_feas))
      throw CertificationError("ill-conditioned level matrix failed the margin re-check");
  }
  d.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();

  const SymMatrix P_old = state.P_prev;
  const SymMatrix& P_t = adopted.P;
  double delta_next = 0.0;
  if (state.t >= 1) {
    delta_next = delta_update(state.Delta, x_t, P_t, P_old);
    const double scale = 1.0 + std::abs(x_t.dot(P_t.mat() * x_t));
    if (delta_next < -kDeltaSlack * scale)
      throw DomainError("carried dissipation credit went negative; level continuity was violated");
  }
  state.P_prev2 = P_old;
  state.P_prev = P_t;
  state.Delta = delta_next;
  state.x_prev = x_t;
  if (d.source == StepDecision::Source::FreshSolve) {
    state.prev_ctrl = adopted;
    state.have_prev = true;
    state.gamma_bar = state.history.empty() ? d.gamma : std::max(state.gamma_bar, d.gamma);
  }

  LoopState::HistoryEntry h;
  h.t = state.t;
  h.eta = d.eta;
  h.gamma = d.gamma;
  h.feasible = d.source == StepDecision::Source::FreshSolve && !d.grid_retuned;
  h.fallback = d.grid_retuned || d.source == StepDecision::Source::FallbackPrevious;
  h.solve_time = d.solve_time;
  state.history.push_back(h);
  state.t += 1;
  return d;
}

std::string diagnostics_line(int t, const StepDecision& d, double delta, double sigma) {
  nlohmann::json doc;
  doc["t"] = t;
  doc["eta"] = d.eta;
  doc["gamma"] = d.gamma;
  doc["Delta"] = delta;
  doc["sigma"] = sigma;
  doc["r"] = d.r_used;
  doc["feasible"] = d.source == StepDecision::Source::FreshSolve && !d.grid_retuned;
  doc["fallback"] = d.grid_retuned || d.source == StepDecision::Source::FallbackPrevious;
  doc["source"] = to_string(d.source);
  doc["polished"] = d.polished;
  doc["solve_time"] = d.solve_time;
  doc["margins"] = d.margins;
  return doc.dump();
}

}  // namespace ddhinf
