#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "ddhinf/errors.hpp"
#include "ddhinf/sdp.hpp"

// Barrier interior-point method on the inequality form
//   maximize c'y  s.t.  F_k(y) = B0_k + sum_i y_i B_{k,i} >= 0.
// All internal arithmetic runs in long double on an equilibrated copy of the
// problem; results are mapped back and re-verified in double precision
// against the original program data.

namespace ddhinf {
namespace {

using LD = long double;
using MatLD = Eigen::Matrix<LD, Eigen::Dynamic, Eigen::Dynamic>;
using VecLD = Eigen::Matrix<LD, Eigen::Dynamic, 1>;

struct Block {
  MatLD F0;
  std::vector<MatLD> Fi;
};

struct BarrierProblem {
  VecLD c;
  std::vector<Block> blocks;
  Eigen::Index nvar = 0;
  LD nu = 0;
};

struct BarrierOptions {
  LD mu0 = 1.0L;
  LD mu_factor = 0.2L;
  LD tol_gap_rel = 1e-8L;
  LD tol_gap_abs = 0.0L;
  LD early_stop_obj = std::numeric_limits<LD>::infinity();
  LD obj_cap = 1e12L;
  int max_newton = 200;
};

struct BarrierResult {
  VecLD y;
  LD objective = 0.0L;
  LD gap = std::numeric_limits<LD>::infinity();
  int newton_steps = 0;
  bool converged = false;
  bool early_stopped = false;
  bool diverged = false;
  bool stalled = false;
  bool iter_capped = false;
};

bool eval_blocks(const BarrierProblem& p, const VecLD& y, std::vector<MatLD>& F) {
  F.resize(p.blocks.size());
  for (std::size_t k = 0; k < p.blocks.size(); ++k) {
    F[k] = p.blocks[k].F0;
    for (Eigen::Index i = 0; i < p.nvar; ++i)
      if (y(i) != 0.0L) F[k] += y(i) * p.blocks[k].Fi[static_cast<std::size_t>(i)];
    if (!F[k].allFinite()) return false;
  }
  return true;
}

bool factor_blocks(const std::vector<MatLD>& F, std::vector<Eigen::LLT<MatLD>>& llt) {
  llt.resize(F.size());
  for (std::size_t k = 0; k < F.size(); ++k) {
    llt[k].compute(F[k]);
    if (llt[k].info() != Eigen::Success) return false;
  }
  return true;
}

LD log_det(const std::vector<Eigen::LLT<MatLD>>& llt) {
  LD v = 0.0L;
  for (const auto& f : llt) {
    const MatLD& packed = f.matrixLLT();
    for (Eigen::Index i = 0; i < packed.rows(); ++i) v += std::log(packed(i, i));
  }
  return 2.0L * v;
}

bool strictly_feasible(const BarrierProblem& p, const VecLD& y, LD shift) {
  std::vector<MatLD> F;
  if (!eval_blocks(p, y, F)) return false;
  for (auto& Fk : F) {
    Fk.diagonal().array() -= shift;
    Eigen::LLT<MatLD> llt(Fk);
    if (llt.info() != Eigen::Success) return false;
  }
  return true;
}

// Minimizes phi(y) = -c'y/mu - sum_k log det F_k(y) over a decreasing mu
// schedule. The iterate stays strictly feasible throughout, so on any exit
// res.y is a usable interior point.
BarrierResult barrier_maximize(const BarrierProblem& p, const VecLD& y0,
                               const BarrierOptions& opt) {
  BarrierResult res;
  res.y = y0;
  const Eigen::Index n = p.nvar;
  std::vector<MatLD> F;
  std::vector<Eigen::LLT<MatLD>> llt;
  if (!eval_blocks(p, res.y, F) || !factor_blocks(F, llt)) {
    res.stalled = true;
    res.objective = p.c.dot(res.y);
    return res;
  }

  LD mu = opt.mu0;
  std::vector<MatLD> W(static_cast<std::size_t>(n));
  bool done = false;
  while (!done) {
    // center for the current mu
    for (;;) {
      if (res.newton_steps >= opt.max_newton) {
        res.iter_capped = true;
        done = true;
        break;
      }
      VecLD g = -p.c / mu;
      MatLD H = MatLD::Zero(n, n);
      for (std::size_t k = 0; k < p.blocks.size(); ++k) {
        const auto L = llt[k].matrixL();
        for (Eigen::Index i = 0; i < n; ++i) {
          const MatLD T = L.solve(p.blocks[k].Fi[static_cast<std::size_t>(i)]);
          W[static_cast<std::size_t>(i)] = L.solve(T.transpose()).transpose();
          g(i) -= W[static_cast<std::size_t>(i)].trace();
        }
        for (Eigen::Index i = 0; i < n; ++i)
          for (Eigen::Index j = 0; j <= i; ++j) {
            const LD h = W[static_cast<std::size_t>(i)]
                             .cwiseProduct(W[static_cast<std::size_t>(j)])
                             .sum();
            H(i, j) += h;
            if (i != j) H(j, i) += h;
          }
      }

      VecLD d;
      bool direction_ok = false;
      LD reg = 0.0L;
      const LD reg_base = std::max<LD>(1.0L, H.diagonal().cwiseAbs().maxCoeff());
      for (int attempt = 0; attempt < 14; ++attempt) {
        MatLD Hr = H;
        if (reg > 0.0L) Hr.diagonal().array() += reg;
        Eigen::LDLT<MatLD> hs(Hr);
        if (hs.info() == Eigen::Success) {
          d = hs.solve(-g);
          if (d.allFinite()) {
            const LD resid = (Hr * d + g).cwiseAbs().maxCoeff();
            const LD gscale = std::max<LD>(1.0L, g.cwiseAbs().maxCoeff());
            if (resid <= 1e-10L * gscale && g.dot(d) <= 0.0L) {
              direction_ok = true;
              break;
            }
          }
        }
        reg = (reg == 0.0L) ? reg_base * 1e-17L : reg * 100.0L;
      }
      if (!direction_ok) {
        res.stalled = true;
        done = true;
        break;
      }

      const LD decrement_sq = -g.dot(d);
      if (decrement_sq <= 0.09L) break;

      const LD phi0 = -p.c.dot(res.y) / mu - log_det(llt);
      const LD slope = g.dot(d);
      LD alpha = 1.0L;
      bool accepted = false;
      std::vector<MatLD> Ft;
      std::vector<Eigen::LLT<MatLD>> lltt;
      while (alpha >= 1e-18L) {
        const VecLD yt = res.y + alpha * d;
        if (eval_blocks(p, yt, Ft) && factor_blocks(Ft, lltt)) {
          const LD phit = -p.c.dot(yt) / mu - log_det(lltt);
          if (std::isfinite(static_cast<double>(phit)) &&
              phit <= phi0 + 0.01L * alpha * slope) {
            res.y = yt;
            F.swap(Ft);
            llt.swap(lltt);
            accepted = true;
            break;
          }
        }
        alpha *= 0.5L;
      }
      ++res.newton_steps;
      if (!accepted) {
        res.stalled = true;
        done = true;
        break;
      }

      const LD obj = p.c.dot(res.y);
      if (obj >= opt.early_stop_obj) {
        res.early_stopped = true;
        res.converged = true;
        done = true;
        break;
      }
      if (obj > opt.obj_cap) {
        res.diverged = true;
        done = true;
        break;
      }
    }
    if (done) break;

    const LD obj = p.c.dot(res.y);
    res.gap = mu * p.nu;
    if (res.gap <= std::max(opt.tol_gap_abs, opt.tol_gap_rel * std::max<LD>(1.0L, std::abs(obj)))) {
      res.converged = true;
      break;
    }
    mu *= opt.mu_factor;
    if (mu < 1e-300L) {
      res.stalled = true;
      break;
    }
  }
  res.objective = p.c.dot(res.y);
  return res;
}

}  // namespace

SolverReport solve(const Program& prog, const SolverSettings& settings, const Point* warm_start) {
  const auto clock_start = std::chrono::steady_clock::now();
  if (!prog.has_objective()) throw UsageError("program has no objective");
  if (!(settings.tol_feas > 0.0) || !(settings.tol_gap > 0.0) || settings.max_iter <= 0)
    throw InputError("solver settings must be positive");

  SolverReport report;
  const Eigen::Index N = prog.total_components();
  const Vector& c_orig = prog.objective();
  const Vector c_int = prog.maximize() ? c_orig : Vector(-c_orig);

  const auto finish = [&](SolveStatus status, const Vector& components, std::string message) {
    report.status = status;
    report.message = std::move(message);
    for (const auto& v : prog.vars())
      report.point.set(v, unflatten_value(v, components.segment(v.offset, v.size)));
    report.margins = constraint_margins(prog, report.point);
    report.worst_residual = 0.0;
    for (double m : report.margins) report.worst_residual = std::min(report.worst_residual, m);
    if (status == SolveStatus::Optimal || status == SolveStatus::NumericalFailure)
      report.objective = prog.objective_value(report.point);
    if (status == SolveStatus::Optimal) {
      for (std::size_t k = 0; k < prog.lmis().size(); ++k) {
        const auto& lmi = prog.lmis()[k];
        const double allowed = settings.tol_feas * (1.0 + lmi.constant.max_abs());
        if (report.margins[k] < -allowed) {
          report.status = SolveStatus::NumericalFailure;
          report.message = "returned point violates '" + lmi.label +
                           "' beyond tolerance (margin " + std::to_string(report.margins[k]) +
                           ")";
          break;
        }
      }
    }
    report.solve_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    return report;
  };

  // dense per-component coefficients; constraints without variables are
  // checked directly and dropped
  struct RawBlock {
    Matrix B0;
    std::vector<Matrix> Bi;
    Eigen::Index dim = 0;
  };
  std::vector<RawBlock> raw;
  for (const auto& lmi : prog.lmis()) {
    RawBlock r;
    r.dim = lmi.dim;
    r.B0 = lmi.constant.mat();
    r.Bi.assign(static_cast<std::size_t>(N), Matrix());
    bool has_var = false;
    for (const auto& term : lmi.terms) {
      for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(term.comps.size()); ++k) {
        const Matrix& C = term.comps[static_cast<std::size_t>(k)];
        if (C.cwiseAbs().maxCoeff() == 0.0) continue;
        Matrix& slot = r.Bi[static_cast<std::size_t>(term.var.offset + k)];
        if (slot.size() == 0) slot = C;
        else slot += C;
        has_var = true;
      }
    }
    if (!has_var) {
      const double margin = psd_margin(lmi.constant);
      if (margin < -settings.tol_feas * (1.0 + lmi.constant.max_abs()))
        return finish(SolveStatus::Infeasible, Vector::Zero(N),
                      "constraint '" + lmi.label + "' contains no variables and is not PSD");
      continue;
    }
    raw.push_back(std::move(r));
  }

  // warm-start components, if usable
  Vector warm_flat = Vector::Zero(N);
  bool have_warm = false;
  if (warm_start != nullptr) {
    try {
      for (const auto& v : prog.vars())
        warm_flat.segment(v.offset, v.size) = flatten_value(v, warm_start->at(v));
      have_warm = warm_flat.allFinite();
    } catch (const UsageError&) {
      have_warm = false;
    }
    if (!have_warm) warm_flat.setZero();
  }

  // components not touching any remaining constraint are either an unbounded
  // objective direction or inert
  std::vector<char> used(static_cast<std::size_t>(N), 0);
  for (const auto& r : raw)
    for (Eigen::Index g = 0; g < N; ++g)
      if (r.Bi[static_cast<std::size_t>(g)].size() != 0) used[static_cast<std::size_t>(g)] = 1;
  for (Eigen::Index g = 0; g < N; ++g) {
    if (!used[static_cast<std::size_t>(g)] && c_int(g) != 0.0) {
      SolverReport r = finish(SolveStatus::Unbounded, warm_flat,
                              "objective direction is not constrained");
      r.objective = prog.maximize() ? std::numeric_limits<double>::infinity()
                                    : -std::numeric_limits<double>::infinity();
      return r;
    }
  }
  std::vector<Eigen::Index> active;
  for (Eigen::Index g = 0; g < N; ++g)
    if (used[static_cast<std::size_t>(g)]) active.push_back(g);

  if (raw.empty())
    return finish(SolveStatus::Optimal, warm_flat, "no binding constraints");

  // per-block Jacobi equilibration, then per-component scaling; both are
  // exact reparameterizations
  const auto nact = static_cast<Eigen::Index>(active.size());
  BarrierProblem bp;
  bp.nvar = nact;
  bp.c = VecLD::Zero(nact);
  for (const auto& r : raw) {
    Vector rowmax = Vector::Zero(r.dim);
    for (Eigen::Index i = 0; i < r.dim; ++i) {
      double a = r.B0.row(i).cwiseAbs().maxCoeff();
      for (Eigen::Index g : active) {
        const Matrix& C = r.Bi[static_cast<std::size_t>(g)];
        if (C.size() != 0) a = std::max(a, C.row(i).cwiseAbs().maxCoeff());
      }
      rowmax(i) = a;
    }
    Vector d(r.dim);
    for (Eigen::Index i = 0; i < r.dim; ++i) {
      const double a = rowmax(i);
      d(i) = (a > 0.0) ? std::clamp(1.0 / std::sqrt(a), 1e-8, 1e8) : 1.0;
    }
    Block blk;
    blk.F0 = (d.asDiagonal() * r.B0 * d.asDiagonal()).cast<LD>();
    blk.Fi.resize(static_cast<std::size_t>(nact));
    for (Eigen::Index i = 0; i < nact; ++i) {
      const Matrix& C = r.Bi[static_cast<std::size_t>(active[static_cast<std::size_t>(i)])];
      if (C.size() == 0)
        blk.Fi[static_cast<std::size_t>(i)] = MatLD::Zero(r.dim, r.dim);
      else
        blk.Fi[static_cast<std::size_t>(i)] = (d.asDiagonal() * C * d.asDiagonal()).cast<LD>();
    }
    bp.nu += static_cast<LD>(r.dim);
    bp.blocks.push_back(std::move(blk));
  }
  VecLD comp_scale = VecLD::Ones(nact);
  for (Eigen::Index i = 0; i < nact; ++i) {
    LD s = 0.0L;
    for (const auto& blk : bp.blocks)
      s = std::max(s, blk.Fi[static_cast<std::size_t>(i)].cwiseAbs().maxCoeff());
    comp_scale(i) = std::max<LD>(s, 1e-300L);
  }
  for (auto& blk : bp.blocks)
    for (Eigen::Index i = 0; i < nact; ++i)
      blk.Fi[static_cast<std::size_t>(i)] /= comp_scale(i);
  for (Eigen::Index i = 0; i < nact; ++i)
    bp.c(i) = static_cast<LD>(c_int(active[static_cast<std::size_t>(i)])) / comp_scale(i);

  const auto assemble_components = [&](const VecLD& y) {
    Vector full = warm_flat;
    for (Eigen::Index i = 0; i < nact; ++i)
      full(active[static_cast<std::size_t>(i)]) =
          static_cast<double>(y(i) / comp_scale(i));
    return full;
  };

  VecLD y = VecLD::Zero(nact);
  if (have_warm)
    for (Eigen::Index i = 0; i < nact; ++i)
      y(i) = comp_scale(i) * static_cast<LD>(warm_flat(active[static_cast<std::size_t>(i)]));

  int total_newton = 0;
  const LD kappa = 1e-7L;
  bool interior = strictly_feasible(bp, y, 1e-12L);
  if (!interior && have_warm) {
    y.setZero();
    interior = strictly_feasible(bp, y, 1e-12L);
  }

  if (!interior) {
    BarrierProblem p1;
    p1.nvar = nact + 1;
    p1.c = VecLD::Zero(nact + 1);
    p1.c(nact) = 1.0L;
    for (const auto& blk : bp.blocks) {
      Block aug;
      aug.F0 = blk.F0;
      aug.Fi = blk.Fi;
      aug.Fi.push_back(-MatLD::Identity(blk.F0.rows(), blk.F0.cols()));
      p1.blocks.push_back(std::move(aug));
    }
    Block cap;
    cap.F0 = MatLD::Constant(1, 1, 1.0L);
    cap.Fi.assign(static_cast<std::size_t>(nact), MatLD::Zero(1, 1));
    cap.Fi.push_back(MatLD::Constant(1, 1, -1.0L));
    p1.blocks.push_back(std::move(cap));
    // the margin objective is blind to feasible-set rays, so centering would
    // chase them forever; a wide box keeps phase 1 bounded
    const LD box = 1e8L;
    for (Eigen::Index i = 0; i <= nact; ++i) {
      Block b;
      b.F0 = box * MatLD::Identity(2, 2);
      b.Fi.assign(static_cast<std::size_t>(nact) + 1, MatLD::Zero(2, 2));
      b.Fi[static_cast<std::size_t>(i)](0, 0) = 1.0L;
      b.Fi[static_cast<std::size_t>(i)](1, 1) = -1.0L;
      p1.blocks.push_back(std::move(b));
    }
    p1.nu = bp.nu + 1.0L + 2.0L * (static_cast<LD>(nact) + 1.0L);

    LD t0 = 0.0L;
    {
      std::vector<MatLD> F;
      if (!eval_blocks(bp, y, F))
        return finish(SolveStatus::NumericalFailure, assemble_components(y),
                      "initial point evaluation failed");
      for (const auto& Fk : F) {
        Eigen::SelfAdjointEigenSolver<MatLD> es(Fk, Eigen::EigenvaluesOnly);
        t0 = std::min(t0, es.eigenvalues().minCoeff());
      }
      t0 -= 1.0L;
    }
    VecLD y1(nact + 1);
    y1.head(nact) = y;
    y1(nact) = t0;

    BarrierOptions o1;
    o1.mu0 = 1.0L;
    o1.tol_gap_rel = 1e-9L;
    o1.tol_gap_abs = kappa / 10.0L;
    o1.early_stop_obj = 1e-3L;
    o1.obj_cap = 10.0L;
    o1.max_newton = settings.max_iter;
    const BarrierResult r1 = barrier_maximize(p1, y1, o1);
    total_newton += r1.newton_steps;
    report.iterations = total_newton;
    report.infeasibility_level = static_cast<double>(r1.objective);

    if (r1.converged && r1.objective < kappa)
      return finish(SolveStatus::Infeasible, assemble_components(r1.y.head(nact)),
                    "no strictly feasible point found (best uniform margin " +
                        std::to_string(static_cast<double>(r1.objective)) +
                        " on equilibrated scale)");
    if (!r1.converged && r1.objective <= kappa) {
      if (r1.iter_capped)
        return finish(SolveStatus::NumericalFailure, assemble_components(r1.y.head(nact)),
                      "feasibility phase hit max_iter");
      return finish(SolveStatus::NumericalFailure, assemble_components(r1.y.head(nact)),
                    "feasibility phase stalled");
    }
    y = r1.y.head(nact);
  }

  LD zero_check = 0.0L;
  for (Eigen::Index i = 0; i < nact; ++i) zero_check = std::max(zero_check, std::abs(bp.c(i)));
  if (zero_check == 0.0L) {
    report.iterations = total_newton;
    report.gap_estimate = 0.0;
    return finish(SolveStatus::Optimal, assemble_components(y), "objective is constant");
  }

  BarrierOptions o2;
  o2.mu0 = 1.0L + std::abs(bp.c.dot(y));
  o2.tol_gap_rel = static_cast<LD>(settings.tol_gap);
  o2.obj_cap = 1e12L;
  o2.max_newton = settings.max_iter;
  const BarrierResult r2 = barrier_maximize(bp, y, o2);
  total_newton += r2.newton_steps;
  report.iterations = total_newton;
  report.gap_estimate = static_cast<double>(2.0L * r2.gap);

  if (r2.diverged) {
    SolverReport r = finish(SolveStatus::Unbounded, assemble_components(r2.y),
                            "objective exceeded divergence cap");
    r.objective = prog.maximize() ? std::numeric_limits<double>::infinity()
                                  : -std::numeric_limits<double>::infinity();
    return r;
  }
  if (r2.iter_capped)
    return finish(SolveStatus::NumericalFailure, assemble_components(r2.y),
                  "max_iter exceeded; returning the best interior point");
  if (r2.stalled)
    return finish(SolveStatus::NumericalFailure, assemble_components(r2.y),
                  "line search stalled before reaching the target gap");
  return finish(SolveStatus::Optimal, assemble_components(r2.y), "");
}

}  // namespace ddhinf
