#include "ddhinf/synth.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <json.hpp>

#include "ddhinf/errors.hpp"
#include "ddhinf/rng.hpp"
#include "json_util.hpp"

namespace ddhinf {
namespace {

constexpr double kStrictShift = 1e-8;
constexpr double kScalarFloor = 1e-12;

void require_shape(const Matrix& M, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (M.rows() != rows || M.cols() != cols)
    throw InputError(std::string(what) + " has the wrong shape");
  if (!M.allFinite()) throw InputError(std::string(what) + " has non-finite entries");
}

}  // namespace

void SynthesisSpec::validate() const {
  const Eigen::Index nn = form.n;
  const Eigen::Index mm = form.m;
  if (nn <= 0 || mm <= 0) throw InputError("consistency form is empty");
  if (form.N.dim() != 2 * nn + mm) throw InputError("consistency form is malformed");
  if (C1.rows() <= 0) throw InputError("performance output C1 must be non-empty");
  require_shape(C1, C1.rows(), nn, "C1");
  require_shape(D1, C1.rows(), mm, "D1");
  if (C2.rows() != D2.rows()) throw InputError("C2 and D2 must share rows");
  if (C2.rows() > 0) {
    require_shape(C2, C2.rows(), nn, "C2");
    require_shape(D2, C2.rows(), mm, "D2");
  }
  if (y2max.size() != C2.rows()) throw InputError("y2max must have one entry per constrained row");
  if (y2max.size() > 0 && (!y2max.allFinite() || y2max.minCoeff() < 0.0))
    throw InputError("y2max must be finite and >= 0");
  if (x0.size() != nn || !x0.allFinite()) throw InputError("x0 must be a finite n-vector");
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw InputError("sigma0 must be positive");
  if (!(r0 > 0.0) || !std::isfinite(r0)) throw InputError("r0 must be positive");
  if (constrained && C2.rows() == 0)
    throw InputError("constrained synthesis needs at least one constrained output row");
}

SynthesisSpec SynthesisSpec::from_plant(const PlantModel& plant, ConsistencyForm f,
                                        const Vector& x0, double sigma0, double r0,
                                        bool constrained) {
  plant.validate();
  SynthesisSpec spec;
  spec.form = std::move(f);
  spec.C1 = plant.C1;
  spec.D1 = plant.D1;
  spec.C2 = plant.C2;
  spec.D2 = plant.D2;
  spec.y2max = plant.y2max;
  spec.x0 = x0;
  spec.sigma0 = sigma0;
  spec.r0 = r0;
  spec.constrained = constrained;
  spec.validate();
  return spec;
}

std::string spec_hash(const SynthesisSpec& spec) {
  detail::Fnv1a h;
  h.update("synthesis-spec-v1");
  h.update(spec.form.N.mat());
  h.update(spec.C1);
  h.update(spec.D1);
  h.update(spec.C2);
  h.update(spec.D2);
  h.update(Matrix(spec.y2max));
  h.update(Matrix(spec.x0));
  h.update(spec.sigma0);
  h.update(spec.r0);
  h.update(spec.constrained ? "constrained" : "unconstrained");
  return h.hex();
}

std::string controller_to_json(const Controller& c) {
  nlohmann::json doc;
  doc["K"] = detail::matrix_json(c.K);
  doc["Q"] = detail::matrix_json(c.Q);
  doc["Y"] = detail::matrix_json(c.Y);
  doc["P"] = detail::matrix_json(c.P.mat());
  doc["eta"] = c.eta;
  doc["gamma"] = c.gamma;
  doc["alpha"] = c.alpha;
  doc["beta"] = c.beta;
  doc["margins"] = c.margins;
  doc["spec_hash"] = c.spec_hash;
  return doc.dump(2);
}

Controller controller_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("controller JSON: ") + e.what());
  }
  for (const char* key : {"K", "Q", "Y", "P", "eta", "gamma", "alpha", "beta"})
    if (!doc.contains(key)) throw InputError(std::string("controller JSON missing ") + key);
  Controller c;
  c.K = detail::json_matrix(doc["K"], "K");
  c.Q = detail::json_matrix(doc["Q"], "Q");
  c.Y = detail::json_matrix(doc["Y"], "Y");
  c.P = SymMatrix(detail::json_matrix(doc["P"], "P"));
  c.eta = doc["eta"].get<double>();
  c.gamma = doc["gamma"].get<double>();
  c.alpha = doc["alpha"].get<double>();
  c.beta = doc["beta"].get<double>();
  if (doc.contains("margins")) c.margins = doc["margins"].get<std::vector<double>>();
  if (doc.contains("spec_hash")) c.spec_hash = doc["spec_hash"].get<std::string>();
  return c;
}

Program build_static(const SynthesisSpec& spec) {
  spec.validate();
  const double interior = slater_margin(spec.form);
  if (interior <= 0.0)
    throw PreconditionError("model set has empty interior (margin " + std::to_string(interior) +
                            "); collect richer data or enlarge the noise bound");

  const Eigen::Index n = spec.n();
  const Eigen::Index m = spec.m();
  const Eigen::Index p1 = spec.p1();
  const Matrix In = Matrix::Identity(n, n);
  const Matrix Im = Matrix::Identity(m, m);
  const Matrix Ip1 = Matrix::Identity(p1, p1);
  const Matrix one = Matrix::Identity(1, 1);

  Program prog;
  const VarRef eta = prog.add_scalar("eta");
  const VarRef Q = prog.add_sym("Q", n);
  const VarRef Y = prog.add_rect("Y", m, n);
  const VarRef alpha = prog.add_scalar("alpha");
  const VarRef beta = prog.add_scalar("beta");
  prog.set_objective(eta, true);

  // The multiplier alpha scales the data form, so dividing the form by its
  // largest entry only rescales alpha and leaves the program equivalent.
  const double nscale = spec.form.N.max_abs() > 0.0 ? spec.form.N.max_abs() : 1.0;

  {
    LmiBuilder b("robust-gain", {n, n, m, n, p1});
    b.term(0, 0, Q, In, In);
    b.scalar_term(0, 0, eta, In, -1.0);
    b.scalar_term(0, 0, beta, In, -1.0);
    b.term(3, 1, Q, In, In);
    b.term(2, 3, Y, Im, In);
    b.term(3, 3, Q, In, In);
    b.term(4, 3, Q, spec.C1, In);
    b.term(4, 3, Y, spec.D1, In);
    b.constant(4, 4, Ip1);
    b.scalar_term(0, 0, alpha, spec.form.theta.mat() / nscale, -1.0);
    b.scalar_term(1, 0, alpha, spec.form.n21 / nscale, -1.0);
    b.scalar_term(2, 0, alpha, spec.form.n31 / nscale, -1.0);
    b.scalar_term(1, 1, alpha, spec.form.n22.mat() / nscale, -1.0);
    b.scalar_term(2, 1, alpha, spec.form.n32 / nscale, -1.0);
    b.scalar_term(2, 2, alpha, spec.form.n33.mat() / nscale, -1.0);
    prog.add_lmi(b.build());
  }
  {
    LmiBuilder b("output-energy", {n, p1});
    b.term(0, 0, Q, In, In);
    b.term(1, 0, Q, spec.C1, In);
    b.term(1, 0, Y, spec.D1, In);
    b.constant(1, 1, Ip1);
    b.constant(0, 0, -kStrictShift * In);
    b.constant(1, 1, -kStrictShift * Ip1);
    prog.add_lmi(b.build());
  }
  if (spec.constrained) {
    {
      LmiBuilder b("reach-level", {1, n, 1});
      b.constant(0, 0, Matrix::Constant(1, 1, spec.r0));
      b.constant(1, 0, Matrix(spec.x0));
      b.term(1, 1, Q, In, In);
      b.constant(2, 0, one);
      b.scalar_term(2, 2, eta, one, 1.0 / spec.sigma0);
      prog.add_lmi(b.build());
    }
    for (Eigen::Index v = 0; v < spec.p2(); ++v) {
      LmiBuilder b("output-bound-" + std::to_string(v), {1, n});
      b.constant(0, 0, Matrix::Constant(1, 1, spec.y2max(v) * spec.y2max(v) / spec.r0));
      b.term(0, 1, Q, spec.C2.row(v), In);
      b.term(0, 1, Y, spec.D2.row(v), In);
      b.term(1, 1, Q, In, In);
      prog.add_lmi(b.build());
    }
  }
  {
    LmiBuilder b("eta-floor", {1});
    b.constant(0, 0, Matrix::Constant(1, 1, -kScalarFloor));
    b.scalar_term(0, 0, eta, one);
    prog.add_lmi(b.build());
  }
  {
    LmiBuilder b("beta-floor", {1});
    b.constant(0, 0, Matrix::Constant(1, 1, -kScalarFloor));
    b.scalar_term(0, 0, beta, one);
    prog.add_lmi(b.build());
  }
  {
    LmiBuilder b("alpha-floor", {1});
    b.scalar_term(0, 0, alpha, one);
    prog.add_lmi(b.build());
  }
  return prog;
}

Controller extract_controller(const SynthesisSpec& spec, const Program& prog,
                              const SolverReport& report) {
  if (report.status != SolveStatus::Optimal)
    throw UsageError("controller extraction needs an optimal solver report, got " +
                     to_string(report.status));
  const VarRef eta = prog.var("eta");
  const VarRef Q = prog.var("Q");
  const VarRef Y = prog.var("Y");
  const VarRef alpha = prog.var("alpha");
  const VarRef beta = prog.var("beta");
  if (Q.rows != spec.n() || Y.rows != spec.m())
    throw UsageError("program dimensions do not match the synthesis spec");

  Controller ctrl;
  ctrl.Q = report.point.at(Q);
  ctrl.Y = report.point.at(Y);
  ctrl.eta = report.point.scalar(eta);
  ctrl.alpha = report.point.scalar(alpha);
  ctrl.beta = report.point.scalar(beta);

  const SymMatrix Qs(ctrl.Q);
  if (psd_margin(Qs) <= psd_tolerance(Qs))
    throw CertificationError("solution rejected: Q is not positive definite at tolerance");
  if (!(ctrl.eta > 0.0))
    throw CertificationError("solution rejected: attenuation level is not positive");

  Eigen::LLT<Matrix> llt(Qs.mat());
  if (llt.info() != Eigen::Success)
    throw CertificationError("solution rejected: Q factorization failed");
  ctrl.K = llt.solve(ctrl.Y.transpose()).transpose();
  const Matrix Pinv = llt.solve(Matrix::Identity(spec.n(), spec.n()));
  ctrl.P = SymMatrix(Pinv);
  ctrl.gamma = 1.0 / std::sqrt(ctrl.eta);
  ctrl.margins = report.margins;
  ctrl.spec_hash = spec_hash(spec);
  return ctrl;
}

CertifyReport certify(const Controller& ctrl, const PlantModel& plant, const SynthesisSpec& spec,
                      std::uint64_t sample_seed, int min_samples) {
  plant.validate();
  spec.validate();
  const Eigen::Index n = spec.n();
  const Eigen::Index m = spec.m();
  if (ctrl.K.rows() != m || ctrl.K.cols() != n || ctrl.Q.rows() != n || ctrl.Y.rows() != m)
    throw InputError("controller dimensions do not match the spec");
  if (min_samples < 1) throw InputError("min_samples must be positive");

  CertifyReport rep;
  const Matrix Q = 0.5 * (ctrl.Q + ctrl.Q.transpose());
  const Matrix& Y = ctrl.Y;
  const double eta = ctrl.eta;
  const Matrix In = Matrix::Identity(n, n);

  const Matrix CQDY = spec.C1 * Q + spec.D1 * Y;
  const Matrix R = Q - CQDY.transpose() * CQDY;
  const double margin_R = psd_margin(SymMatrix(R));
  rep.checks.push_back({"output-energy", margin_R, margin_R > 0.0});

  const bool r_ok = margin_R > 0.0;
  Eigen::LLT<Matrix> R_llt;
  if (r_ok) R_llt.compute(0.5 * (R + R.transpose()));

  {
    double margin = -std::numeric_limits<double>::infinity();
    if (r_ok && R_llt.info() == Eigen::Success) {
      const Matrix AQBY = plant.A * Q + plant.B * Y;
      const Matrix M = Q - eta * In - AQBY * R_llt.solve(AQBY.transpose());
      margin = psd_margin(SymMatrix(M));
    }
    rep.checks.push_back({"true-plant-gain", margin, margin > 0.0});
  }

  {
    const Matrix P = ctrl.P.mat();
    const double g2 = ctrl.gamma * ctrl.gamma;
    const Matrix level = g2 * In - P;
    const double margin_level = psd_margin(SymMatrix(level));
    double margin = margin_level;
    if (margin_level > 0.0) {
      const Matrix Ac = plant.A + plant.B * ctrl.K;
      const Matrix Cc = spec.C1 + spec.D1 * ctrl.K;
      Eigen::LLT<Matrix> lvl(0.5 * (level + level.transpose()));
      if (lvl.info() == Eigen::Success) {
        const Matrix PAc = P * Ac;
        const Matrix M = P - Ac.transpose() * PAc - Cc.transpose() * Cc -
                         PAc.transpose() * lvl.solve(PAc);
        margin = std::min(margin_level, psd_margin(SymMatrix(M)));
      } else {
        margin = -std::numeric_limits<double>::infinity();
      }
    }
    rep.checks.push_back({"closed-loop-gain", margin, margin > 0.0});
  }

  {
    // same gain condition through the stacked quadratic form, at the true
    // plant and across sampled members of the model set
    double margin = -std::numeric_limits<double>::infinity();
    if (r_ok && R_llt.info() == Eigen::Success) {
      const Eigen::Index d = 2 * n + m;
      Matrix S(n + m, n);
      S.topRows(n) = Q;
      S.bottomRows(m) = Y;
      const Matrix SRS = S * R_llt.solve(S.transpose());
      Matrix T = Matrix::Zero(d, d);
      T.topLeftCorner(n, n) = Q - eta * In;
      T.bottomRightCorner(n + m, n + m) = -SRS;

      const auto form_margin = [&](const Matrix& A, const Matrix& B) {
        Matrix M(d, n);
        M.topRows(n) = In;
        M.middleRows(n, n) = A.transpose();
        M.bottomRows(m) = B.transpose();
        return psd_margin(SymMatrix(M.transpose() * T * M));
      };
      margin = form_margin(plant.A, plant.B);

      const Matrix Trail = spec.form.N.mat().bottomRightCorner(n + m, n + m);
      const Matrix Coup = spec.form.N.mat().topRightCorner(n, n + m);
      Eigen::LLT<Matrix> trail_llt((-Trail).eval());
      if (trail_llt.info() != Eigen::Success)
        throw PreconditionError("model set has no usable center for sampling");
      const Matrix Zc = trail_llt.solve(Coup.transpose());
      Rng rng(sample_seed);
      double scale = 1e-2;
      const int draw_cap = 200 * min_samples + 2000;
      while (rep.samples_accepted < min_samples && rep.samples_drawn < draw_cap) {
        int batch_accepted = 0;
        const int batch = 20;
        for (int i = 0; i < batch; ++i) {
          Matrix G(n + m, n);
          for (Eigen::Index r = 0; r < n + m; ++r)
            for (Eigen::Index c = 0; c < n; ++c) G(r, c) = rng.gaussian();
          const Matrix Z = Zc + scale * G;
          const Matrix A = Z.topRows(n).transpose();
          const Matrix B = Z.bottomRows(m).transpose();
          ++rep.samples_drawn;
          if (membership(spec.form, A, B) >= 0.0) {
            ++batch_accepted;
            ++rep.samples_accepted;
            margin = std::min(margin, form_margin(A, B));
            if (rep.samples_accepted >= min_samples) break;
          }
        }
        const double rate = static_cast<double>(batch_accepted) / batch;
        if (rate < 0.3)
          scale *= 0.5;
        else if (rate > 0.7)
          scale *= 1.6;
      }
      if (rep.samples_accepted < min_samples)
        throw DomainError("model-set sampling failed to accept enough members");
    }
    rep.checks.push_back({"model-set-gain", margin, margin > 0.0});
  }

  if (spec.constrained && spec.p2() > 0) {
    const Matrix L = spec.C2 + spec.D2 * ctrl.K;
    const Matrix CQDY2 = spec.C2 * Q + spec.D2 * Y;
    double margin = std::numeric_limits<double>::infinity();
    bool consistent = true;
    for (Eigen::Index v = 0; v < spec.p2(); ++v) {
      const Vector zeta = L.row(v).transpose();
      const double support = ellipsoid_support(Ellipsoid{ctrl.P, spec.r0}, zeta);
      margin = std::min(margin, spec.y2max(v) - support);

      Matrix lifted(n + 1, n + 1);
      lifted.topLeftCorner(n, n) = Q;
      lifted.block(0, n, n, 1) = CQDY2.row(v).transpose();
      lifted.block(n, 0, 1, n) = CQDY2.row(v);
      lifted(n, n) = spec.y2max(v) * spec.y2max(v) / spec.r0;
      const SymMatrix reduced = schur_reduce(SymMatrix(lifted), n);
      const double lhs = spec.r0 * reduced(0, 0);
      const double rhs = spec.y2max(v) * spec.y2max(v) - support * support;
      if (std::abs(lhs - rhs) > 1e-6 * (1.0 + spec.y2max(v) * spec.y2max(v)))
        consistent = false;
    }
    const double tol = 1e-6 * (1.0 + spec.y2max.maxCoeff());
    rep.checks.push_back({"constraint-support", margin, consistent && margin >= -tol});
  }

  rep.ok = true;
  for (const auto& c : rep.checks) rep.ok = rep.ok && c.pass;
  return rep;
}

void require_certified(const CertifyReport& report) {
  if (report.ok) return;
  std::ostringstream msg;
  msg << "certification failed:";
  for (const auto& c : report.checks)
    if (!c.pass) msg << " " << c.name << " (margin " << c.margin << ")";
  throw CertificationError(msg.str());
}

std::optional<R0Search> find_feasible_r0(const SynthesisSpec& spec, const SolverSettings& settings,
                                         int grid_points) {
  if (grid_points < 2) throw InputError("grid needs at least two points");
  std::optional<R0Search> best;
  const double lo = std::log10(1e-2);
  const double hi = std::log10(1e4);
  for (int i = 0; i < grid_points; ++i) {
    const double f = static_cast<double>(i) / (grid_points - 1);
    SynthesisSpec probe = spec;
    probe.r0 = std::pow(10.0, lo + f * (hi - lo));
    const Program prog = build_static(probe);
    const SolverReport rep = solve(prog, settings);
    if (rep.status == SolveStatus::Optimal && (!best || rep.objective > best->eta))
      best = R0Search{probe.r0, rep.objective};
  }
  return best;
}

}  // namespace ddhinf
