#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ddhinf/errors.hpp"
#include "ddhinf/rng.hpp"
#include "ddhinf/sdp.hpp"
#include "oracles.hpp"

using namespace ddhinf;

namespace {

Program box_program(double upper) {
  Program prog = build_program();
  const VarRef t = prog.add_scalar("t");
  LmiBuilder lo("lower", {1});
  lo.scalar_term(0, 0, t, Matrix::Identity(1, 1));
  prog.add_lmi(lo.build());
  LmiBuilder hi("upper", {1});
  hi.constant(0, 0, upper * Matrix::Identity(1, 1));
  hi.scalar_term(0, 0, t, Matrix::Identity(1, 1), -1.0);
  prog.add_lmi(hi.build());
  prog.set_objective(t, true);
  return prog;
}

}  // namespace

TEST_CASE("scalar box program reaches its boundary optimum") {
  Program prog = box_program(1.0);
  const SolverReport rep = solve(prog);
  REQUIRE(rep.status == SolveStatus::Optimal);
  REQUIRE(rep.objective == Catch::Approx(1.0).margin(1e-6));
  REQUIRE(rep.worst_residual >= -1e-8 * 2.0);
  REQUIRE(rep.margins.size() == 2);
  REQUIRE(check_residuals(prog, rep.point) == Catch::Approx(rep.worst_residual).margin(1e-15));
}

TEST_CASE("contradictory scalar bounds are reported infeasible") {
  Program prog = build_program();
  const VarRef t = prog.add_scalar("t");
  LmiBuilder lo("at-least-one", {1});
  lo.constant(0, 0, -Matrix::Identity(1, 1));
  lo.scalar_term(0, 0, t, Matrix::Identity(1, 1));
  prog.add_lmi(lo.build());
  LmiBuilder hi("at-most-minus-one", {1});
  hi.constant(0, 0, -Matrix::Identity(1, 1));
  hi.scalar_term(0, 0, t, Matrix::Identity(1, 1), -1.0);
  prog.add_lmi(hi.build());
  prog.set_objective(t, true);

  const SolverReport rep = solve(prog);
  REQUIRE(rep.status == SolveStatus::Infeasible);
  REQUIRE(rep.infeasibility_level < 0.0);
}

TEST_CASE("objective without a ceiling is reported unbounded") {
  Program prog = build_program();
  const VarRef t = prog.add_scalar("t");
  LmiBuilder lo("lower", {1});
  lo.scalar_term(0, 0, t, Matrix::Identity(1, 1));
  prog.add_lmi(lo.build());
  prog.set_objective(t, true);

  const SolverReport rep = solve(prog);
  REQUIRE(rep.status == SolveStatus::Unbounded);
}

TEST_CASE("largest uniform shift below a matrix recovers its smallest eigenvalue") {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 2 + trial % 3;
    Matrix G(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) G(i, j) = rng.gaussian();
    const SymMatrix A(Matrix(G + G.transpose() + 4.0 * Matrix::Identity(n, n)));

    Program prog = build_program();
    const VarRef t = prog.add_scalar("t");
    LmiBuilder b("shift", {n});
    b.constant(0, 0, A.mat());
    b.scalar_term(0, 0, t, Matrix::Identity(n, n), -1.0);
    prog.add_lmi(b.build());
    LmiBuilder lo("floor", {1});
    lo.constant(0, 0, 100.0 * Matrix::Identity(1, 1));
    lo.scalar_term(0, 0, t, Matrix::Identity(1, 1));
    prog.add_lmi(lo.build());
    prog.set_objective(t, true);

    const SolverReport rep = solve(prog);
    REQUIRE(rep.status == SolveStatus::Optimal);
    const double lam = oracle::jacobi_min_eigenvalue(A.mat());
    REQUIRE(rep.objective == Catch::Approx(lam).margin(1e-6 * (1.0 + std::abs(lam))));
  }
}

TEST_CASE("correlation completion pushes the off-diagonal to one") {
  Program prog = build_program();
  const VarRef x = prog.add_scalar("x");
  Matrix offdiag = Matrix::Zero(2, 2);
  offdiag(0, 1) = 1.0;
  offdiag(1, 0) = 1.0;
  LmiBuilder b("psd", {2});
  b.constant(0, 0, Matrix::Identity(2, 2));
  b.scalar_term(0, 0, x, offdiag);
  prog.add_lmi(b.build());
  prog.set_objective(x, true);

  const SolverReport rep = solve(prog);
  REQUIRE(rep.status == SolveStatus::Optimal);
  REQUIRE(rep.objective == Catch::Approx(1.0).margin(1e-5));
}

TEST_CASE("trace minimization over matrices dominating the identity") {
  Program prog = build_program();
  const VarRef q = prog.add_sym("q", 3);
  LmiBuilder b("dominates-identity", {3});
  b.constant(0, 0, -Matrix::Identity(3, 3));
  b.term(0, 0, q, Matrix::Identity(3, 3), Matrix::Identity(3, 3));
  prog.add_lmi(b.build());
  LmiBuilder cap("cap", {3});
  cap.constant(0, 0, 50.0 * Matrix::Identity(3, 3));
  cap.term(0, 0, q, Matrix::Identity(3, 3), Matrix::Identity(3, 3), -1.0);
  prog.add_lmi(cap.build());
  prog.set_objective({{q, Matrix::Identity(3, 3)}}, false);

  const SolverReport rep = solve(prog);
  REQUIRE(rep.status == SolveStatus::Optimal);
  REQUIRE(rep.objective == Catch::Approx(3.0).margin(1e-4));
  REQUIRE((rep.point.at(q) - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("strictly feasible warm start is honored") {
  Program prog = box_program(2.0);
  const SolverReport cold = solve(prog);
  REQUIRE(cold.status == SolveStatus::Optimal);

  Point warm;
  warm.set_scalar(prog.var("t"), 1.0);
  const SolverReport rep = solve(prog, {}, &warm);
  REQUIRE(rep.status == SolveStatus::Optimal);
  REQUIRE(rep.objective == Catch::Approx(cold.objective).margin(1e-6));
}

TEST_CASE("infeasible warm start still solves correctly") {
  Program prog = box_program(2.0);
  Point warm;
  warm.set_scalar(prog.var("t"), 5.0);
  const SolverReport rep = solve(prog, {}, &warm);
  REQUIRE(rep.status == SolveStatus::Optimal);
  REQUIRE(rep.objective == Catch::Approx(2.0).margin(1e-5));
}

TEST_CASE("solver validates its inputs") {
  Program prog = box_program(1.0);
  SolverSettings bad;
  bad.tol_feas = -1.0;
  REQUIRE_THROWS_AS(solve(prog, bad), InputError);
  bad = SolverSettings{};
  bad.max_iter = 0;
  REQUIRE_THROWS_AS(solve(prog, bad), InputError);

  Program empty = build_program();
  (void)empty.add_scalar("t");
  REQUIRE_THROWS_AS(solve(empty), UsageError);
}

TEST_CASE("reported margins and objective are consistent with the point") {
  Program prog = box_program(1.0);
  const SolverReport rep = solve(prog);
  REQUIRE(rep.objective == Catch::Approx(prog.objective_value(rep.point)).margin(1e-12));
  const auto margins = constraint_margins(prog, rep.point);
  REQUIRE(margins.size() == rep.margins.size());
  for (std::size_t i = 0; i < margins.size(); ++i) {
    REQUIRE(margins[i] == Catch::Approx(rep.margins[i]).margin(1e-12));
  }
  REQUIRE(rep.iterations > 0);
  REQUIRE(rep.solve_time >= 0.0);
  REQUIRE(std::isfinite(rep.gap_estimate));
}
