#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ddhinf/matlin.hpp"
#include "ddhinf/rng.hpp"
#include "oracles.hpp"

using namespace ddhinf;

namespace {

SymMatrix random_spd(Rng& rng, Eigen::Index n, double shift) {
  Matrix G(n, n);
  for (Eigen::Index i = 0; i < n; ++i) G.col(i) = rng.gaussian_vec(n);
  return SymMatrix(Matrix(G * G.transpose() + shift * Matrix::Identity(n, n)));
}

}  // namespace

TEST_CASE("SymMatrix symmetrizes and keeps exact mirror equality") {
  Matrix M(2, 2);
  M << 1.0, 2.0, 4.0, 3.0;
  const SymMatrix S(M);
  CHECK(S(0, 1) == S(1, 0));
  CHECK(S(0, 1) == Catch::Approx(3.0));
  CHECK(S.dim() == 2);
  CHECK(SymMatrix::identity(3).mat() == Matrix::Identity(3, 3));
  CHECK(SymMatrix::zero(2).mat() == Matrix::Zero(2, 2));
  CHECK(S.max_abs() == Catch::Approx(3.0));
}

TEST_CASE("SymMatrix rejects non-square input") {
  CHECK_THROWS_AS(SymMatrix(Matrix::Zero(2, 3)), InputError);
}

TEST_CASE("psd_margin equals the smallest eigenvalue from an independent solver") {
  Rng rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index n = 2 + trial % 4;
    Matrix G(n, n);
    for (Eigen::Index i = 0; i < n; ++i) G.col(i) = rng.gaussian_vec(n);
    const SymMatrix S(Matrix(G + G.transpose()));
    const double margin = psd_margin(S);
    const double jacobi = oracle::jacobi_min_eigenvalue(S.mat());
    CHECK(margin == Catch::Approx(jacobi).margin(1e-10 * (1.0 + S.max_abs())));
  }
}

TEST_CASE("psd_tolerance scales with the largest entry") {
  CHECK(psd_tolerance(SymMatrix::identity(3)) == Catch::Approx(2e-7));
  CHECK(psd_tolerance(SymMatrix::zero(3)) == Catch::Approx(1e-7));
  const SymMatrix big(Matrix(1e6 * Matrix::Identity(2, 2)));
  CHECK(psd_tolerance(big) == Catch::Approx(1e-7 * (1.0 + 1e6)));
}

TEST_CASE("schur_reduce matches the explicit complement on random blocks") {
  Rng rng(202);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index k = 1 + trial % 3;
    const Eigen::Index l = 1 + (trial / 3) % 3;
    const SymMatrix A = random_spd(rng, k, 0.5);
    Matrix B(k, l);
    for (Eigen::Index j = 0; j < l; ++j) B.col(j) = rng.gaussian_vec(k);
    const SymMatrix C = random_spd(rng, l, 0.1);
    Matrix M(k + l, k + l);
    M.topLeftCorner(k, k) = A.mat();
    M.topRightCorner(k, l) = B;
    M.bottomLeftCorner(l, k) = B.transpose();
    M.bottomRightCorner(l, l) = C.mat();
    const SymMatrix reduced = schur_reduce(SymMatrix(M), k);
    const Matrix expected = C.mat() - B.transpose() * A.mat().inverse() * B;
    CHECK((reduced.mat() - expected).cwiseAbs().maxCoeff() <
          1e-3 * (1.0 + expected.cwiseAbs().maxCoeff()));

    const double full = psd_margin(SymMatrix(M));
    const double red = psd_margin(reduced);
    if (full > 1e-9) CHECK(red >= -1e-9 * (1.0 + std::abs(red)));
    if (red < -1e-6) CHECK(full < 1e-9);
  }
}

TEST_CASE("schur_reduce requires a positive definite leading block") {
  Matrix M(2, 2);
  M << -1.0, 0.0, 0.0, 1.0;
  CHECK_THROWS_AS(schur_reduce(SymMatrix(M), 1), SingularityError);
  CHECK_THROWS_AS(schur_reduce(SymMatrix(Matrix::Identity(2, 2)), 0), InputError);
  CHECK_THROWS_AS(schur_reduce(SymMatrix(Matrix::Identity(2, 2)), 2), InputError);
}

TEST_CASE("ellipsoid support agrees with the Monte Carlo oracle") {
  Rng rng(303);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 2 + trial % 2;
    const SymMatrix P = random_spd(rng, n, 0.4);
    const double r = 0.5 + 4.0 * rng.uniform01();
    const Vector zeta = rng.gaussian_vec(n);
    const double exact = ellipsoid_support({P, r}, zeta);
    const double mc = oracle::mc_support(P, r, zeta, 30000, 1000 + trial);
    CHECK(mc <= exact * (1.0 + 1e-9));
    CHECK(std::abs(mc - exact) <= 1e-3 * (1.0 + std::abs(exact)));
  }
}

TEST_CASE("ellipsoid support of the unit ball is the direction norm") {
  const Ellipsoid ball{SymMatrix::identity(3), 1.0};
  Vector zeta(3);
  zeta << 3.0, 0.0, 4.0;
  CHECK(ellipsoid_support(ball, zeta) == Catch::Approx(5.0));
  CHECK(ellipsoid_support(ball, Vector::Zero(3)) == Catch::Approx(0.0));
}

TEST_CASE("ellipsoid support scales as sqrt(r)") {
  Rng rng(404);
  const SymMatrix P = random_spd(rng, 3, 1.0);
  const Vector zeta = rng.gaussian_vec(3);
  const double s1 = ellipsoid_support({P, 1.0}, zeta);
  const double s4 = ellipsoid_support({P, 4.0}, zeta);
  CHECK(s4 == Catch::Approx(2.0 * s1));
}

TEST_CASE("ellipsoid support rejects degenerate shapes") {
  Matrix M(2, 2);
  M << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(ellipsoid_support({SymMatrix(M), 1.0}, Vector::Ones(2)), SingularityError);
  CHECK_THROWS_AS(ellipsoid_support({SymMatrix::identity(2), -1.0}, Vector::Ones(2)), InputError);
}
