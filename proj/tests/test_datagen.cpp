#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <string>

#include "ddhinf/datagen.hpp"
#include "ddhinf/errors.hpp"
#include "ddhinf/plant.hpp"
#include "ddhinf/rng.hpp"
#include "oracles.hpp"

using namespace ddhinf;

namespace {

ConsistencyForm benchmark_form(std::uint64_t seed, Eigen::Index J = 100, double eps = 1e-2) {
  const PlantModel plant = PlantModel::example44();
  const DataSet data = excite(plant, J, 1.0, eps, seed);
  return consistency_form(data, noise_model_pointwise(eps, J, plant.n()));
}

}  // namespace

TEST_CASE("excitation data satisfies the plant recursion with bounded noise") {
  const PlantModel plant = PlantModel::example44();
  const double eps = 1e-2;
  const DataSet data = excite(plant, 100, 1.0, eps, 7);

  REQUIRE(data.J == 100);
  REQUIRE(data.X.rows() == 3);
  REQUIRE(data.X.cols() == 100);
  REQUIRE(data.U.rows() == 1);
  REQUIRE(data.Xplus.rows() == 3);

  const Matrix resid = data.Xplus - plant.A * data.X - plant.B * data.U;
  REQUIRE((resid - data.Wtrue).cwiseAbs().maxCoeff() < 1e-14);
  for (Eigen::Index j = 0; j < data.J; ++j) {
    REQUIRE(data.Wtrue.col(j).norm() <= eps * (1.0 + 1e-12));
    REQUIRE(data.X.col(j).cwiseAbs().maxCoeff() <= 5.0);
    REQUIRE(data.U.col(j).cwiseAbs().maxCoeff() <= 1.0);
  }
}

TEST_CASE("excitation is deterministic in the seed") {
  const PlantModel plant = PlantModel::example44();
  const DataSet a = excite(plant, 40, 1.0, 1e-2, 123);
  const DataSet b = excite(plant, 40, 1.0, 1e-2, 123);
  const DataSet c = excite(plant, 40, 1.0, 1e-2, 124);
  REQUIRE((a.X - b.X).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((a.U - b.U).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((a.Xplus - b.Xplus).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((a.X - c.X).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("pointwise noise model has the documented blocks") {
  const NoiseModel nm = noise_model_pointwise(1e-2, 100, 3);
  REQUIRE((nm.Phi11.mat() - 100 * 1e-4 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(nm.Phi12.rows() == 3);
  REQUIRE(nm.Phi12.cols() == 100);
  REQUIRE(nm.Phi12.cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((nm.Phi22.mat() + Matrix::Identity(100, 100)).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE_NOTHROW(nm.validate());

  REQUIRE_THROWS_AS(noise_model_pointwise(-1.0, 100, 3), InputError);
  REQUIRE_THROWS_AS(noise_model_pointwise(1e-2, 0, 3), InputError);
}

TEST_CASE("noise model validation rejects sign-indefinite trailing blocks") {
  NoiseModel nm = noise_model_pointwise(1e-2, 10, 3);
  nm.Phi22 = SymMatrix::identity(10);
  REQUIRE_THROWS_AS(nm.validate(), InputError);
}

TEST_CASE("consistency form blocks match a hand assembly") {
  const PlantModel plant = PlantModel::example44();
  const Eigen::Index J = 25;
  const double eps = 1e-2;
  const DataSet data = excite(plant, J, 1.0, eps, 42);
  const NoiseModel nm = noise_model_pointwise(eps, J, plant.n());
  const ConsistencyForm form = consistency_form(data, nm);

  const Matrix& Xp = data.Xplus;
  const Matrix theta = nm.Phi11.mat() + Xp * nm.Phi12.transpose() +
                       nm.Phi12 * Xp.transpose() + Xp * nm.Phi22.mat() * Xp.transpose();
  const Matrix n21 = -data.X * nm.Phi12.transpose() - data.X * nm.Phi22.mat() * Xp.transpose();
  const Matrix n31 = -data.U * nm.Phi12.transpose() - data.U * nm.Phi22.mat() * Xp.transpose();
  const Matrix n22 = data.X * nm.Phi22.mat() * data.X.transpose();
  const Matrix n32 = data.U * nm.Phi22.mat() * data.X.transpose();
  const Matrix n33 = data.U * nm.Phi22.mat() * data.U.transpose();

  REQUIRE((form.theta.mat() - theta).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((form.n21 - n21).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((form.n31 - n31).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((form.n22.mat() - n22).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((form.n32 - n32).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((form.n33.mat() - n33).cwiseAbs().maxCoeff() < 1e-12);

  Matrix N(7, 7);
  N.block(0, 0, 3, 3) = theta;
  N.block(3, 0, 3, 3) = n21;
  N.block(6, 0, 1, 3) = n31;
  N.block(0, 3, 3, 3) = n21.transpose();
  N.block(0, 6, 3, 1) = n31.transpose();
  N.block(3, 3, 3, 3) = n22;
  N.block(6, 3, 1, 3) = n32;
  N.block(3, 6, 3, 1) = n32.transpose();
  N.block(6, 6, 1, 1) = n33;
  REQUIRE((form.N.mat() - N).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((form.assemble().mat() - form.N.mat()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("membership evaluates the quadratic form in the model parameters") {
  const PlantModel plant = PlantModel::example44();
  const ConsistencyForm form = benchmark_form(11, 30);

  // Direct evaluation of [I A' B']' N [I A' B'] as the membership oracle.
  Matrix basis(7, 3);
  basis.topRows(3) = Matrix::Identity(3, 3);
  basis.middleRows(3, 3) = plant.A.transpose();
  basis.bottomRows(1) = plant.B.transpose();
  const SymMatrix quad(Matrix(basis.transpose() * form.N.mat() * basis));
  REQUIRE(membership(form, plant.A, plant.B) ==
          Catch::Approx(oracle::jacobi_min_eigenvalue(quad.mat())).margin(1e-10));
}

TEST_CASE("true model passes membership across many seeds") {
  const PlantModel plant = PlantModel::example44();
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const ConsistencyForm form = benchmark_form(seed);
    REQUIRE(membership(form, plant.A, plant.B) >= -1e-9);
  }
}

TEST_CASE("perturbed models far outside the noise level fail membership") {
  const PlantModel plant = PlantModel::example44();
  const ConsistencyForm form = benchmark_form(5);
  Matrix A = plant.A;
  A(0, 0) += 0.5;
  REQUIRE(membership(form, A, plant.B) < 0.0);
}

TEST_CASE("benchmark data admits a strictly interior model") {
  const ConsistencyForm form = benchmark_form(7);
  const double margin = slater_margin(form);
  REQUIRE(margin > 0.0);

  const PlantModel plant = PlantModel::example44();
  const DataSet data = excite(plant, 100, 1.0, 1e-2, 7);
  const auto sp = slater_point(data, form);
  REQUIRE(sp.has_value());
  REQUIRE(sp->margin > strict_tolerance(form));
  REQUIRE(membership(form, sp->A, sp->B) >= sp->margin - 1e-9);
}

TEST_CASE("form hypotheses hold for pointwise-noise data") {
  const ConsistencyForm form = benchmark_form(3, 60);
  const FormHypotheses hyp = form_hypotheses(form);
  REQUIRE(hyp.ok);
  REQUIRE(hyp.n22_nsd_margin >= 0.0);
  REQUIRE(hyp.kernel_leak <= 1e-9);
}

TEST_CASE("dataset survives a CSV directory round trip") {
  namespace fs = std::filesystem;
  const PlantModel plant = PlantModel::example44();
  const DataSet data = excite(plant, 20, 1.0, 1e-2, 31);
  const fs::path dir = fs::temp_directory_path() / "ddhinf_test_dataset";
  fs::remove_all(dir);
  data.write_csv_dir(dir.string(), 1e-2, 31);

  const DataSet back = DataSet::read_csv_dir(dir.string());
  REQUIRE(back.J == data.J);
  REQUIRE((back.Xplus - data.Xplus).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((back.X - data.X).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((back.U - data.U).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(back.Wtrue.size() == 0);
  fs::remove_all(dir);
}

TEST_CASE("excitation rejects nonsense arguments") {
  const PlantModel plant = PlantModel::example44();
  REQUIRE_THROWS_AS(excite(plant, 0, 1.0, 1e-2, 1), InputError);
  REQUIRE_THROWS_AS(excite(plant, 10, -1.0, 1e-2, 1), InputError);
  REQUIRE_THROWS_AS(excite(plant, 10, 1.0, -1e-2, 1), InputError);
}
