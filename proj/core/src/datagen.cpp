#include "ddhinf/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "ddhinf/errors.hpp"
#include "ddhinf/rng.hpp"

namespace ddhinf {
namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix_csv(const std::string& path, const Matrix& M) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open for writing: " + path);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j > 0) out << ',';
      out << fmt17(M(i, j));
    }
    out << '\n';
  }
}

Matrix read_matrix_csv(const std::string& path, Eigen::Index rows, Eigen::Index cols) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open: " + path);
  Matrix M(rows, cols);
  std::string line;
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!std::getline(in, line))
      throw InputError(path + ": expected " + std::to_string(rows) + " rows");
    std::stringstream ss(line);
    std::string cell;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!std::getline(ss, cell, ','))
        throw InputError(path + ": row " + std::to_string(i) + " is short");
      try {
        M(i, j) = std::stod(cell);
      } catch (const std::exception&) {
        throw InputError(path + ": bad number '" + cell + "'");
      }
    }
    if (std::getline(ss, cell, ','))
      throw InputError(path + ": row " + std::to_string(i) + " has extra columns");
  }
  return M;
}

void require_finite(const Matrix& M, const char* what) {
  if (!M.allFinite()) throw InputError(std::string(what) + " has non-finite entries");
}

}  // namespace

void DataSet::write_csv_dir(const std::string& dir, double eps, std::uint64_t seed) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_matrix_csv(dir + "/xplus.csv", Xplus);
  write_matrix_csv(dir + "/x.csv", X);
  write_matrix_csv(dir + "/u.csv", U);
  nlohmann::json meta;
  meta["J"] = J;
  meta["n"] = Xplus.rows();
  meta["m"] = U.rows();
  meta["eps"] = eps;
  meta["seed"] = seed;
  std::ofstream out(dir + "/dataset.json");
  if (!out) throw InputError("cannot open for writing: " + dir + "/dataset.json");
  out << meta.dump(2) << '\n';
}

DataSet DataSet::read_csv_dir(const std::string& dir) {
  std::ifstream in(dir + "/dataset.json");
  if (!in) throw InputError("cannot open: " + dir + "/dataset.json");
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(dir + "/dataset.json: " + e.what());
  }
  if (!meta.contains("J") || !meta.contains("n") || !meta.contains("m"))
    throw InputError(dir + "/dataset.json: missing J, n, or m");
  const auto J = meta["J"].get<Eigen::Index>();
  const auto n = meta["n"].get<Eigen::Index>();
  const auto m = meta["m"].get<Eigen::Index>();
  if (J <= 0 || n <= 0 || m <= 0) throw InputError("dataset.json: J, n, m must be positive");
  DataSet data;
  data.J = J;
  data.Xplus = read_matrix_csv(dir + "/xplus.csv", n, J);
  data.X = read_matrix_csv(dir + "/x.csv", n, J);
  data.U = read_matrix_csv(dir + "/u.csv", m, J);
  return data;
}

void NoiseModel::validate() const {
  const Eigen::Index n = Phi11.dim();
  const Eigen::Index J = Phi22.dim();
  if (n <= 0 || J <= 0) throw InputError("noise model blocks must be non-empty");
  if (Phi12.rows() != n || Phi12.cols() != J)
    throw InputError("noise model coupling block has wrong shape");
  require_finite(Phi11.mat(), "Phi11");
  require_finite(Phi12, "Phi12");
  require_finite(Phi22.mat(), "Phi22");
  if (psd_margin(SymMatrix(-Phi22.mat())) <= 0.0)
    throw InputError("noise model trailing block must be negative definite");
}

NoiseModel noise_model_pointwise(double eps, Eigen::Index J, Eigen::Index n) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw InputError("eps must be finite and >= 0");
  if (J <= 0) throw InputError("J must be positive");
  if (n <= 0) throw InputError("n must be positive");
  NoiseModel nm{SymMatrix::identity(n), Matrix::Zero(n, J), SymMatrix::identity(J)};
  nm.Phi11 = SymMatrix(Matrix::Identity(n, n) * (static_cast<double>(J) * eps * eps));
  nm.Phi22 = SymMatrix(-Matrix::Identity(J, J));
  return nm;
}

DataSet excite(const PlantModel& plant, Eigen::Index J, double input_bound, double eps,
               std::uint64_t seed, double state_bound) {
  plant.validate();
  if (J <= 0) throw InputError("J must be positive");
  if (!(input_bound > 0.0)) throw InputError("input_bound must be positive");
  if (!(eps >= 0.0)) throw InputError("eps must be >= 0");
  if (!(state_bound > 0.0)) throw InputError("state_bound must be positive");
  const Eigen::Index n = plant.n();
  const Eigen::Index m = plant.m();
  DataSet data;
  data.J = J;
  data.X.resize(n, J);
  data.U.resize(m, J);
  data.Wtrue.resize(n, J);
  data.Xplus.resize(n, J);
  Rng rng(seed);
  for (Eigen::Index j = 0; j < J; ++j) {
    data.X.col(j) = rng.uniform_vec(n, -state_bound, state_bound);
    data.U.col(j) = rng.uniform_vec(m, -input_bound, input_bound);
    data.Wtrue.col(j) = rng.ball(n, eps);
    data.Xplus.col(j) = plant.A * data.X.col(j) + plant.B * data.U.col(j) + data.Wtrue.col(j);
  }
  return data;
}

SymMatrix ConsistencyForm::assemble() const {
  const Eigen::Index d = 2 * n + m;
  Matrix M(d, d);
  M.block(0, 0, n, n) = theta.mat();
  M.block(n, 0, n, n) = n21;
  M.block(0, n, n, n) = n21.transpose();
  M.block(n + n, 0, m, n) = n31;
  M.block(0, n + n, n, m) = n31.transpose();
  M.block(n, n, n, n) = n22.mat();
  M.block(n + n, n, m, n) = n32;
  M.block(n, n + n, n, m) = n32.transpose();
  M.block(n + n, n + n, m, m) = n33.mat();
  return SymMatrix(M);
}

ConsistencyForm consistency_form(const DataSet& data, const NoiseModel& noise) {
  noise.validate();
  const Eigen::Index n = data.Xplus.rows();
  const Eigen::Index m = data.U.rows();
  const Eigen::Index J = data.J;
  if (J <= 0 || data.Xplus.cols() != J || data.X.cols() != J || data.U.cols() != J)
    throw InputError("data matrices must share J columns");
  if (data.X.rows() != n) throw InputError("state matrices must share the state dimension");
  if (m <= 0) throw InputError("input data must be non-empty");
  if (noise.Phi11.dim() != n || noise.Phi22.dim() != J)
    throw InputError("noise model shape does not match the data");
  require_finite(data.Xplus, "Xplus");
  require_finite(data.X, "X");
  require_finite(data.U, "U");

  const Matrix& Xp = data.Xplus;
  const Matrix& X = data.X;
  const Matrix& U = data.U;
  const Matrix& P12 = noise.Phi12;
  const Matrix& P22 = noise.Phi22.mat();

  ConsistencyForm f;
  f.n = n;
  f.m = m;
  f.theta = SymMatrix(noise.Phi11.mat() + Xp * P12.transpose() + P12 * Xp.transpose() +
                      Xp * P22 * Xp.transpose());
  f.n21 = -X * P12.transpose() - X * P22 * Xp.transpose();
  f.n31 = -U * P12.transpose() - U * P22 * Xp.transpose();
  f.n22 = SymMatrix(X * P22 * X.transpose());
  f.n32 = U * P22 * X.transpose();
  f.n33 = SymMatrix(U * P22 * U.transpose());
  f.N = f.assemble();
  return f;
}

double membership(const ConsistencyForm& form, const Matrix& A, const Matrix& B) {
  const Eigen::Index n = form.n;
  const Eigen::Index m = form.m;
  if (A.rows() != n || A.cols() != n) throw InputError("A must be n x n");
  if (B.rows() != n || B.cols() != m) throw InputError("B must be n x m");
  require_finite(A, "A");
  require_finite(B, "B");
  Matrix M(2 * n + m, n);
  M.topRows(n).setIdentity();
  M.middleRows(n, n) = A.transpose();
  M.bottomRows(m) = B.transpose();
  return psd_margin(SymMatrix(M.transpose() * form.N.mat() * M));
}

double strict_tolerance(const ConsistencyForm& form) {
  return 1e-9 * (1.0 + form.N.max_abs());
}

std::optional<SlaterPoint> slater_point(const DataSet& data, const ConsistencyForm& form) {
  const Eigen::Index n = form.n;
  const Eigen::Index m = form.m;
  if (data.X.rows() != n || data.U.rows() != m || data.Xplus.rows() != n)
    throw InputError("data does not match the form dimensions");
  Matrix D(n + m, data.J);
  D.topRows(n) = data.X;
  D.bottomRows(m) = data.U;
  const Matrix G = D * D.transpose();
  Eigen::LDLT<Matrix> ldlt(G);
  if (ldlt.info() != Eigen::Success) return std::nullopt;
  const Vector dv = ldlt.vectorD();
  if (dv.minCoeff() <= 1e-13 * std::max(1.0, dv.maxCoeff())) return std::nullopt;
  const Matrix AB = ldlt.solve(D * data.Xplus.transpose()).transpose();
  SlaterPoint p;
  p.A = AB.leftCols(n);
  p.B = AB.rightCols(m);
  p.margin = membership(form, p.A, p.B);
  if (p.margin <= strict_tolerance(form)) return std::nullopt;
  return p;
}

double slater_margin(const ConsistencyForm& form) {
  const Eigen::Index n = form.n;
  const Eigen::Index m = form.m;
  const Matrix T = form.N.mat().bottomRightCorner(n + m, n + m);
  const double nd = psd_margin(SymMatrix((-T).eval()));
  if (nd <= 0.0) return nd;
  Eigen::LLT<Matrix> llt((-T).eval());
  if (llt.info() != Eigen::Success) return 0.0;
  const Matrix C = form.N.mat().topRightCorner(n, n + m);
  const Matrix S = form.theta.mat() + C * llt.solve(C.transpose());
  return std::min(nd, psd_margin(SymMatrix(S)));
}

FormHypotheses form_hypotheses(const ConsistencyForm& form) {
  const Eigen::Index n = form.n;
  const Eigen::Index m = form.m;
  const Matrix T = form.N.mat().bottomRightCorner(n + m, n + m);
  const Matrix C = form.N.mat().topRightCorner(n, n + m);
  FormHypotheses h;
  h.n22_nsd_margin = psd_margin(SymMatrix((-T).eval()));
  Eigen::SelfAdjointEigenSolver<Matrix> es(T);
  if (es.info() != Eigen::Success) throw DomainError("eigendecomposition failed");
  const double tau = psd_tolerance(SymMatrix(T));
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (std::abs(es.eigenvalues()(i)) <= tau)
      h.kernel_leak = std::max(h.kernel_leak, (C * es.eigenvectors().col(i)).norm());
  }
  h.ok = h.n22_nsd_margin >= -tau && h.kernel_leak <= tau;
  return h;
}

}  // namespace ddhinf
