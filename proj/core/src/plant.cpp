#include "ddhinf/plant.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace ddhinf {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Eigen::Index rank_svd(const Eigen::MatrixXcd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) {
    return 0;
  }
  const double tol = sv(0) * std::max(m.rows(), m.cols()) * 1e-13;
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol) {
      ++r;
    }
  }
  return r;
}

}  // namespace

void PlantModel::validate() const {
  const Eigen::Index nn = n();
  const Eigen::Index mm = m();
  if (A.rows() != nn || A.cols() != nn || B.rows() != nn) {
    throw InputError("PlantModel: A/B dimensions inconsistent");
  }
  if (C1.cols() != nn || D1.rows() != C1.rows() || D1.cols() != mm) {
    throw InputError("PlantModel: C1/D1 dimensions inconsistent");
  }
  if (C2.cols() != nn || D2.rows() != C2.rows() || D2.cols() != mm) {
    throw InputError("PlantModel: C2/D2 dimensions inconsistent");
  }
  if (y2max.size() != C2.rows()) {
    throw InputError("PlantModel: y2max length must equal the row count of C2");
  }
  if ((y2max.array() < 0.0).any()) {
    throw InputError("PlantModel: y2max entries must be non-negative");
  }
  if (!A.allFinite() || !B.allFinite() || !C1.allFinite() || !D1.allFinite() ||
      !C2.allFinite() || !D2.allFinite() || !y2max.allFinite()) {
    throw InputError("PlantModel: non-finite entries");
  }
}

PlantModel PlantModel::example44() {
  PlantModel p;
  p.A.resize(3, 3);
  p.A << 0.8147, 0.9134, 0.2785,
         0.9058, 0.6324, 0.5469,
         0.1270, 0.0975, 0.9575;
  p.B.resize(3, 1);
  p.B << -0.6787, -0.7577, -0.7431;
  p.C1.resize(1, 3);
  p.C1 << 1.0, 0.0, 0.0;
  p.D1 = Matrix::Zero(1, 1);
  p.C2.resize(2, 3);
  p.C2 << 0.0, 1.0, 0.0,
          0.0, 0.0, 0.0;
  p.D2.resize(2, 1);
  p.D2 << 0.0, 1.0;
  p.y2max.resize(2);
  p.y2max << 1.0, 0.5;
  p.validate();
  return p;
}

StepResult step(const PlantModel& plant, const Vector& x, const Vector& u, const Vector& w) {
  if (x.size() != plant.n() || u.size() != plant.m() || w.size() != plant.n()) {
    throw InputError("step: dimension mismatch");
  }
  StepResult r;
  r.x_next = plant.A * x + plant.B * u + w;
  r.y1 = plant.C1 * x + plant.D1 * u;
  r.y2 = plant.C2 * x + plant.D2 * u;
  return r;
}

TrajectoryLog simulate(const PlantModel& plant, const Feedback& controller, const Vector& x0,
                       const std::vector<Vector>& w_seq, int T) {
  plant.validate();
  if (T < 1) {
    throw InputError("simulate: horizon must be at least 1");
  }
  if (static_cast<int>(w_seq.size()) < T) {
    throw InputError("simulate: disturbance sequence shorter than horizon");
  }
  TrajectoryLog log;
  log.steps.reserve(T);
  Vector x = x0;
  for (int t = 0; t < T; ++t) {
    Vector u;
    try {
      u = controller(t, x);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "simulate: controller callback failed at step " << t << ": " << e.what();
      std::throw_with_nested(std::runtime_error(msg.str()));
    }
    const StepResult s = step(plant, x, u, w_seq[t]);
    TrajectoryRecord rec;
    rec.t = t;
    rec.x = x;
    rec.u = u;
    rec.w = w_seq[t];
    rec.y1 = s.y1;
    rec.y2 = s.y2;
    log.steps.push_back(std::move(rec));
    x = s.x_next;
  }
  return log;
}

void TrajectoryLog::write_csv(std::ostream& os) const {
  if (steps.empty()) {
    throw InputError("TrajectoryLog::write_csv: empty log");
  }
  const Eigen::Index n = steps.front().x.size();
  const Eigen::Index m = steps.front().u.size();
  const Eigen::Index p1 = steps.front().y1.size();
  const Eigen::Index p2 = steps.front().y2.size();
  os << "t";
  for (Eigen::Index i = 1; i <= n; ++i) os << ",x" << i;
  for (Eigen::Index i = 1; i <= m; ++i) os << ",u" << i;
  for (Eigen::Index i = 1; i <= n; ++i) os << ",w" << i;
  for (Eigen::Index i = 1; i <= p1; ++i) os << ",y1_" << i;
  for (Eigen::Index i = 1; i <= p2; ++i) os << ",y2_" << i;
  os << "\n";
  for (const auto& rec : steps) {
    os << rec.t;
    for (Eigen::Index i = 0; i < n; ++i) os << "," << fmt17(rec.x(i));
    for (Eigen::Index i = 0; i < m; ++i) os << "," << fmt17(rec.u(i));
    for (Eigen::Index i = 0; i < n; ++i) os << "," << fmt17(rec.w(i));
    for (Eigen::Index i = 0; i < p1; ++i) os << "," << fmt17(rec.y1(i));
    for (Eigen::Index i = 0; i < p2; ++i) os << "," << fmt17(rec.y2(i));
    os << "\n";
  }
}

TrajectoryLog TrajectoryLog::read_csv(std::istream& is, Eigen::Index n, Eigen::Index m,
                                      Eigen::Index p1, Eigen::Index p2) {
  TrajectoryLog log;
  std::string line;
  if (!std::getline(is, line)) {
    throw InputError("TrajectoryLog::read_csv: missing header");
  }
  const Eigen::Index want = 1 + n + m + n + p1 + p2;
  while (std::getline(is, line)) {
    if (line.empty()) {
      continue;
    }
    std::istringstream row(line);
    std::string cell;
    std::vector<double> vals;
    vals.reserve(want);
    while (std::getline(row, cell, ',')) {
      vals.push_back(std::stod(cell));
    }
    if (static_cast<Eigen::Index>(vals.size()) != want) {
      throw InputError("TrajectoryLog::read_csv: wrong column count");
    }
    TrajectoryRecord rec;
    Eigen::Index k = 0;
    rec.t = static_cast<int>(vals[k++]);
    rec.x = Eigen::Map<Vector>(vals.data() + k, n); k += n;
    rec.u = Eigen::Map<Vector>(vals.data() + k, m); k += m;
    rec.w = Eigen::Map<Vector>(vals.data() + k, n); k += n;
    rec.y1 = Eigen::Map<Vector>(vals.data() + k, p1); k += p1;
    rec.y2 = Eigen::Map<Vector>(vals.data() + k, p2);
    log.steps.push_back(std::move(rec));
  }
  return log;
}

double spectral_radius(const Matrix& A) {
  if (A.rows() != A.cols()) {
    throw InputError("spectral_radius: matrix must be square");
  }
  if (!A.allFinite()) {
    throw InputError("spectral_radius: non-finite entries");
  }
  if (A.rows() == 0) {
    return 0.0;
  }
  Eigen::EigenSolver<Matrix> es(A, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

double largest_gain(const Matrix& Ac, const Matrix& Cc, double omega) {
  const Eigen::Index n = Ac.rows();
  const std::complex<double> z = std::polar(1.0, omega);
  Eigen::MatrixXcd zIA = Eigen::MatrixXcd::Identity(n, n) * z - Ac.cast<std::complex<double>>();
  Eigen::MatrixXcd G = Cc.cast<std::complex<double>>() * zIA.partialPivLu().solve(
                           Eigen::MatrixXcd::Identity(n, n));
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(G);
  return svd.singularValues()(0);
}

}  // namespace

double hinf_norm(const Matrix& Ac, const Matrix& Cc, double tol) {
  if (Ac.rows() != Ac.cols() || Cc.cols() != Ac.rows()) {
    throw InputError("hinf_norm: dimension mismatch");
  }
  if (spectral_radius(Ac) >= 1.0) {
    throw DomainError("hinf_norm: matrix is not Schur stable");
  }
  const double pi = 3.1415926535897932384626433832795;
  const int grid = 2048;
  double best = 0.0;
  int best_idx = 0;
  for (int k = 0; k <= grid; ++k) {
    const double omega = pi * static_cast<double>(k) / grid;
    const double g = largest_gain(Ac, Cc, omega);
    if (g > best) {
      best = g;
      best_idx = k;
    }
  }
  double lo = pi * static_cast<double>(std::max(0, best_idx - 1)) / grid;
  double hi = pi * static_cast<double>(std::min(grid, best_idx + 1)) / grid;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo);
  double x2 = lo + gr * (hi - lo);
  double f1 = largest_gain(Ac, Cc, x1);
  double f2 = largest_gain(Ac, Cc, x2);
  for (int it = 0; it < 200 && (hi - lo) > tol * 1e-3 + 1e-15; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = largest_gain(Ac, Cc, x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = largest_gain(Ac, Cc, x1);
    }
  }
  return std::max({best, f1, f2});
}

HautusReport hautus_check(const PlantModel& plant) {
  plant.validate();
  const Eigen::Index n = plant.n();
  HautusReport rep;
  rep.stabilizable = true;
  rep.detectable = true;
  Eigen::EigenSolver<Matrix> es(plant.A, /*computeEigenvectors=*/false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lam = es.eigenvalues()(i);
    if (std::abs(lam) < 1.0) {
      continue;
    }
    Eigen::MatrixXcd pencil(n, n + plant.m());
    pencil.leftCols(n) =
        lam * Eigen::MatrixXcd::Identity(n, n) - plant.A.cast<std::complex<double>>();
    pencil.rightCols(plant.m()) = plant.B.cast<std::complex<double>>();
    if (rank_svd(pencil) < n) {
      rep.stabilizable = false;
      rep.unstabilizable_modes.push_back(lam);
    }
    Eigen::MatrixXcd obs(n + plant.p1(), n);
    obs.topRows(n) =
        lam * Eigen::MatrixXcd::Identity(n, n) - plant.A.cast<std::complex<double>>();
    obs.bottomRows(plant.p1()) = plant.C1.cast<std::complex<double>>();
    if (rank_svd(obs) < n) {
      rep.detectable = false;
      rep.undetectable_modes.push_back(lam);
    }
  }
  return rep;
}

}  // namespace ddhinf
