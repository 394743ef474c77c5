#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ddhinf/matlin.hpp"

namespace ddhinf {

/// Ground-truth discrete-time LTI plant
///   x+ = A x + B u + w,  y1 = C1 x + D1 u,  y2 = C2 x + D2 u,
/// with row-wise bounds y2 <= y2max. Used for simulation and posterior
/// certification only; synthesis never sees (A, B).
struct PlantModel {
  Matrix A;
  Matrix B;
  Matrix C1;
  Matrix D1;
  Matrix C2;
  Matrix D2;
  Vector y2max;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  Eigen::Index p1() const { return C1.rows(); }
  Eigen::Index p2() const { return C2.rows(); }

  void validate() const;

  /// Three-state single-input benchmark plant with constraints x2 <= 1 and u <= 0.5.
  static PlantModel example44();
};

struct StepResult {
  Vector x_next;
  Vector y1;
  Vector y2;
};

/// One step of the plant recursion.
StepResult step(const PlantModel& plant, const Vector& x, const Vector& u, const Vector& w);

struct TrajectoryRecord {
  int t = 0;
  Vector x;
  Vector u;
  Vector w;
  Vector y1;
  Vector y2;
};

/// Closed-loop record. Consecutive records satisfy the plant recursion exactly.
struct TrajectoryLog {
  std::vector<TrajectoryRecord> steps;
  std::uint64_t seed = 0;
  std::string controller_id;
  double sigma0 = 0.0;

  void write_csv(std::ostream& os) const;
  static TrajectoryLog read_csv(std::istream& is, Eigen::Index n, Eigen::Index m,
                                Eigen::Index p1, Eigen::Index p2);
};

using Feedback = std::function<Vector(int t, const Vector& x)>;

/// Runs the plant for T steps under the given state-feedback callback and
/// disturbance sequence.
TrajectoryLog simulate(const PlantModel& plant, const Feedback& controller, const Vector& x0,
                       const std::vector<Vector>& w_seq, int T);

/// Largest eigenvalue modulus; Schur stable iff < 1.
double spectral_radius(const Matrix& A);

/// sup over frequencies of the largest singular value of Cc (e^{jw} I - Ac)^{-1},
/// computed on a dense grid with local golden-section refinement.
double hinf_norm(const Matrix& Ac, const Matrix& Cc, double tol = 1e-9);

struct HautusReport {
  bool stabilizable = false;
  bool detectable = false;
  std::vector<std::complex<double>> unstabilizable_modes;
  std::vector<std::complex<double>> undetectable_modes;
};

/// Rank tests at every eigenvalue with |lambda| >= 1. Test-harness helper.
HautusReport hautus_check(const PlantModel& plant);

}  // namespace ddhinf
