#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ddhinf/matlin.hpp"
#include "ddhinf/plant.hpp"

namespace ddhinf {

/// Offline data matrices of J one-step transitions: Xplus = A X + B U + W.
/// Wtrue is kept for test harnesses only and is never serialized; synthesis
/// consumes the data only through ConsistencyForm.
struct DataSet {
  Matrix Xplus;
  Matrix X;
  Matrix U;
  Eigen::Index J = 0;
  Matrix Wtrue;

  /// Writes xplus.csv, x.csv, u.csv (columns = data points) and a JSON
  /// sidecar dataset.json with J, eps, seed.
  void write_csv_dir(const std::string& dir, double eps, std::uint64_t seed) const;
  static DataSet read_csv_dir(const std::string& dir);
};

/// Disturbance energy-bound triple: [I W^T]^T blocks Phi with Phi22 negative definite.
struct NoiseModel {
  SymMatrix Phi11;
  Matrix Phi12;
  SymMatrix Phi22;

  void validate() const;
};

/// Pointwise ball bound ||w_j|| <= eps aggregated over J samples:
/// Phi11 = (J eps^2) I, Phi12 = 0, Phi22 = -I.
NoiseModel noise_model_pointwise(double eps, Eigen::Index J, Eigen::Index n);

/// Collects J one-step experiments from the plant: initial states uniform in
/// [-state_bound, state_bound]^n, inputs i.i.d. uniform in
/// [-input_bound, input_bound]^m, disturbances uniform in the ball of radius
/// eps. Deterministic given the seed.
DataSet excite(const PlantModel& plant, Eigen::Index J, double input_bound, double eps,
               std::uint64_t seed, double state_bound = 5.0);

/// Symmetric quadratic form of dimension 2n+m whose nonnegativity in
/// [I A' B']' characterizes the set of models consistent with the data and
/// the noise bound. Blocks are stored individually alongside the assembled form.
struct ConsistencyForm {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  SymMatrix theta;   // n x n
  Matrix n21;        // n x n
  Matrix n31;        // m x n
  SymMatrix n22;     // n x n
  Matrix n32;        // m x n
  SymMatrix n33;     // m x m
  SymMatrix N;       // assembled (2n+m) x (2n+m)

  /// Reassembles the form from the stored blocks.
  SymMatrix assemble() const;
};

ConsistencyForm consistency_form(const DataSet& data, const NoiseModel& noise);

/// psd margin of [I A' B']' N [I A' B']; (A,B) is in the model set iff the
/// margin >= -tau.
double membership(const ConsistencyForm& form, const Matrix& A, const Matrix& B);

struct SlaterPoint {
  Matrix A;
  Matrix B;
  double margin = 0.0;
};

/// Strict-feasibility threshold: 1e-9 * (1 + max|N entry|).
double strict_tolerance(const ConsistencyForm& form);

/// Least-squares model from the normal equations on [X; U], returned when it
/// is strictly inside the model set; nullopt otherwise.
std::optional<SlaterPoint> slater_point(const DataSet& data, const ConsistencyForm& form);

/// Interior size of the model set: min of psd_margin(-N22 block) and the psd
/// margin of the Schur reduction of the form onto its model center. Positive
/// iff the set has nonempty interior.
double slater_margin(const ConsistencyForm& form);

/// Margins for the multiplier-lemma hypotheses on N: trailing block negative
/// semidefinite and its kernel contained in the kernel of the coupling block.
struct FormHypotheses {
  double n22_nsd_margin = 0.0;   // psd margin of -N22 block
  double kernel_leak = 0.0;      // largest coupling norm over N22-kernel directions
  bool ok = false;
};

FormHypotheses form_hypotheses(const ConsistencyForm& form);

}  // namespace ddhinf
