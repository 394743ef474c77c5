#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ddhinf/datagen.hpp"
#include "ddhinf/matlin.hpp"
#include "ddhinf/plant.hpp"
#include "ddhinf/sdp.hpp"

namespace ddhinf {

/// Inputs of the gain-synthesis program: the data-consistency form, the
/// performance and constrained outputs, the initial state, the forecasted
/// disturbance energy bound sigma0, and the invariance level r0.
struct SynthesisSpec {
  ConsistencyForm form;
  Matrix C1;
  Matrix D1;
  Matrix C2;
  Matrix D2;
  Vector y2max;
  Vector x0;
  double sigma0 = 0.0;
  double r0 = 0.0;
  bool constrained = true;

  Eigen::Index n() const { return form.n; }
  Eigen::Index m() const { return form.m; }
  Eigen::Index p1() const { return C1.rows(); }
  Eigen::Index p2() const { return C2.rows(); }
  void validate() const;

  /// Spec with the performance/constraint shape of a plant model.
  static SynthesisSpec from_plant(const PlantModel& plant, ConsistencyForm form,
                                  const Vector& x0, double sigma0, double r0, bool constrained);
};

/// State-feedback controller with its attenuation certificate.
struct Controller {
  Matrix K;
  SymMatrix P;
  double gamma = 0.0;
  double eta = 0.0;
  Matrix Q;
  Matrix Y;
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<double> margins;
  std::string spec_hash;
};

std::string spec_hash(const SynthesisSpec& spec);
std::string controller_to_json(const Controller& c);
Controller controller_from_json(const std::string& text);

/// Assembles the gain-synthesis semidefinite program: maximize eta over
/// (eta, Q, Y, alpha, beta) subject to the robust-gain inequality over the
/// whole model set, the output-energy condition, and (when constrained) the
/// reach-level and per-row output-bound inequalities. Variable names: "eta",
/// "Q", "Y", "alpha", "beta".
Program build_static(const SynthesisSpec& spec);

/// Reads the optimal point out of the report: K = Y Q^{-1}, P = Q^{-1},
/// gamma = eta^{-1/2}.
Controller extract_controller(const SynthesisSpec& spec, const Program& prog,
                              const SolverReport& report);

struct CertifyCheck {
  std::string name;
  double margin = 0.0;
  bool pass = false;
};

struct CertifyReport {
  std::vector<CertifyCheck> checks;
  bool ok = false;
  int samples_accepted = 0;
  int samples_drawn = 0;
};

/// Ground-truth certification (test harness only): output-energy condition,
/// closed-loop gain condition at the true plant in two algebraically
/// independent forms, the spectral form of the gain bound, the same condition
/// across sampled members of the model set, and the output-constraint support
/// bound cross-checked through schur_reduce.
CertifyReport certify(const Controller& ctrl, const PlantModel& plant, const SynthesisSpec& spec,
                      std::uint64_t sample_seed = 12345, int min_samples = 50);

/// Throws CertificationError naming every failed check.
void require_certified(const CertifyReport& report);

struct R0Search {
  double r0 = 0.0;
  double eta = 0.0;
};

/// Log-grid search for a feasible invariance level in [1e-2, 1e4], returning
/// the level with the largest attenuation objective, if any grid point is
/// feasible.
std::optional<R0Search> find_feasible_r0(const SynthesisSpec& spec,
                                         const SolverSettings& settings = {}, int grid_points = 25);

}  // namespace ddhinf
