#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddhinf/plant.hpp"

namespace ddhinf {

/// Declarative description of one experiment: plant, excitation, noise model,
/// synthesis parameters, closed-loop simulation, and output layout. Parsed
/// from JSON with strict schema checking (unknown keys are rejected).
struct ScenarioConfig {
  PlantModel plant;
  bool plant_is_example = false;

  struct Data {
    int J = 100;
    double eps = 1e-2;
    double input_bound = 1.0;
    double state_bound = 5.0;
    std::uint64_t seed = 1;
  } data;

  std::string noise = "pointwise";

  struct Synthesis {
    double sigma0 = 1e-2;
    double r0 = 10.0;
    /// When set, r0 is replaced by a feasibility search over a log grid.
    bool auto_r0 = false;
  } synthesis;

  /// Subset of {"baseline", "static", "moving-horizon"}; baseline is the
  /// unconstrained synthesis, static solves once, moving-horizon re-solves
  /// every step.
  std::vector<std::string> controllers = {"baseline", "static", "moving-horizon"};

  struct Simulation {
    Vector x0;
    int T = 200;
    /// "decaying": w(t) = c rho^t d_t with unit d_t and total energy sigma0;
    /// "zero": no disturbance.
    std::string disturbance = "decaying";
    double rho = 0.85;
    /// Energy-forecast headroom h: sigma_t = h * remaining energy. h = 1
    /// reproduces exact updates; h != 1 stress-tests forecast error.
    double headroom = 1.0;
    std::uint64_t seed = 1;
  } simulation;

  struct Outputs {
    std::string dir = "out";
    bool plot_data = true;
  } outputs;

  void validate() const;
  std::string to_json() const;
  static ScenarioConfig from_json(const std::string& text);
  static ScenarioConfig load(const std::string& path);

  /// The built-in three-way comparison setup on the benchmark plant.
  static ScenarioConfig example44_defaults();
};

}  // namespace ddhinf
