#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace ddhinf {

/// Deterministic random stream. The engine is std::mt19937_64 and every real
/// mapping is spelled out explicitly, so a given seed yields the same sequence
/// on every build of this library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1).
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Standard normal via Box-Muller.
  double gaussian();

  Eigen::VectorXd uniform_vec(Eigen::Index n, double a, double b);
  Eigen::VectorXd gaussian_vec(Eigen::Index n);

  /// Uniformly distributed direction on the unit sphere.
  Eigen::VectorXd unit_vec(Eigen::Index n);

  /// Uniform draw from the closed ball of the given radius.
  Eigen::VectorXd ball(Eigen::Index n, double radius);

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ddhinf
