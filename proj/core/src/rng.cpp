#include "ddhinf/rng.hpp"

#include <cmath>

namespace ddhinf {

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform01();
  while (u1 <= 0.0) {
    u1 = uniform01();
  }
  const double u2 = uniform01();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  const double two_pi = 6.283185307179586476925286766559;
  spare_ = mag * std::sin(two_pi * u2);
  has_spare_ = true;
  return mag * std::cos(two_pi * u2);
}

Eigen::VectorXd Rng::uniform_vec(Eigen::Index n, double a, double b) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v(i) = uniform(a, b);
  }
  return v;
}

Eigen::VectorXd Rng::gaussian_vec(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v(i) = gaussian();
  }
  return v;
}

Eigen::VectorXd Rng::unit_vec(Eigen::Index n) {
  while (true) {
    Eigen::VectorXd v = gaussian_vec(n);
    const double norm = v.norm();
    if (norm > 1e-30) {
      return v / norm;
    }
  }
}

Eigen::VectorXd Rng::ball(Eigen::Index n, double radius) {
  Eigen::VectorXd dir = unit_vec(n);
  const double r = radius * std::pow(uniform01(), 1.0 / static_cast<double>(n));
  return r * dir;
}

}  // namespace ddhinf
