#pragma once

#include <Eigen/Dense>

#include "ddhinf/errors.hpp"

namespace ddhinf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense symmetric matrix. Construction symmetrizes as (M + M^T)/2, so the
/// stored entries satisfy entries(i,j) == entries(j,i) exactly.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(Eigen::Index dim);
  static SymMatrix zero(Eigen::Index dim);

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& mat() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  double max_abs() const;

 private:
  Matrix m_;
};

/// Sublevel set {x : x^T P x <= r} of a positive definite quadratic form.
struct Ellipsoid {
  SymMatrix P;
  double r = 0.0;
};

/// Scale-aware PSD tolerance: 1e-7 * (1 + max|entry|).
double psd_tolerance(const SymMatrix& m);

/// Smallest eigenvalue of m. m is PSD within tolerance tau iff the result >= -tau.
double psd_margin(const SymMatrix& m);

/// For M = [[A, B], [B^T, C]] with leading k x k block A positive definite,
/// returns C - B^T A^{-1} B.
SymMatrix schur_reduce(const SymMatrix& m, Eigen::Index k);

/// Support function of the ellipsoid in direction zeta: sqrt(r * zeta^T P^{-1} zeta).
double ellipsoid_support(const Ellipsoid& e, const Vector& zeta);

}  // namespace ddhinf
