#include "ddhinf/matlin.hpp"

#include <cmath>

namespace ddhinf {

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw InputError("SymMatrix: matrix must be square");
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(Eigen::Index dim) {
  return SymMatrix(Matrix::Identity(dim, dim));
}

SymMatrix SymMatrix::zero(Eigen::Index dim) {
  return SymMatrix(Matrix::Zero(dim, dim));
}

double SymMatrix::max_abs() const {
  return m_.size() == 0 ? 0.0 : m_.cwiseAbs().maxCoeff();
}

double psd_tolerance(const SymMatrix& m) {
  return 1e-7 * (1.0 + m.max_abs());
}

double psd_margin(const SymMatrix& m) {
  if (!m.mat().allFinite()) {
    throw InputError("psd_margin: non-finite entries");
  }
  if (m.dim() == 0) {
    return 0.0;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.mat(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

SymMatrix schur_reduce(const SymMatrix& m, Eigen::Index k) {
  const Eigen::Index d = m.dim();
  if (k <= 0 || k >= d) {
    throw InputError("schur_reduce: block size out of range");
  }
  const Matrix a = m.mat().topLeftCorner(k, k);
  const SymMatrix a_sym(a);
  if (psd_margin(a_sym) <= psd_tolerance(a_sym)) {
    throw SingularityError("schur_reduce: leading block not positive definite");
  }
  const Matrix b = m.mat().topRightCorner(k, d - k);
  const Matrix c = m.mat().bottomRightCorner(d - k, d - k);
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw SingularityError("schur_reduce: factorization of leading block failed");
  }
  return SymMatrix(c - b.transpose() * llt.solve(b));
}

double ellipsoid_support(const Ellipsoid& e, const Vector& zeta) {
  if (e.r <= 0.0) {
    throw InputError("ellipsoid_support: level must be positive");
  }
  if (zeta.size() != e.P.dim()) {
    throw InputError("ellipsoid_support: direction dimension mismatch");
  }
  Eigen::LLT<Matrix> llt(e.P.mat());
  if (llt.info() != Eigen::Success || psd_margin(e.P) <= 0.0) {
    throw SingularityError("ellipsoid_support: shape matrix not positive definite");
  }
  const double quad = zeta.dot(llt.solve(zeta));
  return std::sqrt(e.r * std::max(quad, 0.0));
}

}  // namespace ddhinf
