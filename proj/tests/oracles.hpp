#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "ddhinf/matlin.hpp"

/// Independent re-implementations used only to cross-check library results.
/// Deliberately avoid the code paths under test: eigenvalues come from a
/// hand-rolled cyclic Jacobi sweep and a characteristic-polynomial root
/// finder, support functions from Monte Carlo boundary sampling, and the
/// dissipation credit from its direct summation form.
namespace oracle {

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
std::vector<double> jacobi_eigenvalues(const ddhinf::Matrix& S);
double jacobi_min_eigenvalue(const ddhinf::Matrix& S);

/// Coefficients c so that det(lambda I - A) = lambda^n + c[0] lambda^{n-1} +
/// ... + c[n-1], via the Faddeev-LeVerrier recursion.
std::vector<double> charpoly(const ddhinf::Matrix& A);

/// All roots of the monic polynomial with the given trailing coefficients,
/// by Durand-Kerner iteration.
std::vector<std::complex<double>> poly_roots(const std::vector<double>& coeffs);

double spectral_radius(const ddhinf::Matrix& A);

/// Support function max { zeta'x : x'Px <= r } estimated by sampling the
/// ellipsoid boundary plus local perturbation refinement.
double mc_support(const ddhinf::SymMatrix& P, double r, const ddhinf::Vector& zeta, int samples,
                  std::uint64_t seed);

/// Direct-summation dissipation credit: -sum_{i=1}^{t-1} (x_i'P_i x_i -
/// x_i'P_{i-1} x_i) for the given state/level sequences.
double delta_direct(const std::vector<ddhinf::Vector>& x, const std::vector<ddhinf::Matrix>& P,
                    int t);

/// Largest singular value of Cc (e^{jw} I - Ac)^{-1} on a uniform frequency
/// grid (a lower bound on the transfer norm).
double hinf_grid(const ddhinf::Matrix& Ac, const ddhinf::Matrix& Cc, int grid_points);

}  // namespace oracle
