#pragma once

// Eigenstructure of L = -d^2/dx^2 + kappa^2 on (0,1) with homogeneous
// Dirichlet conditions: the continuous sine eigenbasis, its Galerkin
// counterpart, and the truncated Karhunen-Loeve reference series built
// from it.

#include "wmfield/fem.hpp"
#include "wmfield/types.hpp"

namespace wmfield {

struct ContinuousSpectrum {
  double kappa = 0.0;
  Vector eigenvalues;  // lambda_j = (j pi)^2 + kappa^2, j = 1..n_modes

  int n_modes() const { return static_cast<int>(eigenvalues.size()); }
};

ContinuousSpectrum continuous_spectrum(double kappa, int n_modes);

// e_j(x) = sqrt(2) sin(j pi x).
double sine_eigenfunction(int j, double x);

// S(i, j-1) = e_j(points[i]) for j = 1..n_modes, filled with the stable
// three-term recurrence in j.
Matrix sine_eigenfunction_matrix(const Vector& points, int n_modes);

struct DiscreteEigenbasis {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // columns, M-orthonormal
};

// Generalized eigenpairs of L e = lambda M e via the Cholesky reduction
// M = C C^T, a dense symmetric solve on C^{-1} L C^{-T}, and back-transform.
DiscreteEigenbasis solve_discrete_eigs(const Matrix& M, const Matrix& L);

// Flips eigenvector signs so the L2 pairing with the matching continuous
// sine mode is positive.  Throws NumericalError when a pairing is too close
// to zero for the convention to be well defined.
void align_signs(DiscreteEigenbasis& basis, const FeSpace& fe);

// R = M E for an M-orthonormal eigenvector matrix E; R R^T = M, and R xi
// turns iid standard normals into a load vector with covariance M.
Matrix coupling_matrix(const Matrix& M, const DiscreteEigenbasis& basis);

// Truncated KL expansion sum_j xi_j lambda_j^{-beta} e_j(x).
double kl_field(const ContinuousSpectrum& spectrum, double beta, const Vector& xi, double x);

// Truncated KL covariance sum_j lambda_j^{-2 beta} e_j(x) e_j(y), accumulated
// in decreasing j so the small high-frequency terms are added first.
double kl_covariance(const ContinuousSpectrum& spectrum, double beta, double x, double y);

// lambda_j^{-beta}, j = 1..n_modes.
Vector truncation_coeffs(const ContinuousSpectrum& spectrum, double beta);

// sum_{j > n} ((j pi)^2 + kappa^2)^exponent for exponent < -1/2, evaluated by
// direct summation plus the analytic remainder of the tail integral.
double spectral_tail_sum(double kappa, double exponent, int n);

}  // namespace wmfield
