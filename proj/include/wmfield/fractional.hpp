#pragma once

// Discrete fractional solve operators: the sinc quadrature for the fractional
// part of the exponent, the integer-order solve recursion, and the resulting
// sampling and covariance matrices.

#include "wmfield/spectrum.hpp"
#include "wmfield/types.hpp"

namespace wmfield {

struct FractionalExponent {
  double beta = 0.0;
  int n_beta = 0;          // integer part
  double beta_star = 0.0;  // fractional part, 0 or within [0.02, 0.98]
};

// Splits beta > 0 as beta = n_beta + beta_star with beta_star in [0, 1).
// Values within 1e-9 of an integer snap to that integer so the two evaluation
// branches agree at the seam; a fractional part inside (0, 0.02) or
// (0.98, 1) after snapping is rejected because the quadrature node counts
// blow up there.
FractionalExponent split_beta(double beta);

// Calibrated sinc step k = -1 / (beta ln h).
double calibrate_k(double beta, double h);

struct SincRule {
  double k = 0.0;
  int n_minus = 0;  // terms l = -n_minus .. n_plus
  int n_plus = 0;

  int n_nodes() const { return n_minus + n_plus + 1; }
};

// Node layout for the fractional part beta_star at step k:
// n_minus = ceil(pi^2 / (4 beta_star k^2)), n_plus the mirror count with
// 1 - beta_star.
SincRule make_sinc_rule(double beta_star, double k);

// (2 k sin(pi beta_star) / pi) sum_l e^{2 beta_star l k} (M + e^{2 l k} L)^{-1} v,
// one fresh Cholesky factorization per shift.  Approximates the action of the
// discrete fractional inverse on load vectors.
Vector apply_sinc(double beta_star, const SincRule& rule, const Matrix& M, const Matrix& L,
                  const Vector& v);

// The same sum accumulated against the identity.
Matrix sinc_matrix(double beta_star, const SincRule& rule, const Matrix& M, const Matrix& L);

// Dense operator taking a load vector b to sampled field coefficients:
//   L^{-1} (M L^{-1})^{n_beta - 1} b   when beta_star = 0,
//   Q_k (M L^{-1})^{n_beta} b          when beta_star is fractional,
// with Q_k the sinc matrix at step k.  Built once per (beta, mesh, degree)
// cell so repeated samples cost one matrix-vector product.
class SampleOperator {
 public:
  SampleOperator(const FractionalExponent& frac, double k, const Matrix& M, const Matrix& L);

  const Matrix& matrix() const { return T_; }
  Vector apply(const Vector& b) const { return T_ * b; }

 private:
  Matrix T_;
};

Vector sample_coeffs(const FractionalExponent& frac, double k, const Matrix& M, const Matrix& L,
                     const Vector& b);

// sum_j lambda_{j,h}^{-beta} (e_{j,h}^T M v) e_{j,h}: the exact fractional
// solve in the discrete eigenbasis, used as reference for the sinc route.
Vector exact_discrete_frac(const DiscreteEigenbasis& basis, const Matrix& M, double beta,
                           const Vector& v);

// Covariance of the sampled coefficients, T M T^T with T the sample operator,
// assembled as (T C)(T C)^T from M = C C^T so the result is symmetric
// positive semidefinite by construction.
Matrix covariance_from_operator(const SampleOperator& op, const Matrix& M);
Matrix covariance_matrix(const FractionalExponent& frac, double k, const Matrix& M,
                         const Matrix& L);

// Largest entrywise deviation, relative to the largest covariance entry,
// between the covariance built from M and the one built from the coloring
// R R^T.  Small values confirm that loads b = R xi carry covariance M.
double covariance_equivalence_residual(const SampleOperator& op, const Matrix& M, const Matrix& R);
double covariance_equivalence_check(const FractionalExponent& frac, double k, const Matrix& M,
                                    const Matrix& L, const Matrix& R);

}  // namespace wmfield
