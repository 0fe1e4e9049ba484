#pragma once

// Error functionals between sampled FE fields (or covariances) and the
// truncated KL reference.  L2 and H1 errors use exact Gram expansions; the
// sup norms and covariance norms are evaluated on a fixed lattice.

#include <cstdint>
#include <optional>
#include <string_view>

#include "wmfield/fem.hpp"
#include "wmfield/spectrum.hpp"
#include "wmfield/types.hpp"

namespace wmfield {

enum class NormTag { L2, H1semi, Linf, CovL2, CovLinf };

const char* norm_name(NormTag norm);
std::optional<NormTag> parse_norm(std::string_view name);

struct EvalGrid {
  Vector nodes;    // i / (n - 1), i = 0..n-1
  Vector weights;  // trapezoid weights 1 / (n - 1), halved at both ends
};

EvalGrid make_eval_grid(int n_nodes);

struct FieldSample {
  double beta = 0.0;
  int degree = 0;
  int level = 0;
  std::uint64_t seed = 0;
  Vector xi;      // the standard-normal draw behind the load vector
  Vector coeffs;  // FE coefficients of the sampled field
};

// Pairings between an FE space, the sine eigenbasis, and an evaluation grid,
// assembled once and shared by the error functionals below.
struct ErrorContext {
  ErrorContext(const FeSpace& fe, const ContinuousSpectrum& spectrum, const EvalGrid& grid);

  Vector lambda;       // continuous eigenvalues
  Matrix mass;         // (phi_i, phi_j)
  Matrix stiffness0;   // (phi_i', phi_j')
  Matrix pair;         // (phi_i, e_j)
  Matrix pair_d;       // (phi_i', e_j')
  Matrix basis_at;     // grid x N_h basis values
  Matrix sine_at;      // grid x n_modes values of e_j
  Vector grid_w;       // trapezoid weights
};

// || Z_h - Z_ref || with Z_ref = sum_j xi_j lambda_j^{-beta} e_j, via the
// Gram expansion ||Z_h||^2 - 2 (Z_h, Z_ref) + ||Z_ref||^2.  xi must be the
// exact draw stored in the sample (provenance check).
double field_error_l2(const ErrorContext& ctx, const FieldSample& sample, const Vector& xi);
double field_error_h1(const ErrorContext& ctx, const FieldSample& sample, const Vector& xi);

// max_i |Z_h(x_i) - Z_ref(x_i)| over the grid.
double field_error_sup(const ErrorContext& ctx, const FieldSample& sample, const Vector& xi);

// Truncated KL covariance on the grid lattice, sum_j lambda_j^{-2 beta}
// e_j(x) e_j(y).
Matrix reference_covariance(const ErrorContext& ctx, double beta);

// rho_h(x_i, y_j) = phi(x_i)^T Cov phi(y_j) on the grid lattice.
Matrix grid_covariance(const ErrorContext& ctx, const Matrix& cov);

// Lattice L2(D x D) and sup errors between two covariance fields.
double cov_error_l2(const ErrorContext& ctx, const Matrix& rho_h, const Matrix& rho_ref);
double cov_error_sup(const Matrix& rho_h, const Matrix& rho_ref);

// || sum_k coeffs_k phi_k - sum_j rho_j e_j || for an arbitrary reference
// coefficient vector rho, in L2 (derivative = false) or the H1 seminorm.
double expansion_error_norm(const ErrorContext& ctx, const Vector& coeffs, const Vector& rho,
                            bool derivative);

// Errors || L^{-beta} g - L_h^{-beta} P_h g || per level 0..max_level for a
// finite sine load g = sum_m g_modes[m-1] e_m, in L2 (sigma = 0) or the H1
// seminorm (sigma = 1).  The discrete solve uses the exact eigenbasis route,
// so only the Galerkin error is measured.
std::vector<double> deterministic_frac_error(int n0, int max_level, int degree, double kappa,
                                             double beta, int sigma, const Vector& g_modes);

}  // namespace wmfield
