#include "wmfield/errors.hpp"

#include <cmath>
#include <numbers>

#include "wmfield/fractional.hpp"

namespace wmfield {

const char* norm_name(NormTag norm) {
  switch (norm) {
    case NormTag::L2:
      return "L2";
    case NormTag::H1semi:
      return "H1semi";
    case NormTag::Linf:
      return "Linf";
    case NormTag::CovL2:
      return "CovL2";
    default:
      return "CovLinf";
  }
}

std::optional<NormTag> parse_norm(std::string_view name) {
  if (name == "L2") return NormTag::L2;
  if (name == "H1semi") return NormTag::H1semi;
  if (name == "Linf") return NormTag::Linf;
  if (name == "CovL2") return NormTag::CovL2;
  if (name == "CovLinf") return NormTag::CovLinf;
  return std::nullopt;
}

EvalGrid make_eval_grid(int n_nodes) {
  if (n_nodes < 2) throw std::invalid_argument("make_eval_grid: need at least 2 nodes");
  EvalGrid grid;
  grid.nodes.resize(n_nodes);
  grid.weights.resize(n_nodes);
  const double w = 1.0 / (n_nodes - 1);
  for (int i = 0; i < n_nodes; ++i) {
    grid.nodes[i] = i / static_cast<double>(n_nodes - 1);
    grid.weights[i] = w;
  }
  grid.weights[0] *= 0.5;
  grid.weights[n_nodes - 1] *= 0.5;
  return grid;
}

ErrorContext::ErrorContext(const FeSpace& fe, const ContinuousSpectrum& spectrum,
                           const EvalGrid& grid)
    : lambda(spectrum.eigenvalues),
      mass(assemble_mass(fe)),
      stiffness0(assemble_stiffness(fe, 0.0)),
      pair(sine_product_matrix(fe, spectrum.n_modes(), false)),
      pair_d(sine_product_matrix(fe, spectrum.n_modes(), true)),
      basis_at(basis_eval_matrix(fe, grid.nodes)),
      sine_at(sine_eigenfunction_matrix(grid.nodes, spectrum.n_modes())),
      grid_w(grid.weights) {}

namespace {

void check_provenance(const FieldSample& sample, const Vector& xi, const char* where) {
  if (xi.size() != sample.xi.size() || (xi.array() != sample.xi.array()).any())
    throw std::invalid_argument(std::string(where) +
                                ": xi does not match the draw stored in the sample");
}

// Reference coefficients xi_j lambda_j^{-beta}.
Vector reference_coeffs(const ErrorContext& ctx, double beta, const Vector& xi) {
  return xi.array() * ctx.lambda.array().pow(-beta);
}

double finite_or_throw(double value, const char* where) {
  if (!std::isfinite(value)) throw NumericalError(std::string(where) + ": non-finite error value");
  return value;
}

}  // namespace

double expansion_error_norm(const ErrorContext& ctx, const Vector& coeffs, const Vector& rho,
                            bool derivative) {
  if (coeffs.size() != ctx.mass.rows())
    throw std::invalid_argument("expansion_error_norm: coefficient size mismatch");
  if (rho.size() > ctx.lambda.size())
    throw std::invalid_argument("expansion_error_norm: more reference modes than pairings");

  const Matrix& gram = derivative ? ctx.stiffness0 : ctx.mass;
  const Matrix& pair = derivative ? ctx.pair_d : ctx.pair;

  const double own = coeffs.dot(gram * coeffs);
  const double cross = coeffs.dot(pair.leftCols(rho.size()) * rho);
  // Reference norm accumulated from the smallest (high-frequency) terms up.
  double ref = 0.0;
  for (Eigen::Index j = rho.size() - 1; j >= 0; --j) {
    const double jpi = (j + 1) * std::numbers::pi;
    ref += rho[j] * rho[j] * (derivative ? jpi * jpi : 1.0);
  }
  const double err2 = own - 2.0 * cross + ref;
  return finite_or_throw(std::sqrt(std::max(err2, 0.0)), "expansion_error_norm");
}

double field_error_l2(const ErrorContext& ctx, const FieldSample& sample, const Vector& xi) {
  check_provenance(sample, xi, "field_error_l2");
  return expansion_error_norm(ctx, sample.coeffs, reference_coeffs(ctx, sample.beta, xi), false);
}

double field_error_h1(const ErrorContext& ctx, const FieldSample& sample, const Vector& xi) {
  check_provenance(sample, xi, "field_error_h1");
  return expansion_error_norm(ctx, sample.coeffs, reference_coeffs(ctx, sample.beta, xi), true);
}

double field_error_sup(const ErrorContext& ctx, const FieldSample& sample, const Vector& xi) {
  check_provenance(sample, xi, "field_error_sup");
  const Vector rho = reference_coeffs(ctx, sample.beta, xi);
  const Vector diff = ctx.basis_at * sample.coeffs - ctx.sine_at * rho;
  return finite_or_throw(diff.cwiseAbs().maxCoeff(), "field_error_sup");
}

Matrix reference_covariance(const ErrorContext& ctx, double beta) {
  const Matrix weighted = ctx.sine_at * ctx.lambda.array().pow(-beta).matrix().asDiagonal();
  Matrix rho = weighted * weighted.transpose();
  rho = 0.5 * (rho + rho.transpose()).eval();
  return rho;
}

Matrix grid_covariance(const ErrorContext& ctx, const Matrix& cov) {
  if (cov.rows() != ctx.basis_at.cols() || cov.cols() != ctx.basis_at.cols())
    throw std::invalid_argument("grid_covariance: covariance size mismatch");
  return ctx.basis_at * cov * ctx.basis_at.transpose();
}

double cov_error_l2(const ErrorContext& ctx, const Matrix& rho_h, const Matrix& rho_ref) {
  if (rho_h.rows() != ctx.grid_w.size() || rho_h.cols() != ctx.grid_w.size() ||
      rho_ref.rows() != rho_h.rows() || rho_ref.cols() != rho_h.cols())
    throw std::invalid_argument("cov_error_l2: lattice size mismatch");
  const Matrix diff = rho_h - rho_ref;
  const double err2 = ctx.grid_w.dot(diff.cwiseProduct(diff) * ctx.grid_w);
  return finite_or_throw(std::sqrt(std::max(err2, 0.0)), "cov_error_l2");
}

double cov_error_sup(const Matrix& rho_h, const Matrix& rho_ref) {
  if (rho_h.rows() != rho_ref.rows() || rho_h.cols() != rho_ref.cols())
    throw std::invalid_argument("cov_error_sup: lattice size mismatch");
  return finite_or_throw((rho_h - rho_ref).cwiseAbs().maxCoeff(), "cov_error_sup");
}

std::vector<double> deterministic_frac_error(int n0, int max_level, int degree, double kappa,
                                             double beta, int sigma, const Vector& g_modes) {
  if (sigma != 0 && sigma != 1)
    throw std::invalid_argument("deterministic_frac_error: sigma must be 0 or 1");
  if (g_modes.size() < 1)
    throw std::invalid_argument("deterministic_frac_error: empty load");

  const int n_modes = static_cast<int>(g_modes.size());
  const ContinuousSpectrum spectrum = continuous_spectrum(kappa, n_modes);
  const Vector rho = g_modes.array() * spectrum.eigenvalues.array().pow(-beta);
  const EvalGrid grid = make_eval_grid(2);  // lattice data unused here

  std::vector<double> errors;
  errors.reserve(max_level + 1);
  for (int level = 0; level <= max_level; ++level) {
    const FeSpace fe = make_fespace(build_mesh(n0, level), degree);
    const Matrix M = assemble_mass(fe);
    const Matrix L = assemble_stiffness(fe, kappa);
    DiscreteEigenbasis basis = solve_discrete_eigs(M, L);
    align_signs(basis, fe);

    const ErrorContext ctx(fe, spectrum, grid);
    // L2 projection of g: M c_g = (g, phi_i).
    const Vector load = ctx.pair * g_modes;
    const Vector c_g = Eigen::LLT<Matrix>(M).solve(load);
    const Vector c = exact_discrete_frac(basis, M, beta, c_g);
    errors.push_back(expansion_error_norm(ctx, c, rho, sigma == 1));
  }
  return errors;
}

}  // namespace wmfield
