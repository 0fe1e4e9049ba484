#include "wmfield/spectrum.hpp"

#include <cmath>
#include <numbers>

namespace wmfield {

ContinuousSpectrum continuous_spectrum(double kappa, int n_modes) {
  if (kappa < 0.0) throw std::invalid_argument("continuous_spectrum: kappa must be >= 0");
  if (n_modes < 1) throw std::invalid_argument("continuous_spectrum: n_modes must be >= 1");
  ContinuousSpectrum spec;
  spec.kappa = kappa;
  spec.eigenvalues.resize(n_modes);
  for (int j = 1; j <= n_modes; ++j) {
    const double jpi = j * std::numbers::pi;
    spec.eigenvalues[j - 1] = jpi * jpi + kappa * kappa;
  }
  return spec;
}

double sine_eigenfunction(int j, double x) {
  return std::numbers::sqrt2 * std::sin(j * std::numbers::pi * x);
}

Matrix sine_eigenfunction_matrix(const Vector& points, int n_modes) {
  Matrix S(points.size(), n_modes);
  for (Eigen::Index i = 0; i < points.size(); ++i) {
    const double y = std::numbers::pi * points[i];
    const double s1 = std::sin(y);
    const double c2 = 2.0 * std::cos(y);
    double prev = 0.0;      // sin(0)
    double cur = s1;        // sin(y)
    for (int j = 1; j <= n_modes; ++j) {
      S(i, j - 1) = std::numbers::sqrt2 * cur;
      const double next = c2 * cur - prev;  // sin((j+1) y)
      prev = cur;
      cur = next;
    }
  }
  return S;
}

DiscreteEigenbasis solve_discrete_eigs(const Matrix& M, const Matrix& L) {
  if (M.rows() != M.cols() || L.rows() != L.cols() || M.rows() != L.rows())
    throw std::invalid_argument("solve_discrete_eigs: dimension mismatch");

  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success)
    throw NumericalError("solve_discrete_eigs: mass matrix is not positive definite");

  // A = C^{-1} L C^{-T}, symmetrized against rounding.
  const Matrix half = llt.matrixL().solve(L);
  Matrix A = llt.matrixL().solve(half.transpose());
  A = 0.5 * (A + A.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> solver(A);
  if (solver.info() != Eigen::Success)
    throw NumericalError("solve_discrete_eigs: eigensolver failed");

  DiscreteEigenbasis basis;
  basis.eigenvalues = solver.eigenvalues();
  basis.eigenvectors = llt.matrixU().solve(solver.eigenvectors());
  return basis;
}

void align_signs(DiscreteEigenbasis& basis, const FeSpace& fe) {
  const int n = static_cast<int>(basis.eigenvalues.size());
  if (basis.eigenvectors.cols() != n || basis.eigenvectors.rows() != fe.n_dofs)
    throw std::invalid_argument("align_signs: basis does not match the FE space");
  const Matrix S = sine_product_matrix(fe, n);
  for (int j = 0; j < n; ++j) {
    const double overlap = S.col(j).dot(basis.eigenvectors.col(j));
    if (std::abs(overlap) < 1e-3)
      throw NumericalError("align_signs: degenerate pairing for mode " + std::to_string(j + 1));
    if (overlap < 0.0) basis.eigenvectors.col(j) = -basis.eigenvectors.col(j);
  }
}

Matrix coupling_matrix(const Matrix& M, const DiscreteEigenbasis& basis) {
  if (M.rows() != basis.eigenvectors.rows())
    throw std::invalid_argument("coupling_matrix: dimension mismatch");
  return M * basis.eigenvectors;
}

double kl_field(const ContinuousSpectrum& spectrum, double beta, const Vector& xi, double x) {
  if (xi.size() != spectrum.eigenvalues.size())
    throw std::invalid_argument("kl_field: xi does not match the spectrum");
  double value = 0.0;
  for (int j = 1; j <= spectrum.n_modes(); ++j)
    value += xi[j - 1] * std::pow(spectrum.eigenvalues[j - 1], -beta) * sine_eigenfunction(j, x);
  return value;
}

double kl_covariance(const ContinuousSpectrum& spectrum, double beta, double x, double y) {
  double value = 0.0;
  for (int j = spectrum.n_modes(); j >= 1; --j)
    value += std::pow(spectrum.eigenvalues[j - 1], -2.0 * beta) * sine_eigenfunction(j, x) *
             sine_eigenfunction(j, y);
  return value;
}

Vector truncation_coeffs(const ContinuousSpectrum& spectrum, double beta) {
  return spectrum.eigenvalues.array().pow(-beta);
}

double spectral_tail_sum(double kappa, double exponent, int n) {
  if (exponent >= -0.5) throw std::invalid_argument("spectral_tail_sum: exponent must be < -1/2");
  if (n < 0) throw std::invalid_argument("spectral_tail_sum: n must be >= 0");
  const double pi = std::numbers::pi;
  const int cutoff = n + 50000;
  double sum = 0.0;
  for (int j = cutoff; j > n; --j) {
    const double jpi = j * pi;
    sum += std::pow(jpi * jpi + kappa * kappa, exponent);
  }
  // Midpoint-rule remainder int_{X}^{inf} (pi^2 x^2 + kappa^2)^exponent dx at
  // X = cutoff + 1/2, expanded to first order in kappa^2 / (pi X)^2.
  const double X = cutoff + 0.5;
  const double e = exponent;
  const double lead = std::pow(pi, 2.0 * e) * std::pow(X, 2.0 * e + 1.0) / (-2.0 * e - 1.0);
  const double corr = 1.0 + e * (2.0 * e + 1.0) / (2.0 * e + 3.0) * kappa * kappa / (pi * pi * X * X);
  return sum + lead * corr;
}

}  // namespace wmfield
