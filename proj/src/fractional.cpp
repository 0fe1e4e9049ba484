#include "wmfield/fractional.hpp"

#include <cmath>
#include <numbers>

namespace wmfield {

namespace {

constexpr double kSeamSnap = 1e-9;

void check_square(const Matrix& M, const Matrix& L, const char* where) {
  if (M.rows() != M.cols() || L.rows() != L.cols() || M.rows() != L.rows())
    throw std::invalid_argument(std::string(where) + ": dimension mismatch");
}

// Shift weight and solve matrix for node l.  For l > 0 the solve is written
// as (e^{-2lk} M + L)^{-1} with the factor e^{2lk} folded into the weight, so
// no intermediate can overflow however large the node range gets.
struct ShiftTerm {
  double weight;
  Matrix shifted;
};

ShiftTerm shift_term(double beta_star, double k, int l, const Matrix& M, const Matrix& L) {
  const double lk2 = 2.0 * l * k;
  if (l <= 0) return {std::exp(beta_star * lk2), M + std::exp(lk2) * L};
  return {std::exp((beta_star - 1.0) * lk2), std::exp(-lk2) * M + L};
}

Matrix cholesky_solve(const Matrix& A, const Matrix& rhs, const char* where) {
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success)
    throw NumericalError(std::string(where) + ": shifted matrix is not positive definite");
  return llt.solve(rhs);
}

// Sinc sum applied to an arbitrary right-hand side block.
Matrix sinc_apply_block(double beta_star, const SincRule& rule, const Matrix& M, const Matrix& L,
                        const Matrix& rhs) {
  const double prefactor = 2.0 * rule.k * std::sin(std::numbers::pi * beta_star) / std::numbers::pi;
  Matrix acc = Matrix::Zero(rhs.rows(), rhs.cols());
  for (int l = -rule.n_minus; l <= rule.n_plus; ++l) {
    const ShiftTerm term = shift_term(beta_star, rule.k, l, M, L);
    if (term.weight == 0.0) continue;
    acc += term.weight * cholesky_solve(term.shifted, rhs, "apply_sinc");
  }
  return prefactor * acc;
}

}  // namespace

FractionalExponent split_beta(double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("split_beta: beta must be > 0");
  FractionalExponent frac;
  frac.beta = beta;
  const double nearest = std::round(beta);
  if (nearest > 0.0 && std::abs(beta - nearest) < kSeamSnap) {
    frac.n_beta = static_cast<int>(nearest);
    frac.beta_star = 0.0;
    return frac;
  }
  frac.n_beta = static_cast<int>(std::floor(beta));
  frac.beta_star = beta - frac.n_beta;
  if (frac.beta_star < 0.02 || frac.beta_star > 0.98)
    throw std::invalid_argument(
        "split_beta: fractional part in (0, 0.02) or (0.98, 1) is not supported, "
        "the sinc node count diverges there");
  return frac;
}

double calibrate_k(double beta, double h) {
  if (!(beta > 0.0)) throw std::invalid_argument("calibrate_k: beta must be > 0");
  if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("calibrate_k: h must be in (0, 1)");
  return -1.0 / (beta * std::log(h));
}

SincRule make_sinc_rule(double beta_star, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("make_sinc_rule: k must be > 0");
  if (beta_star < 0.02 || beta_star > 0.98)
    throw std::invalid_argument("make_sinc_rule: beta_star must lie in [0.02, 0.98]");
  const double pi2 = std::numbers::pi * std::numbers::pi;
  SincRule rule;
  rule.k = k;
  rule.n_minus = static_cast<int>(std::ceil(pi2 / (4.0 * beta_star * k * k)));
  rule.n_plus = static_cast<int>(std::ceil(pi2 / (4.0 * (1.0 - beta_star) * k * k)));
  return rule;
}

Vector apply_sinc(double beta_star, const SincRule& rule, const Matrix& M, const Matrix& L,
                  const Vector& v) {
  check_square(M, L, "apply_sinc");
  if (v.size() != M.rows()) throw std::invalid_argument("apply_sinc: vector size mismatch");
  if (beta_star < 0.02 || beta_star > 0.98)
    throw std::invalid_argument("apply_sinc: beta_star must lie in [0.02, 0.98]");
  return sinc_apply_block(beta_star, rule, M, L, v);
}

Matrix sinc_matrix(double beta_star, const SincRule& rule, const Matrix& M, const Matrix& L) {
  check_square(M, L, "sinc_matrix");
  if (beta_star < 0.02 || beta_star > 0.98)
    throw std::invalid_argument("sinc_matrix: beta_star must lie in [0.02, 0.98]");
  return sinc_apply_block(beta_star, rule, M, L, Matrix::Identity(M.rows(), M.cols()));
}

SampleOperator::SampleOperator(const FractionalExponent& frac, double k, const Matrix& M,
                               const Matrix& L) {
  check_square(M, L, "SampleOperator");
  if (frac.n_beta == 0 && frac.beta_star == 0.0)
    throw std::invalid_argument("SampleOperator: beta must be positive");

  Eigen::LLT<Matrix> lltL(L);
  if (lltL.info() != Eigen::Success)
    throw NumericalError("SampleOperator: operator matrix is not positive definite");

  if (frac.beta_star == 0.0) {
    T_ = lltL.solve(Matrix::Identity(L.rows(), L.cols()));
    for (int i = 1; i < frac.n_beta; ++i) T_ = lltL.solve(M * T_);
  } else {
    Matrix G = Matrix::Identity(L.rows(), L.cols());
    for (int i = 0; i < frac.n_beta; ++i) G = M * lltL.solve(G);
    const SincRule rule = make_sinc_rule(frac.beta_star, k);
    const Matrix Q = sinc_matrix(frac.beta_star, rule, M, L);
    T_ = frac.n_beta == 0 ? Q : Matrix(Q * G);
  }
  if (!T_.allFinite()) throw NumericalError("SampleOperator: non-finite entries");
}

Vector sample_coeffs(const FractionalExponent& frac, double k, const Matrix& M, const Matrix& L,
                     const Vector& b) {
  if (b.size() != M.rows()) throw std::invalid_argument("sample_coeffs: load size mismatch");
  return SampleOperator(frac, k, M, L).apply(b);
}

Vector exact_discrete_frac(const DiscreteEigenbasis& basis, const Matrix& M, double beta,
                           const Vector& v) {
  if (beta < 0.0) throw std::invalid_argument("exact_discrete_frac: beta must be >= 0");
  if (v.size() != M.rows() || basis.eigenvectors.rows() != M.rows())
    throw std::invalid_argument("exact_discrete_frac: dimension mismatch");
  Vector w = basis.eigenvectors.transpose() * (M * v);
  w.array() *= basis.eigenvalues.array().pow(-beta);
  return basis.eigenvectors * w;
}

Matrix covariance_from_operator(const SampleOperator& op, const Matrix& M) {
  Eigen::LLT<Matrix> lltM(M);
  if (lltM.info() != Eigen::Success)
    throw NumericalError("covariance_from_operator: mass matrix is not positive definite");
  const Matrix G = op.matrix() * Matrix(lltM.matrixL());
  Matrix cov = G * G.transpose();
  cov = 0.5 * (cov + cov.transpose()).eval();
  return cov;
}

Matrix covariance_matrix(const FractionalExponent& frac, double k, const Matrix& M,
                         const Matrix& L) {
  return covariance_from_operator(SampleOperator(frac, k, M, L), M);
}

double covariance_equivalence_residual(const SampleOperator& op, const Matrix& M,
                                       const Matrix& R) {
  if (R.rows() != M.rows() || R.cols() != M.rows())
    throw std::invalid_argument("covariance_equivalence_residual: R has wrong shape");
  const Matrix cov = covariance_from_operator(op, M);
  const Matrix G = op.matrix() * R;
  Matrix cov_r = G * G.transpose();
  cov_r = 0.5 * (cov_r + cov_r.transpose()).eval();
  return (cov_r - cov).cwiseAbs().maxCoeff() / cov.cwiseAbs().maxCoeff();
}

double covariance_equivalence_check(const FractionalExponent& frac, double k, const Matrix& M,
                                    const Matrix& L, const Matrix& R) {
  return covariance_equivalence_residual(SampleOperator(frac, k, M, L), M, R);
}

}  // namespace wmfield
