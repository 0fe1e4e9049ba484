#include <doctest.h>

#include <cmath>

#include "wmfield/fem.hpp"
#include "wmfield/fractional.hpp"
#include "wmfield/rng.hpp"
#include "wmfield/spectrum.hpp"

using namespace wmfield;

namespace {

struct Cell {
  FeSpace fe;
  Matrix M;
  Matrix L;
  DiscreteEigenbasis basis;
};

Cell make_cell(int level, int degree) {
  Cell cell{make_fespace(build_mesh(9, level), degree), {}, {}, {}};
  cell.M = assemble_mass(cell.fe);
  cell.L = assemble_stiffness(cell.fe, 0.5);
  cell.basis = solve_discrete_eigs(cell.M, cell.L);
  align_signs(cell.basis, cell.fe);
  return cell;
}

}  // namespace

TEST_CASE("split_beta separates integer and fractional parts") {
  CHECK(split_beta(0.5).n_beta == 0);
  CHECK(split_beta(0.5).beta_star == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(split_beta(1.7).n_beta == 1);
  CHECK(split_beta(1.7).beta_star == doctest::Approx(0.7).epsilon(1e-12));
  for (double b : {1.0, 2.0, 3.0}) {
    const FractionalExponent frac = split_beta(b);
    CHECK(frac.n_beta == static_cast<int>(b));
    CHECK(frac.beta_star == 0.0);
  }
}

TEST_CASE("split_beta snaps near-integer exponents to the integer branch") {
  const FractionalExponent below = split_beta(1.0 - 1e-12);
  CHECK(below.n_beta == 1);
  CHECK(below.beta_star == 0.0);
  const FractionalExponent above = split_beta(2.0 + 5e-10);
  CHECK(above.n_beta == 2);
  CHECK(above.beta_star == 0.0);
}

TEST_CASE("split_beta rejects the divergent fractional bands") {
  CHECK_THROWS_AS(split_beta(1.01), std::invalid_argument);
  CHECK_THROWS_AS(split_beta(0.981), std::invalid_argument);
  CHECK_THROWS_AS(split_beta(2.019), std::invalid_argument);
  CHECK_THROWS_AS(split_beta(0.0), std::invalid_argument);
  CHECK_THROWS_AS(split_beta(-0.5), std::invalid_argument);
  CHECK(split_beta(1.02).beta_star == doctest::Approx(0.02).epsilon(1e-9));
  CHECK(split_beta(0.98).beta_star == doctest::Approx(0.98).epsilon(1e-15));
}

TEST_CASE("calibrate_k matches hand-computed step sizes") {
  CHECK(calibrate_k(0.5, 1.0 / 32) == doctest::Approx(0.5770780164).epsilon(1e-9));
  CHECK(calibrate_k(1.7, 1.0 / 128) == doctest::Approx(0.1212348).epsilon(1e-6));
  CHECK_THROWS_AS(calibrate_k(0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_k(0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_k(0.5, 0.0), std::invalid_argument);
}

TEST_CASE("make_sinc_rule reproduces the hand-computed node counts") {
  const SincRule sym = make_sinc_rule(0.5, 1.0);
  CHECK(sym.n_minus == 5);
  CHECK(sym.n_plus == 5);
  CHECK(sym.n_nodes() == 11);

  const SincRule skew = make_sinc_rule(0.1, 0.5);
  CHECK(skew.n_minus == 99);
  CHECK(skew.n_plus == 11);

  CHECK_THROWS_AS(make_sinc_rule(0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_sinc_rule(0.005, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_sinc_rule(0.99, 1.0), std::invalid_argument);
}

TEST_CASE("scalar sinc quadrature reproduces fractional powers") {
  const Matrix one = Matrix::Constant(1, 1, 1.0);
  Vector v(1);
  v << 1.0;
  for (double lambda : {2.0, 50.0}) {
    const Matrix L = Matrix::Constant(1, 1, lambda);
    for (double bs : {0.3, 0.5, 0.7}) {
      const SincRule rule = make_sinc_rule(bs, 0.25);
      const double got = apply_sinc(bs, rule, one, L, v)[0];
      const double ref = std::pow(lambda, -bs);
      CHECK(std::abs(got - ref) < 1e-7 * ref);
    }
  }
}

TEST_CASE("apply_sinc agrees with the assembled sinc matrix") {
  const Cell cell = make_cell(0, 1);
  const SincRule rule = make_sinc_rule(0.4, 0.3);
  const Matrix Q = sinc_matrix(0.4, rule, cell.M, cell.L);
  CHECK((Q - Q.transpose()).cwiseAbs().maxCoeff() < 1e-11 * Q.cwiseAbs().maxCoeff());

  const Vector v = NormalSampler(17).draw(cell.fe.n_dofs);
  const Vector direct = apply_sinc(0.4, rule, cell.M, cell.L, v);
  CHECK((direct - Q * v).cwiseAbs().maxCoeff() < 1e-10 * direct.cwiseAbs().maxCoeff());

  CHECK_THROWS_AS(apply_sinc(0.4, rule, cell.M, cell.L, Vector::Ones(3)), std::invalid_argument);
  CHECK_THROWS_AS(apply_sinc(0.005, rule, cell.M, cell.L, v), std::invalid_argument);
  CHECK_THROWS_AS(sinc_matrix(0.4, rule, cell.M, Matrix::Identity(3, 3)), std::invalid_argument);
}

TEST_CASE("integer-order sample operators are iterated inverse solves") {
  const Cell cell = make_cell(1, 1);
  const int n = cell.fe.n_dofs;
  const Matrix I = Matrix::Identity(n, n);

  const SampleOperator t1(split_beta(1.0), 0.5, cell.M, cell.L);
  CHECK((t1.matrix() * cell.L - I).cwiseAbs().maxCoeff() < 1e-10);

  const Matrix Linv = Eigen::LLT<Matrix>(cell.L).solve(I);
  const Matrix ref2 = Linv * cell.M * Linv;
  const SampleOperator t2(split_beta(2.0), 0.5, cell.M, cell.L);
  CHECK((t2.matrix() - ref2).cwiseAbs().maxCoeff() < 1e-12 * ref2.cwiseAbs().maxCoeff());
}

TEST_CASE("fractional sample operator matches the eigenbasis power") {
  const Cell cell = make_cell(1, 1);
  const Matrix& E = cell.basis.eigenvectors;
  const Matrix ref =
      E * cell.basis.eigenvalues.array().pow(-1.5).matrix().asDiagonal() * E.transpose();
  const SampleOperator op(split_beta(1.5), 0.15, cell.M, cell.L);
  CHECK((op.matrix() - ref).cwiseAbs().maxCoeff() < 1e-10 * ref.cwiseAbs().maxCoeff());

  FractionalExponent zero;
  CHECK_THROWS_AS(SampleOperator(zero, 0.5, cell.M, cell.L), std::invalid_argument);
}

TEST_CASE("sample_coeffs is the operator action on the load") {
  const Cell cell = make_cell(0, 2);
  const FractionalExponent frac = split_beta(0.8);
  const double k = calibrate_k(0.8, cell.fe.mesh.h);
  const Vector b = NormalSampler(3).draw(cell.fe.n_dofs);
  const SampleOperator op(frac, k, cell.M, cell.L);
  CHECK((sample_coeffs(frac, k, cell.M, cell.L, b) - op.apply(b)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(sample_coeffs(frac, k, cell.M, cell.L, Vector::Ones(2)), std::invalid_argument);
}

TEST_CASE("the integer branch is continuous across the seam") {
  const Cell cell = make_cell(0, 1);
  const SampleOperator snapped(split_beta(1.0 - 1e-12), 0.4, cell.M, cell.L);
  const SampleOperator exact(split_beta(1.0), 0.4, cell.M, cell.L);
  CHECK((snapped.matrix() - exact.matrix()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("exact_discrete_frac interpolates identity and inverse") {
  const Cell cell = make_cell(1, 2);
  const Vector v = NormalSampler(29).draw(cell.fe.n_dofs);
  CHECK((exact_discrete_frac(cell.basis, cell.M, 0.0, v) - v).cwiseAbs().maxCoeff() <
        1e-11 * v.cwiseAbs().maxCoeff());
  const Vector ref = Eigen::LLT<Matrix>(cell.L).solve(cell.M * v);
  CHECK((exact_discrete_frac(cell.basis, cell.M, 1.0, v) - ref).cwiseAbs().maxCoeff() <
        1e-10 * ref.cwiseAbs().maxCoeff());
  CHECK_THROWS_AS(exact_discrete_frac(cell.basis, cell.M, -1.0, v), std::invalid_argument);
}

TEST_CASE("covariance_matrix is the symmetric PSD operator covariance") {
  const Cell cell = make_cell(1, 1);
  const int n = cell.fe.n_dofs;
  const Matrix Linv = Eigen::LLT<Matrix>(cell.L).solve(Matrix::Identity(n, n));
  const Matrix ref = Linv * cell.M * Linv;
  const Matrix cov = covariance_matrix(split_beta(1.0), 0.5, cell.M, cell.L);
  CHECK((cov - ref).cwiseAbs().maxCoeff() < 1e-12 * ref.cwiseAbs().maxCoeff());
  CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  CHECK(es.eigenvalues().minCoeff() > -1e-12 * cov.cwiseAbs().maxCoeff());
}

TEST_CASE("coloring by the coupling matrix preserves the covariance") {
  for (int p : {1, 2}) {
    const Cell cell = make_cell(1, p);
    const Matrix R = coupling_matrix(cell.M, cell.basis);
    const FractionalExponent frac = split_beta(1.4);
    const double k = calibrate_k(1.4, cell.fe.mesh.h);
    CHECK(covariance_equivalence_check(frac, k, cell.M, cell.L, R) < 1e-12);
    const SampleOperator op(frac, k, cell.M, cell.L);
    CHECK(covariance_equivalence_residual(op, cell.M, R) < 1e-12);
    CHECK_THROWS_AS(covariance_equivalence_residual(op, cell.M, Matrix::Identity(2, 2)),
                    std::invalid_argument);
  }
}

TEST_CASE("Monte Carlo sample covariance converges to the operator covariance") {
  const Cell cell = make_cell(0, 1);
  const int n = cell.fe.n_dofs;
  const Matrix R = coupling_matrix(cell.M, cell.basis);
  const FractionalExponent frac = split_beta(0.8);
  const double k = calibrate_k(0.8, cell.fe.mesh.h);
  const SampleOperator op(frac, k, cell.M, cell.L);
  const Matrix C = covariance_from_operator(op, cell.M);

  const int n_draws = 10000;
  Matrix acc = Matrix::Zero(n, n);
  for (int m = 0; m < n_draws; ++m) {
    const Vector z = op.apply(R * NormalSampler(sample_seed(555, m)).draw(n));
    acc += z * z.transpose();
  }
  acc /= n_draws;

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double se = std::sqrt((C(i, i) * C(j, j) + C(i, j) * C(i, j)) / n_draws);
      CHECK(std::abs(acc(i, j) - C(i, j)) < 5.0 * se);
    }
  }
}
