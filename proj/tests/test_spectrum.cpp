#include <doctest.h>

#include <cmath>
#include <numbers>

#include "wmfield/fem.hpp"
#include "wmfield/spectrum.hpp"

using namespace wmfield;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("continuous_spectrum lists shifted Dirichlet eigenvalues") {
  const ContinuousSpectrum sp = continuous_spectrum(0.5, 4);
  REQUIRE(sp.n_modes() == 4);
  CHECK(sp.kappa == 0.5);
  for (int j = 1; j <= 4; ++j)
    CHECK(sp.eigenvalues[j - 1] == doctest::Approx(j * j * kPi * kPi + 0.25).epsilon(1e-15));
  CHECK_THROWS_AS(continuous_spectrum(-1.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(continuous_spectrum(0.5, 0), std::invalid_argument);
}

TEST_CASE("sine_eigenfunction_matrix matches direct evaluation up to high modes") {
  Vector pts(5);
  pts << 0.0, 0.137, 0.5, 0.731, 1.0;
  const Matrix S = sine_eigenfunction_matrix(pts, 400);
  for (int i = 0; i < pts.size(); ++i) {
    for (int j : {1, 2, 3, 50, 399, 400}) {
      const double ref = std::numbers::sqrt2 * std::sin(j * kPi * pts[i]);
      CHECK(std::abs(S(i, j - 1) - ref) < 5e-11);
      if (j <= 3) CHECK(std::abs(sine_eigenfunction(j, pts[i]) - ref) < 1e-14);
    }
  }
}

TEST_CASE("discrete eigenpairs diagonalize the pencil") {
  for (int p : {1, 2}) {
    const FeSpace fe = make_fespace(build_mesh(9, 1), p);
    const Matrix M = assemble_mass(fe);
    const Matrix L = assemble_stiffness(fe, 0.5);
    const DiscreteEigenbasis basis = solve_discrete_eigs(M, L);
    const int n = fe.n_dofs;
    const Matrix& E = basis.eigenvectors;

    CHECK((E.transpose() * M * E - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((E.transpose() * L * E - Matrix(basis.eigenvalues.asDiagonal())).cwiseAbs().maxCoeff() <
          1e-8);
    for (int j = 1; j < n; ++j) CHECK(basis.eigenvalues[j] >= basis.eigenvalues[j - 1]);
  }
}

TEST_CASE("P1 eigenvalues match the closed-form dispersion relation") {
  const FeSpace fe = make_fespace(build_mesh(9, 2), 1);
  const DiscreteEigenbasis basis =
      solve_discrete_eigs(assemble_mass(fe), assemble_stiffness(fe, 0.5));
  const double h = fe.mesh.h;
  for (int j = 1; j <= fe.n_dofs; ++j) {
    const double th = j * kPi * h;
    const double ref = 0.25 + 6.0 / (h * h) * (1.0 - std::cos(th)) / (2.0 + std::cos(th));
    CHECK(basis.eigenvalues[j - 1] == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("solve_discrete_eigs rejects bad input") {
  const Matrix I3 = Matrix::Identity(3, 3);
  CHECK_THROWS_AS(solve_discrete_eigs(-I3, I3), NumericalError);
  CHECK_THROWS_AS(solve_discrete_eigs(Matrix::Identity(2, 2), I3), std::invalid_argument);
}

TEST_CASE("align_signs fixes flipped modes and rejects unmatched ones") {
  const FeSpace fe = make_fespace(build_mesh(9, 1), 2);
  const Matrix M = assemble_mass(fe);
  const Matrix L = assemble_stiffness(fe, 0.5);
  DiscreteEigenbasis basis = solve_discrete_eigs(M, L);
  align_signs(basis, fe);
  const Matrix aligned = basis.eigenvectors;

  const Matrix S = sine_product_matrix(fe, fe.n_dofs);
  for (int j = 0; j < fe.n_dofs; ++j) CHECK(S.col(j).dot(aligned.col(j)) > 0.0);

  basis.eigenvectors.col(0) *= -1.0;
  basis.eigenvectors.col(5) *= -1.0;
  align_signs(basis, fe);
  CHECK((basis.eigenvectors - aligned).cwiseAbs().maxCoeff() == 0.0);

  // A column that resembles no sine mode of its index cannot be aligned.
  basis.eigenvectors.col(0) = basis.eigenvectors.col(fe.n_dofs - 1);
  CHECK_THROWS_AS(align_signs(basis, fe), NumericalError);
}

TEST_CASE("coupling matrix is a square root of the mass matrix") {
  for (int p : {1, 2}) {
    const FeSpace fe = make_fespace(build_mesh(9, 1), p);
    const Matrix M = assemble_mass(fe);
    DiscreteEigenbasis basis = solve_discrete_eigs(M, assemble_stiffness(fe, 0.5));
    align_signs(basis, fe);
    const Matrix R = coupling_matrix(M, basis);
    CHECK((R * R.transpose() - M).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("kl_field reproduces a single-mode expansion value") {
  const ContinuousSpectrum sp = continuous_spectrum(0.5, 10);
  Vector xi = Vector::Zero(10);
  xi[0] = 1.0;
  const double expected = std::numbers::sqrt2 / (kPi * kPi + 0.25);
  CHECK(kl_field(sp, 1.0, xi, 0.5) == doctest::Approx(expected).epsilon(1e-14));
  xi[1] = 2.0;  // even mode vanishes at the midpoint
  CHECK(kl_field(sp, 1.0, xi, 0.5) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("kl_covariance matches the classical bilinear series value") {
  const ContinuousSpectrum sp = continuous_spectrum(0.0, 20000);
  CHECK(kl_covariance(sp, 1.0, 0.5, 0.5) == doctest::Approx(1.0 / 48).epsilon(1e-12));
  CHECK(kl_covariance(sp, 0.8, 0.3, 0.7) == doctest::Approx(kl_covariance(sp, 0.8, 0.7, 0.3)));
}

TEST_CASE("truncation_coeffs decay like the prescribed power") {
  const ContinuousSpectrum sp = continuous_spectrum(0.5, 6);
  const Vector c = truncation_coeffs(sp, 0.8);
  for (int j = 0; j < 6; ++j)
    CHECK(c[j] == doctest::Approx(std::pow(sp.eigenvalues[j], -0.8)).epsilon(1e-15));
}

TEST_CASE("spectral_tail_sum matches brute-force partial sums") {
  // kappa = 0 reference: sum_{j>n} (j pi)^{-2} from the truncated Basel sum.
  double basel = kPi * kPi / 6.0;
  for (int j = 1; j <= 10; ++j) basel -= 1.0 / (static_cast<double>(j) * j);
  CHECK(spectral_tail_sum(0.0, -1.0, 10) == doctest::Approx(basel / (kPi * kPi)).epsilon(1e-10));

  long double brute = 0.0;
  for (int j = 2000000; j > 100; --j) {
    const long double lam = static_cast<long double>(j) * j * kPi * kPi + 0.25L;
    brute += 1.0L / (lam * lam);
  }
  CHECK(spectral_tail_sum(0.5, -2.0, 100) ==
        doctest::Approx(static_cast<double>(brute)).epsilon(1e-9));

  CHECK_THROWS_AS(spectral_tail_sum(0.5, -0.5, 100), std::invalid_argument);
  CHECK_THROWS_AS(spectral_tail_sum(0.5, -1.0, -1), std::invalid_argument);
}

TEST_CASE("low discrete eigenvalues approach the continuous spectrum with refinement") {
  for (int p : {1, 2}) {
    const int window = p == 1 ? 3 : 7;  // half the level-0 dof count
    double prev = 1e9;
    for (int level = 0; level <= 3; ++level) {
      const FeSpace fe = make_fespace(build_mesh(9, level), p);
      const DiscreteEigenbasis basis =
          solve_discrete_eigs(assemble_mass(fe), assemble_stiffness(fe, 0.5));
      double dev = 0.0;
      for (int j = 1; j <= window; ++j) {
        const double lam = j * j * kPi * kPi + 0.25;
        dev = std::max(dev, std::abs(basis.eigenvalues[j - 1] - lam) / lam);
      }
      CHECK(dev < prev);
      prev = dev;
    }

    const FeSpace fe = make_fespace(build_mesh(9, 4), p);
    const DiscreteEigenbasis basis =
        solve_discrete_eigs(assemble_mass(fe), assemble_stiffness(fe, 0.5));
    double dev = 0.0;
    for (int j = 1; j <= fe.n_dofs / 4; ++j) {
      const double lam = j * j * kPi * kPi + 0.25;
      dev = std::max(dev, std::abs(basis.eigenvalues[j - 1] - lam) / lam);
    }
    CHECK(dev <= 0.05);
  }
}
