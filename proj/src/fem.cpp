#include "wmfield/fem.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace wmfield {

namespace {

double shape_value(int degree, int i, double t) {
  if (degree == 1) return i == 0 ? 1.0 - t : t;
  switch (i) {
    case 0:
      return (1.0 - t) * (1.0 - 2.0 * t);
    case 1:
      return 4.0 * t * (1.0 - t);
    default:
      return t * (2.0 * t - 1.0);
  }
}

// Derivative with respect to the reference coordinate t in [0, 1].
double shape_deriv(int degree, int i, double t) {
  if (degree == 1) return i == 0 ? -1.0 : 1.0;
  switch (i) {
    case 0:
      return 4.0 * t - 3.0;
    case 1:
      return 4.0 - 8.0 * t;
    default:
      return 4.0 * t - 1.0;
  }
}

// Element containing x, with ties at interior nodes resolved to the left.
int element_index(const Mesh1D& mesh, double x) {
  if (x <= 0.0) return 0;
  int e = static_cast<int>(std::ceil(x / mesh.h)) - 1;
  return std::clamp(e, 0, mesh.n_elements - 1);
}

// Coefficients of local shape function i on [a, a + h] in powers of u = x - a.
std::array<double, 3> shape_poly(int degree, int i, double h) {
  if (degree == 1) {
    if (i == 0) return {1.0, -1.0 / h, 0.0};
    return {0.0, 1.0 / h, 0.0};
  }
  const double h2 = h * h;
  switch (i) {
    case 0:
      return {1.0, -3.0 / h, 2.0 / h2};
    case 1:
      return {0.0, 4.0 / h, -4.0 / h2};
    default:
      return {0.0, -1.0 / h, 2.0 / h2};
  }
}

}  // namespace

Mesh1D build_mesh(int n0, int level) {
  if (n0 < 3) throw std::invalid_argument("build_mesh: need n0 >= 3");
  if (level < 0 || level > 24) throw std::invalid_argument("build_mesh: level out of range");
  Mesh1D mesh;
  mesh.level = level;
  mesh.n_elements = (n0 - 1) << level;
  mesh.h = 1.0 / mesh.n_elements;
  mesh.nodes.resize(mesh.n_elements + 1);
  for (int i = 0; i <= mesh.n_elements; ++i) mesh.nodes[i] = i * mesh.h;
  mesh.nodes.back() = 1.0;
  return mesh;
}

FeSpace make_fespace(const Mesh1D& mesh, int degree) {
  if (degree != 1 && degree != 2) throw std::invalid_argument("make_fespace: degree must be 1 or 2");
  if (mesh.n_elements < 2) throw std::invalid_argument("make_fespace: mesh has no interior node");

  FeSpace fe;
  fe.mesh = mesh;
  fe.degree = degree;
  const int ne = mesh.n_elements;
  if (degree == 1) {
    fe.n_dofs = ne - 1;
    fe.dof_coords.resize(fe.n_dofs);
    for (int v = 1; v < ne; ++v) fe.dof_coords[v - 1] = mesh.nodes[v];
    fe.element_dofs.resize(ne);
    for (int e = 0; e < ne; ++e)
      fe.element_dofs[e] = {e == 0 ? -1 : e - 1, e == ne - 1 ? -1 : e};
  } else {
    // Numbered by coordinate: midpoint of element e is dof 2e, interior
    // vertex v is dof 2v - 1.
    fe.n_dofs = 2 * ne - 1;
    fe.dof_coords.resize(fe.n_dofs);
    for (int e = 0; e < ne; ++e) fe.dof_coords[2 * e] = mesh.nodes[e] + 0.5 * mesh.h;
    for (int v = 1; v < ne; ++v) fe.dof_coords[2 * v - 1] = mesh.nodes[v];
    fe.element_dofs.resize(ne);
    for (int e = 0; e < ne; ++e)
      fe.element_dofs[e] = {e == 0 ? -1 : 2 * e - 1, 2 * e,
                            e == ne - 1 ? -1 : 2 * (e + 1) - 1};
  }
  return fe;
}

void gauss_legendre(int n, std::vector<double>& points, std::vector<double>& weights) {
  // Nodes x and weights w on [-1, 1]; shifted to [0, 1] below.
  std::vector<double> x, w;
  switch (n) {
    case 2: {
      const double a = 1.0 / std::sqrt(3.0);
      x = {-a, a};
      w = {1.0, 1.0};
      break;
    }
    case 3: {
      const double a = std::sqrt(0.6);
      x = {-a, 0.0, a};
      w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
      break;
    }
    case 4: {
      const double s = std::sqrt(6.0 / 5.0);
      const double a = std::sqrt((3.0 - 2.0 * s) / 7.0);
      const double b = std::sqrt((3.0 + 2.0 * s) / 7.0);
      const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
      const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
      x = {-b, -a, a, b};
      w = {wb, wa, wa, wb};
      break;
    }
    case 5: {
      const double s = std::sqrt(10.0 / 7.0);
      const double a = std::sqrt(5.0 - 2.0 * s) / 3.0;
      const double b = std::sqrt(5.0 + 2.0 * s) / 3.0;
      const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
      const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
      x = {-b, -a, 0.0, a, b};
      w = {wb, wa, 128.0 / 225.0, wa, wb};
      break;
    }
    default:
      throw std::invalid_argument("gauss_legendre: n must be in 2..5");
  }
  points.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    points[i] = 0.5 * (x[i] + 1.0);
    weights[i] = 0.5 * w[i];
  }
}

namespace {

enum class LocalForm { Mass, Stiffness };

Matrix assemble(const FeSpace& fe, LocalForm form, double kappa) {
  const int p = fe.degree;
  const int nq = (2 * p + 1 + 1) / 2 + 1;  // ceil((2p+1)/2) + 1
  std::vector<double> qt, qw;
  gauss_legendre(nq, qt, qw);

  const int nloc = p + 1;
  const double h = fe.mesh.h;
  Matrix local_mass = Matrix::Zero(nloc, nloc);
  Matrix local_grad = Matrix::Zero(nloc, nloc);
  for (int q = 0; q < nq; ++q) {
    for (int i = 0; i < nloc; ++i) {
      for (int j = 0; j < nloc; ++j) {
        local_mass(i, j) += qw[q] * h * shape_value(p, i, qt[q]) * shape_value(p, j, qt[q]);
        local_grad(i, j) += qw[q] / h * shape_deriv(p, i, qt[q]) * shape_deriv(p, j, qt[q]);
      }
    }
  }
  Matrix local = form == LocalForm::Mass ? local_mass
                                         : Matrix(local_grad + kappa * kappa * local_mass);

  Matrix A = Matrix::Zero(fe.n_dofs, fe.n_dofs);
  for (const auto& dofs : fe.element_dofs) {
    for (int i = 0; i < nloc; ++i) {
      if (dofs[i] < 0) continue;
      for (int j = 0; j < nloc; ++j) {
        if (dofs[j] < 0) continue;
        A(dofs[i], dofs[j]) += local(i, j);
      }
    }
  }
  return A;
}

}  // namespace

Matrix assemble_mass(const FeSpace& fe) { return assemble(fe, LocalForm::Mass, 0.0); }

Matrix assemble_stiffness(const FeSpace& fe, double kappa) {
  if (kappa < 0.0) throw std::invalid_argument("assemble_stiffness: kappa must be >= 0");
  return assemble(fe, LocalForm::Stiffness, kappa);
}

double eval_fe(const FeSpace& fe, const Vector& coeffs, double x, int derivative_order) {
  if (coeffs.size() != fe.n_dofs) throw std::invalid_argument("eval_fe: coefficient size mismatch");
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("eval_fe: x outside [0, 1]");
  if (derivative_order != 0 && derivative_order != 1)
    throw std::invalid_argument("eval_fe: derivative_order must be 0 or 1");

  const int e = element_index(fe.mesh, x);
  const double t = (x - fe.mesh.nodes[e]) / fe.mesh.h;
  const auto& dofs = fe.element_dofs[e];
  double value = 0.0;
  for (int i = 0; i < static_cast<int>(dofs.size()); ++i) {
    if (dofs[i] < 0) continue;
    const double s = derivative_order == 0 ? shape_value(fe.degree, i, t)
                                           : shape_deriv(fe.degree, i, t) / fe.mesh.h;
    value += coeffs[dofs[i]] * s;
  }
  return value;
}

Matrix basis_eval_matrix(const FeSpace& fe, const Vector& points) {
  Matrix B = Matrix::Zero(points.size(), fe.n_dofs);
  for (Eigen::Index r = 0; r < points.size(); ++r) {
    const double x = points[r];
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("basis_eval_matrix: point outside [0, 1]");
    const int e = element_index(fe.mesh, x);
    const double t = (x - fe.mesh.nodes[e]) / fe.mesh.h;
    const auto& dofs = fe.element_dofs[e];
    for (int i = 0; i < static_cast<int>(dofs.size()); ++i)
      if (dofs[i] >= 0) B(r, dofs[i]) = shape_value(fe.degree, i, t);
  }
  return B;
}

namespace {

// Accumulates the exact integrals of the local shape polynomials against
// sin(omega x) (value) or their derivatives against omega cos(omega x)
// (derivative), using the antiderivative of polynomial times trig.
void add_sine_products(const FeSpace& fe, double omega, bool derivative, Vector& out) {
  const int nloc = fe.degree + 1;
  const double h = fe.mesh.h;
  const double sqrt2 = std::numbers::sqrt2;
  for (int e = 0; e < fe.mesh.n_elements; ++e) {
    const double a = fe.mesh.nodes[e];
    const double b = fe.mesh.nodes[e + 1];
    const double sa = std::sin(omega * a), ca = std::cos(omega * a);
    const double sb = std::sin(omega * b), cb = std::cos(omega * b);
    for (int i = 0; i < nloc; ++i) {
      const int g = fe.element_dofs[e][i];
      if (g < 0) continue;
      const auto c = shape_poly(fe.degree, i, h);
      const double q0 = c[0];
      const double qh = c[0] + c[1] * h + c[2] * h * h;
      const double d0 = c[1];
      const double dh = c[1] + 2.0 * c[2] * h;
      const double q2 = 2.0 * c[2];
      double integral;
      if (!derivative) {
        integral = (q0 * ca - qh * cb) / omega + (dh * sb - d0 * sa) / (omega * omega) +
                   q2 * (cb - ca) / (omega * omega * omega);
      } else {
        integral = (dh * sb - d0 * sa) + q2 * (cb - ca) / omega;
      }
      out[g] += sqrt2 * integral;
    }
  }
}

}  // namespace

Vector sine_inner_products(const FeSpace& fe, int j, bool derivative) {
  if (j < 1) throw std::invalid_argument("sine_inner_products: j must be >= 1");
  Vector s = Vector::Zero(fe.n_dofs);
  add_sine_products(fe, j * std::numbers::pi, derivative, s);
  return s;
}

Matrix sine_product_matrix(const FeSpace& fe, int n_modes, bool derivative) {
  if (n_modes < 1) throw std::invalid_argument("sine_product_matrix: n_modes must be >= 1");
  Matrix S = Matrix::Zero(fe.n_dofs, n_modes);
  Vector col(fe.n_dofs);
  for (int j = 1; j <= n_modes; ++j) {
    col.setZero();
    add_sine_products(fe, j * std::numbers::pi, derivative, col);
    S.col(j - 1) = col;
  }
  return S;
}

}  // namespace wmfield
