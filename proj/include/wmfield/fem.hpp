#pragma once

// Lagrange finite elements of degree one and two on a uniform mesh of the
// unit interval.  Homogeneous Dirichlet conditions are built into the dof
// layout: only interior nodes carry degrees of freedom.

#include <vector>

#include "wmfield/types.hpp"

namespace wmfield {

struct Mesh1D {
  std::vector<double> nodes;  // n_elements + 1 coordinates, endpoints included
  int n_elements = 0;
  double h = 0.0;
  int level = 0;
};

// Uniform mesh with (n0 - 1) * 2^level elements, n0 being the node count of
// the coarsest mesh (level 0).
Mesh1D build_mesh(int n0, int level);

struct FeSpace {
  Mesh1D mesh;
  int degree = 0;                  // polynomial degree, 1 or 2
  int n_dofs = 0;                  // interior degrees of freedom
  std::vector<double> dof_coords;  // ascending; dofs are numbered by coordinate
  // element_dofs[e][i] is the global dof of local node i on element e (local
  // nodes ordered left to right, midpoint in the middle for degree 2), or -1
  // for a boundary node.
  std::vector<std::vector<int>> element_dofs;
};

FeSpace make_fespace(const Mesh1D& mesh, int degree);

// Consistent mass matrix (phi_i, phi_j).
Matrix assemble_mass(const FeSpace& fe);

// Operator matrix (phi_i', phi_j') + kappa^2 (phi_i, phi_j).
Matrix assemble_stiffness(const FeSpace& fe, double kappa);

// Point evaluation of a coefficient vector, derivative_order 0 or 1.  At an
// interior mesh node the element to the left supplies the value; x = 0 uses
// the first element.
double eval_fe(const FeSpace& fe, const Vector& coeffs, double x,
               int derivative_order = 0);

// B with B(i, k) = phi_k(points[i]), using the same element convention as
// eval_fe.
Matrix basis_eval_matrix(const FeSpace& fe, const Vector& points);

// Closed-form pairings against the Dirichlet sine basis e_j = sqrt(2) sin(j pi x):
// entries (phi_i, e_j) for derivative = false and (phi_i', e_j') for
// derivative = true.
Vector sine_inner_products(const FeSpace& fe, int j, bool derivative = false);

// Columns j = 1..n_modes of sine_inner_products.
Matrix sine_product_matrix(const FeSpace& fe, int n_modes, bool derivative = false);

// Gauss-Legendre rule with n points mapped to [0, 1]; n in 2..5.
void gauss_legendre(int n, std::vector<double>& points, std::vector<double>& weights);

}  // namespace wmfield
