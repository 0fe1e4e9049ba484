#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace wmfield {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Thrown when a numerical guard trips: non-finite intermediate values, a
// failed factorization, or a degenerate sign alignment.  Contract violations
// on inputs throw std::invalid_argument instead.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wmfield
