#pragma once

// Dense-matrix aliases and the error taxonomy shared by all modules.

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace echodec {

using Index = Eigen::Index;

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrixd = Matrix<double>;
using Vectord = Vector<double>;

/// An argument or configuration value violates its contract.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Input data is malformed: bad coordinates, missing cells, layout
/// mismatches, unreadable files.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A NaN/Inf appeared in an iterate or a matrix factorization failed.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace echodec
