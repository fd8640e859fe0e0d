#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace equifuse {

// Everything runs in 64-bit floats; the tolerances in the test suite
// assume it.
using Scalar = double;

using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatX3 = Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Mat3 = Eigen::Matrix<Scalar, 3, 3, Eigen::RowMajor>;
using Mat43 = Eigen::Matrix<Scalar, 4, 3, Eigen::RowMajor>;
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
using RowVec3 = Eigen::Matrix<Scalar, 1, 3>;

// Error taxonomy. The CLI maps these onto exit codes:
// ConfigError/ContractError -> 2, DataError -> 3, NumericsError -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Bad configuration value or inconsistent model setup.
struct ConfigError : Error {
  using Error::Error;
};
// A documented precondition was violated by the caller.
struct ContractError : Error {
  using Error::Error;
};
// Shape mismatch between tensors; message names both shapes.
struct DimensionError : ContractError {
  using ContractError::ContractError;
};
// Unreadable, malformed, or otherwise unusable input data.
struct DataError : Error {
  using Error::Error;
};
// Non-finite values or other numerical breakdowns.
struct NumericsError : Error {
  using Error::Error;
};

}  // namespace equifuse
