#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace emnh {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using RowVector = Eigen::RowVectorXd;

/// Selectable-action flags, true = the action may be taken.
using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;

enum class Sense { minimize, maximize };

/// Base of every error raised by the library. The CLI maps the subclasses
/// onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments (exit code 2).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent data: files, instances, solutions (exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or shape violations during numerics (exit code 4).
class NumericError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace emnh
