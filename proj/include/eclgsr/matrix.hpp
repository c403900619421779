#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace eclgsr {

/// Dense row-major float64 matrix used everywhere in the library.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

using NodeId = std::uint32_t;

/// Operand shapes do not fit the requested operation.
class ShapeError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A forward computation produced NaN or Inf.
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace eclgsr
