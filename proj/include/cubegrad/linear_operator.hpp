#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>

#include "cubegrad/kernels.hpp"

namespace cubegrad {

enum class OperatorKind { dense, diagonal, callback };

// Symmetric linear operator A acting on R^d. Only matrix-vector products are
// required by the solvers; dense/diagonal storage additionally exposes the
// underlying data so eigen-decomposition-based code can reject callback
// operators explicitly instead of failing downstream.
class LinearOperator {
 public:
  using ApplyFn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

  static LinearOperator Dense(kernels::RowMat A);
  static LinearOperator Diagonal(Eigen::VectorXd diag);
  static LinearOperator Callback(Eigen::Index dim, ApplyFn apply);

  Eigen::Index dim() const { return dim_; }
  OperatorKind kind() const { return kind_; }

  // y = A x. Dense/diagonal kinds dispatch to the parallel kernels.
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

  // Serial reference path, bitwise-identical to apply() by construction
  // (both reduce each row with the same dot-product order).
  void apply_serial(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;

  // Storage accessors; throw std::logic_error when the kind does not match.
  const kernels::RowMat& dense() const;
  const Eigen::VectorXd& diagonal() const;

 private:
  LinearOperator(Eigen::Index dim, OperatorKind kind) : dim_(dim), kind_(kind) {}

  Eigen::Index dim_ = 0;
  OperatorKind kind_ = OperatorKind::dense;
  std::shared_ptr<const kernels::RowMat> dense_;
  std::shared_ptr<const Eigen::VectorXd> diag_;
  ApplyFn callback_;
};

const char* to_string(OperatorKind kind);

}  // namespace cubegrad
