#include "cubegrad/linear_operator.hpp"

#include <stdexcept>
#include <utility>

namespace cubegrad {

LinearOperator LinearOperator::Dense(kernels::RowMat A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("dense operator must be square");
  LinearOperator op(A.rows(), OperatorKind::dense);
  op.dense_ = std::make_shared<const kernels::RowMat>(std::move(A));
  return op;
}

LinearOperator LinearOperator::Diagonal(Eigen::VectorXd diag) {
  LinearOperator op(diag.size(), OperatorKind::diagonal);
  op.diag_ = std::make_shared<const Eigen::VectorXd>(std::move(diag));
  return op;
}

LinearOperator LinearOperator::Callback(Eigen::Index dim, ApplyFn apply) {
  if (dim <= 0) throw std::invalid_argument("callback operator needs positive dim");
  if (!apply) throw std::invalid_argument("callback operator needs a function");
  LinearOperator op(dim, OperatorKind::callback);
  op.callback_ = std::move(apply);
  return op;
}

void LinearOperator::apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  if (x.size() != dim_) throw std::invalid_argument("operator/vector dim mismatch");
  y.resize(dim_);
  switch (kind_) {
    case OperatorKind::dense:
      kernels::dense_matvec(*dense_, x, y);
      break;
    case OperatorKind::diagonal:
      kernels::diag_matvec(*diag_, x, y);
      break;
    case OperatorKind::callback:
      callback_(x, y);
      if (y.size() != dim_) throw std::runtime_error("callback produced wrong output dim");
      break;
  }
}

Eigen::VectorXd LinearOperator::apply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y;
  apply(x, y);
  return y;
}

void LinearOperator::apply_serial(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  if (x.size() != dim_) throw std::invalid_argument("operator/vector dim mismatch");
  y.resize(dim_);
  switch (kind_) {
    case OperatorKind::dense:
      kernels::dense_matvec_serial(*dense_, x, y);
      break;
    case OperatorKind::diagonal:
      kernels::diag_matvec_serial(*diag_, x, y);
      break;
    case OperatorKind::callback:
      callback_(x, y);
      if (y.size() != dim_) throw std::runtime_error("callback produced wrong output dim");
      break;
  }
}

const kernels::RowMat& LinearOperator::dense() const {
  if (kind_ != OperatorKind::dense) throw std::logic_error("operator is not dense");
  return *dense_;
}

const Eigen::VectorXd& LinearOperator::diagonal() const {
  if (kind_ != OperatorKind::diagonal) throw std::logic_error("operator is not diagonal");
  return *diag_;
}

const char* to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::dense:
      return "dense";
    case OperatorKind::diagonal:
      return "diagonal";
    case OperatorKind::callback:
      return "callback";
  }
  return "unknown";
}

}  // namespace cubegrad
