#pragma once

#include <Eigen/Core>

namespace cubegrad::kernels {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Parallel kernels are row-parallel: each output coordinate is one serial dot
// product, so results are bitwise identical for any thread count. Reductions
// (dots, norms) stay serial everywhere for the same reason.

void dense_matvec(const RowMat& A, const Eigen::VectorXd& x, Eigen::VectorXd& out);
void dense_matvec_serial(const RowMat& A, const Eigen::VectorXd& x, Eigen::VectorXd& out);

void diag_matvec(const Eigen::VectorXd& diag, const Eigen::VectorXd& x, Eigen::VectorXd& out);
void diag_matvec_serial(const Eigen::VectorXd& diag, const Eigen::VectorXd& x, Eigen::VectorXd& out);

// Minimum dimension before the parallel kernels spawn threads; below this the
// fork/join overhead dominates the work.
inline constexpr Eigen::Index kParallelMinDim = 256;

}  // namespace cubegrad::kernels
