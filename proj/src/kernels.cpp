#include "cubegrad/kernels.hpp"

namespace cubegrad::kernels {

void dense_matvec_serial(const RowMat& A, const Eigen::VectorXd& x, Eigen::VectorXd& out) {
  const Eigen::Index n = A.rows();
  out.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = A.row(i).dot(x);
}

void dense_matvec(const RowMat& A, const Eigen::VectorXd& x, Eigen::VectorXd& out) {
  const Eigen::Index n = A.rows();
  out.resize(n);
#pragma omp parallel for schedule(static) if (n >= kParallelMinDim)
  for (Eigen::Index i = 0; i < n; ++i) out[i] = A.row(i).dot(x);
}

void diag_matvec_serial(const Eigen::VectorXd& diag, const Eigen::VectorXd& x,
                        Eigen::VectorXd& out) {
  const Eigen::Index n = diag.size();
  out.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = diag[i] * x[i];
}

void diag_matvec(const Eigen::VectorXd& diag, const Eigen::VectorXd& x, Eigen::VectorXd& out) {
  const Eigen::Index n = diag.size();
  out.resize(n);
#pragma omp parallel for schedule(static) if (n >= kParallelMinDim)
  for (Eigen::Index i = 0; i < n; ++i) out[i] = diag[i] * x[i];
}

}  // namespace cubegrad::kernels
