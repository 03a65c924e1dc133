#pragma once

#include <Eigen/Core>

#include "cubegrad/problem.hpp"

namespace cubegrad {

struct SpectralInfo {
  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::MatrixXd V;            // column i pairs with eigenvalues[i]
  double gamma = 0.0;           // -lambda_min
  double gamma_plus = 0.0;      // max(gamma, 0)
  double beta_exact = 0.0;      // ||A||_op
  double gap = 0.0;             // first distinct eigenvalue minus lambda_min, 0 if none
};

struct ExactSolution {
  Eigen::VectorXd s;
  double norm_s = 0.0;
  double f_s = 0.0;
  double multiplier = 0.0;  // rho * ||s||
  bool hard_case = false;
  double margin = 0.0;  // rho * ||s|| - gamma
};

// Dense/diagonal operators only; throws for callback-backed A or dim > max_dim.
SpectralInfo spectral_decompose(const CubicProblem& p, Eigen::Index max_dim = 2000);

// Global minimizer via the secular equation ||(A + rho r I)^{-1} b|| = r on
// r >= max(0, gamma/rho), with eigenvector augmentation in the hard case
// (b orthogonal to the bottom eigenspace and restricted norm below gamma/rho).
// Throws if the optimality residual ||grad f(s)|| exceeds 1e-8 (1 + ||b||).
ExactSolution solve_exact(const CubicProblem& p, Eigen::Index max_dim = 2000);

// f(x) - f(s), evaluated directly and through the expansion
//   f(x) = f(s) + 1/2 (x-s)'(A + rho||s|| I)(x-s)
//          + rho/6 (||s||-||x||)^2 (||s||+2||x||),
// asserting agreement to 1e-8 (1+|f(x)|). Returns the direct value.
double suboptimality(const CubicProblem& p, const ExactSolution& sol, const Eigen::VectorXd& x);

}  // namespace cubegrad
