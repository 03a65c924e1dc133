#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "cubegrad/linear_operator.hpp"

namespace cubegrad {

// min_x f(x) = 1/2 x'Ax + b'x + (rho/3) ||x||^3 with A symmetric,
// beta a declared upper bound on ||A||_op. beta is user input: solvers only
// need an upper bound, so nothing here estimates it implicitly.
struct CubicProblem {
  CubicProblem(LinearOperator A, Eigen::VectorXd b, double rho, double beta);

  LinearOperator A;
  Eigen::VectorXd b;
  double rho;
  double beta;

  Eigen::Index dim() const { return A.dim(); }
};

struct DerivedRadii {
  double R = 0.0;    // norm bound on the global minimizer
  double R_c = 0.0;  // Cauchy radius, R_c <= R
};

double eval_f(const CubicProblem& p, const Eigen::VectorXd& x);
Eigen::VectorXd eval_grad(const CubicProblem& p, const Eigen::VectorXd& x);

// Hessian-vector product (A + rho||x|| I + rho xx'/||x||) v.
// The rank-one term is the zero operator at x = 0.
Eigen::VectorXd eval_hess_vec(const CubicProblem& p, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& v);

// Minimizer radius of f restricted to the ray -zeta b/||b||, zeta >= 0.
// Returns 0 when b = 0.
double cauchy_radius(const CubicProblem& p);

// R = beta/(2 rho) + sqrt((beta/(2 rho))^2 + ||b||/rho); ||s|| <= R always.
double radius_upper_R(const CubicProblem& p);

Eigen::VectorXd cauchy_point(const CubicProblem& p);

DerivedRadii derived_radii(const CubicProblem& p);

// Power-iteration estimate of ||A||_op. Utility only; callers wanting a
// certified beta must supply their own bound since the estimate can be low.
double estimate_opnorm(const LinearOperator& A, std::uint64_t seed = 7,
                       int max_iters = 50, double rel_tol = 1e-3);

}  // namespace cubegrad
