#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cubegrad/problem.hpp"

namespace cubegrad {

// Step-size domain for the exact line search along -grad f(x).
// guarded restricts to [0, 1/max(0, g'Ag/||g||^2 + rho||x||)] (upper endpoint
// +inf when the hinge argument is nonpositive).
enum class StepDomain { unconstrained, nonnegative, guarded };

const char* to_string(StepDomain d);

struct LineSearchTrace {
  // One entry per visited iterate; eta_t/step_size are 0 at the final iterate.
  std::vector<double> f_val, norm_x, grad_norm, step_size, eta_t;
  std::vector<double> lambda_min_hess;  // NaN unless A is dense and dim <= 200
  bool converged = false;
  std::int64_t iters = 0;
  double final_f = 0.0;
  double final_grad_norm = 0.0;
};

// Global minimizer of h(eta) = f(x - eta g) over the domain; requires
// g = grad f(x) != 0. Critical points come from the real roots of the quartic
// rho^2 Q L^2 - N^2 (companion-matrix eigenvalues), filtered back against
// h'(eta) = N + rho sqrt(Q) L; candidates plus domain endpoints are compared
// on exact h values, ties broken toward the smallest nonnegative eta.
// One operator application (Ag).
double exact_step(const CubicProblem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                  StepDomain domain);

// x_{t+1} = x_t - eta_t grad f(x_t) with eta_t from exact_step; starts at
// -x0_fraction * R_c * b/||b||. Stops at max_iters or a machine-level gradient
// (1e-14 (1+||b||)), which keeps exact_step's g != 0 precondition.
std::pair<Eigen::VectorXd, LineSearchTrace> line_search_run(const CubicProblem& p,
                                                            StepDomain domain, double x0_fraction,
                                                            std::int64_t max_iters);

// CSV with header iter,f,norm_x,grad_norm,step,eta_t,lambda_min_hess.
void write_trace_csv(const std::string& path, const LineSearchTrace& trace);

}  // namespace cubegrad
