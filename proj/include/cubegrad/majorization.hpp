#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cubegrad/linear_operator.hpp"
#include "cubegrad/problem.hpp"

namespace cubegrad {

// Smooth objective with declared beta-smoothness, 2*rho-Lipschitz Hessian,
// and a lower bound g_lb <= inf g. hess_vec may be empty; consumers then use
// the forward difference (grad(y + delta v) - grad(y))/delta with
// delta = 1e-6 (1 + ||y||)/||v||.
struct SmoothFunction {
  Eigen::Index dim = 0;
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> hess_vec;
  double beta = 0.0;
  double rho = 0.0;
  double g_lb = 0.0;
};

// hess_vec when provided, otherwise the finite difference above (two grad calls).
Eigen::VectorXd hess_vec_or_fd(const SmoothFunction& g, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& v);

struct SpConfig {
  double epsilon = 1e-3;
  double delta = 0.1;
  std::uint64_t seed = 0;
};

struct SpCertificate {
  double grad_norm = 0.0;
  double lambda_min_bound = 0.0;
  double final_model_grad_norm = 0.0;   // ||grad f_k(Delta)|| at the returned step
  double final_step_correction = 0.0;   // 2 rho ||Delta||^2, the other addend
  bool grad_ok = false;
  bool lambda_ok = false;
  bool verified = false;  // false when dim > 500 (dense eigencheck unavailable)
};

struct SpOuterRecord {
  std::int64_t k;
  double g_before;
  double g_after;
  bool accepted;
  std::int64_t evals_so_far;
};

struct SpResult {
  Eigen::VectorXd y_out;
  std::int64_t outer_iters = 0;
  std::int64_t total_gradient_evals = 0;  // grad + Hessian-vector applications
  SpCertificate certificate;
  std::vector<SpOuterRecord> outer_trace;
};

// Subproblem solver probing for ||s|| >= s_lb: returns the Cauchy point when it
// already certifies f(x0) <= -(1-eps_prime) rho s_lb^3/6, otherwise runs at
// most T perturbed gradient steps, returning the first iterate meeting that
// threshold on the unperturbed f, or the last iterate (a valid failure return
// signalling small ||s||). Exits early when the iteration revisits a bitwise
// state (cycle detection), after which no future iterate can pass the test.
Eigen::VectorXd ssp(const LinearOperator& A, const Eigen::VectorXd& b, double rho, double beta,
                    double eta, double s_lb, double eps_prime, double delta, std::uint64_t seed);

// Fixed-step descent from the Cauchy point until ||grad f(Delta)|| <= eps_grad;
// throws when max_iters is exceeded (signals inconsistent declarations).
Eigen::VectorXd sfsp(const LinearOperator& A, const Eigen::VectorXd& b, double rho, double eta,
                     double eps_grad, std::int64_t max_iters);

SpResult sp_run(const SmoothFunction& g, const Eigen::VectorXd& y0, const SpConfig& cfg);

// Dense second-order check at y: grad_norm <= epsilon and
// lambda_min(hessian) >= -sqrt(rho epsilon). dim must be <= 500 for the
// eigencheck; beyond that the certificate comes back unverified.
SpCertificate verify_second_order(const SmoothFunction& g, const Eigen::VectorXd& y,
                                  double epsilon, double rho);

// Built-in test objectives with certified (beta, rho, g_lb); see the
// implementation for the constants' derivations.
SmoothFunction make_fixture(const std::string& name);
std::vector<std::string> fixture_names();

}  // namespace cubegrad
