#include "cubegrad/problem.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "cubegrad/rng.hpp"

namespace cubegrad {

CubicProblem::CubicProblem(LinearOperator A_, Eigen::VectorXd b_, double rho_, double beta_)
    : A(std::move(A_)), b(std::move(b_)), rho(rho_), beta(beta_) {
  if (b.size() != A.dim()) throw std::invalid_argument("dim(b) must equal A.dim");
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
}

double eval_f(const CubicProblem& p, const Eigen::VectorXd& x) {
  if (x.size() != p.dim()) throw std::invalid_argument("eval_f: dim mismatch");
  const Eigen::VectorXd Ax = p.A.apply(x);
  const double nx = x.norm();
  return 0.5 * x.dot(Ax) + p.b.dot(x) + (p.rho / 3.0) * nx * nx * nx;
}

Eigen::VectorXd eval_grad(const CubicProblem& p, const Eigen::VectorXd& x) {
  if (x.size() != p.dim()) throw std::invalid_argument("eval_grad: dim mismatch");
  Eigen::VectorXd g = p.A.apply(x);
  g += p.b;
  g += (p.rho * x.norm()) * x;
  return g;
}

Eigen::VectorXd eval_hess_vec(const CubicProblem& p, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& v) {
  if (x.size() != p.dim() || v.size() != p.dim())
    throw std::invalid_argument("eval_hess_vec: dim mismatch");
  const double nx = x.norm();
  Eigen::VectorXd h = p.A.apply(v);
  h += (p.rho * nx) * v;
  if (nx > 0.0) h += (p.rho * x.dot(v) / nx) * x;
  return h;
}

double cauchy_radius(const CubicProblem& p) {
  const double nb = p.b.norm();
  if (nb == 0.0) return 0.0;
  // Positive root of rho r^2 + (b'Ab/||b||^2) r - ||b|| = 0.
  const Eigen::VectorXd Ab = p.A.apply(p.b);
  const double c = p.b.dot(Ab) / (2.0 * p.rho * nb * nb);
  const double q = nb / p.rho;
  const double root = std::sqrt(c * c + q);
  // The textbook form -c + root cancels badly when c >> q; the rationalized
  // form below is exact in the limit and agrees elsewhere.
  return c > 0.0 ? q / (c + root) : -c + root;
}

double radius_upper_R(const CubicProblem& p) {
  const double h = p.beta / (2.0 * p.rho);
  return h + std::sqrt(h * h + p.b.norm() / p.rho);
}

Eigen::VectorXd cauchy_point(const CubicProblem& p) {
  const double nb = p.b.norm();
  if (nb == 0.0) return Eigen::VectorXd::Zero(p.dim());
  return (-cauchy_radius(p) / nb) * p.b;
}

DerivedRadii derived_radii(const CubicProblem& p) {
  return DerivedRadii{radius_upper_R(p), cauchy_radius(p)};
}

double estimate_opnorm(const LinearOperator& A, std::uint64_t seed, int max_iters,
                       double rel_tol) {
  rng::Stream stream(seed);
  Eigen::VectorXd v = stream.unit_sphere(A.dim());
  double est = 0.0;
  Eigen::VectorXd w(A.dim());
  for (int it = 0; it < max_iters; ++it) {
    A.apply(v, w);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;  // v in the kernel; estimate from this run is 0
    const double prev = est;
    est = nw;  // ||Av|| with ||v|| = 1, a lower bound converging to ||A||_op
    v = w / nw;
    if (it > 0 && std::abs(est - prev) <= rel_tol * est) break;
  }
  return est;
}

}  // namespace cubegrad
