#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cubegrad/exact_oracle.hpp"
#include "cubegrad/problem.hpp"

namespace cubegrad {

struct GdConfig {
  double eta = 0.0;                   // step size; <= 0 means default_step_size(p)
  double init_radius_fraction = 1.0;  // x0 = -fraction * R_c * b/||b||
  std::int64_t max_iters = 100000;
  double grad_tol = -1.0;  // < 0 means the default 1e-10 * (1 + ||b||)
  bool record_trace = true;
  bool monitor_invariants = false;
  bool allow_eta_override = false;  // permit eta above 1/(4(beta+rho R))
  std::int64_t snapshot_stride = 0;  // 0 disables iterate snapshots
};

struct InvariantViolation {
  std::int64_t iter;
  std::string quantity;
  double excess;
};

struct SolverTrace {
  // One entry per visited iterate x_0..x_T (length iters+1 when recorded).
  std::vector<double> f_val, norm_x, grad_norm, step_size;
  std::vector<double> f_unperturbed;  // perturbed runs only
  std::int64_t snapshot_stride = 0;
  std::vector<Eigen::VectorXd> snapshots;
  std::vector<InvariantViolation> violations;
  bool converged = false;
  std::int64_t iters = 0;  // number of gradient steps taken
  double final_f = 0.0;
  double final_grad_norm = 0.0;
};

// Observer called at every visited iterate (including x_0 and the final one);
// return false to stop the run at that iterate.
using GdHook =
    std::function<bool(std::int64_t t, double f, double norm_x, double grad_norm,
                       const Eigen::VectorXd& x)>;

struct PerturbSpec {
  double sigma = 0.0;
  double sigma_bar = 0.0;
  Eigen::VectorXd q;  // unit vector
  std::uint64_t seed = 0;
};

enum class Regime { linear, sublinear, gap };

struct BoundReport {
  double t_grow = 0.0;
  double t_conv = 0.0;
  double T_eps = 0.0;
  std::optional<double> T_eps_prime;
  Regime regime = Regime::sublinear;
  double L_s = 0.0;         // beta + 2 rho ||s||, filled by the perturbed variant
  bool eps_clamped = false;  // eps was reduced to beta||s||^2/2 + rho||s||^3
};

const char* to_string(Regime r);

// Exactly 1/(4 (beta + rho R)).
double default_step_size(const CubicProblem& p);

// -(fraction * R_c) b/||b||; zero when b = 0.
Eigen::VectorXd init_point(const CubicProblem& p, double fraction);

std::pair<Eigen::VectorXd, SolverTrace> gd_run(const CubicProblem& p, const GdConfig& cfg,
                                               const GdHook& hook = {});

PerturbSpec make_perturbation(const CubicProblem& p, double eps, double sigma_bar,
                              double norm_s_est, std::uint64_t seed);
// norm_s_est defaults to the computable bound R.
PerturbSpec make_perturbation(const CubicProblem& p, double eps, double sigma_bar,
                              std::uint64_t seed);

// Runs gd_run on (A, b + sigma q, rho, beta); the trace records the
// unperturbed f alongside at every iterate.
std::pair<Eigen::VectorXd, SolverTrace> gd_run_perturbed(const CubicProblem& p,
                                                         const GdConfig& cfg,
                                                         const PerturbSpec& ps,
                                                         const GdHook& hook = {});

// Iteration bound to reach f(x_t) <= f(s) + eps; b1 is the bottom-eigenvector
// coefficient of b and must be nonzero.
BoundReport bound_T_eps(const CubicProblem& p, const ExactSolution& sol, const SpectralInfo& spec,
                        double eta, double eps, double b1);

// Perturbed-run bound; scale-parameter form so no oracle is needed.
BoundReport bound_T_eps_perturbed(double norm_s, double gamma, double beta, double gap, double rho,
                                  double eta, double eps, double sigma_bar, Eigen::Index d,
                                  double delta);

// True iff rho*||x_t|| >= gamma - delta - 1e-10 for every recorded t at or
// beyond the threshold (2/(eta delta)) log(1 + gamma_+^2/(4 rho |b1|)).
bool growth_time_check(const SolverTrace& trace, const CubicProblem& p, const SpectralInfo& spec,
                       double eta, double delta, double b1);

// Per-step contraction of ||x_t - s||^2 over consecutive snapshot pairs
// (stride must be 1); slack 1e-9 relative.
bool contraction_check(const SolverTrace& trace, const ExactSolution& sol, double eta);

// CSV with header iter,f,norm_x,grad_norm,step (plus f_unperturbed when present).
void write_trace_csv(const std::string& path, const SolverTrace& trace);

}  // namespace cubegrad
