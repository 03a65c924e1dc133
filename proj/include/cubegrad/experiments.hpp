#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cubegrad/exact_oracle.hpp"
#include "cubegrad/gd.hpp"
#include "cubegrad/line_search.hpp"
#include "cubegrad/problem.hpp"

namespace cubegrad {

// Random diagonal ensemble: A = diag([-gamma; -gamma+gap; u]) with u uniform
// in [-gamma+gap, beta]^(d-2), minimizer direction shaped by the resolvent
// power zeta, norm fixed to (gamma+margin)/rho, and b chosen so that the
// constructed point is exactly stationary.
struct EnsembleSpec {
  Eigen::Index d = 1000;
  double beta = 1.0;
  double rho = 1.0;
  double gamma = 0.5;
  double gap = 5e-3;
  double margin = 5e-4;
  int n_instances = 200;
  std::vector<double> eps_grid;  // relative accuracies; empty -> default_eps_grid()
  std::uint64_t seed = 0;
  double x0_fraction = 1.0;
  double eta = 0.25;

  double norm_s() const { return (gamma + margin) / rho; }
};

// Logarithmic grid, 16 points per decade over [1e-6, 0.5], ascending,
// 0.5 appended exactly.
std::vector<double> default_eps_grid();

struct EnsembleRecord {
  std::int64_t instance = 0;
  double zeta = 0.0;
  double margin = 0.0;
  double f_s = 0.0;
  double norm_s = 0.0;
  double b1 = 0.0;  // bottom-eigenvector coefficient of b
  // Aligned with the resolved eps grid; iterations -1 means not reached
  // within the horizon (10x the largest theoretical bound on the grid).
  std::vector<std::int64_t> iterations_to_eps;
  std::vector<double> bound;
};

struct GeneratedInstance {
  CubicProblem p;
  Eigen::VectorXd s_target;
  SpectralInfo info;
  ExactSolution sol;
  double zeta = 0.0;
};

// Throws when the oracle disagrees with the construction targets
// (|gamma/gap mismatch| over 1e-9 relative, |margin mismatch| over 1e-9,
// or a non-stationary constructed point).
GeneratedInstance gen_ensemble_instance(const EnsembleSpec& spec, std::int64_t instance_index);

// Diagonal instance with lambda1 = -gamma, the rest equally spaced on
// [-0.9 gamma, beta] (single point -0.9 gamma when d = 2), b with equal
// entries except b1 = b1_ratio * b2, scaled to ||b|| = b_norm.
CubicProblem gen_trajectory_instance(Eigen::Index d, double gamma, double beta, double rho,
                                     double b_norm, double b1_ratio);

struct EnsembleResult {
  EnsembleSpec spec;              // with the resolved eps grid filled in
  std::vector<EnsembleRecord> records;
  // Median over the grid of (median measured iterations) / (tightest
  // applicable theoretical curve). Reported, never asserted.
  double fitted_constant = 0.0;
};

// Deterministic for fixed spec+seed regardless of worker count: instance i's
// PRNG stream depends only on (seed, i) and records land by index.
EnsembleResult run_ensemble(const EnsembleSpec& spec, int workers = 1);

// ensemble.csv (instance,eps,iters,bound,margin), cdf.csv (eps,quantile,iters),
// curves.csv (eps,linear_arm,sublinear_arm,gap_curve), manifest.json.
void write_ensemble_outputs(const EnsembleResult& res, const std::string& out_dir);

struct LineSearchComparison {
  std::vector<StepDomain> domains;
  std::vector<LineSearchTrace> runs;  // aligned with domains
  SolverTrace fixed_step;             // fixed-eta baseline on the same instance
  double fixed_eta = 0.0;
};

LineSearchComparison run_linesearch_comparison(const CubicProblem& p,
                                               const std::vector<StepDomain>& domains,
                                               std::int64_t max_iters, double x0_fraction = 0.0);

// Long format: domain,iter,f,norm_x,grad_norm,step,eta_t,lambda_min_hess;
// the fixed-step baseline appears as domain "fixed" with eta_t = eta and
// lambda_min_hess empty.
void write_linesearch_csv(const std::string& path, const LineSearchComparison& cmp);

std::uint64_t fnv1a64(const std::string& data);

}  // namespace cubegrad
