#include "cubegrad/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "cubegrad/rng.hpp"

namespace cubegrad {

namespace {

double cube(double x) { return x * x * x; }

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void validate_spec(const EnsembleSpec& spec) {
  if (spec.d < 2) throw std::invalid_argument("ensemble spec: d must be >= 2");
  if (!(spec.rho > 0.0)) throw std::invalid_argument("ensemble spec: rho must be positive");
  if (!(spec.gamma + spec.gap <= spec.beta))
    throw std::invalid_argument("ensemble spec: gamma + gap must not exceed beta");
  if (!(spec.gap > 0.0)) throw std::invalid_argument("ensemble spec: gap must be positive");
  if (!(spec.margin > 0.0)) throw std::invalid_argument("ensemble spec: margin must be positive");
  if (spec.n_instances < 1)
    throw std::invalid_argument("ensemble spec: n_instances must be positive");
  if (!(spec.x0_fraction >= 0.0 && spec.x0_fraction <= 1.0))
    throw std::invalid_argument("ensemble spec: x0_fraction must lie in [0,1]");
  for (double e : spec.eps_grid)
    if (!(e > 0.0 && e < 1.0))
      throw std::invalid_argument("ensemble spec: eps_grid entries must lie in (0,1)");
}

struct CurvePoint {
  double linear_arm = 0.0;
  double sublinear_arm = 0.0;
  double gap_curve = 0.0;
  bool gap_active = false;
};

// Theoretical iteration curves at the spec's nominal parameters: the two
// min-arms of the convergence bound and the sqrt eigengap refinement,
// all sharing the (tau_grow + tau_conv)/eta prefactor. b1 enters only
// through tau_grow, so a single representative |b1| serves the overlay.
CurvePoint eval_curves(const EnsembleSpec& spec, double eta_used, double abs_b1,
                       double eps_prime) {
  const double ns = spec.norm_s();
  const double eps = spec.rho * cube(ns) * eps_prime / 12.0;
  double tau_grow = 0.0;
  if (spec.gamma > 0.0 && abs_b1 > 0.0)
    tau_grow = 6.0 * std::log1p(spec.gamma * spec.gamma / (4.0 * spec.rho * abs_b1));
  const double tau_conv = 6.0 * std::log((spec.beta + 2.0 * spec.rho * ns) * ns * ns / eps);
  const double pre = (tau_grow + tau_conv) / eta_used;
  CurvePoint c;
  c.linear_arm = pre / spec.margin;
  c.sublinear_arm = pre * 10.0 * ns * ns / eps;
  const double denom = std::min(spec.gap, spec.rho * ns);
  c.gap_curve = pre * std::sqrt(10.0 * ns * ns / (eps * denom));
  c.gap_active = spec.margin <= eps / (10.0 * ns * ns);
  return c;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Representative step size for the overlay when runs use the per-instance
// default: 1/(4 L_s) at the nominal minimizer scale. A constant here only
// shifts all curves (and the fitted constant) uniformly.
double curve_eta(const EnsembleSpec& spec) {
  if (spec.eta > 0.0) return spec.eta;
  return 1.0 / (4.0 * (spec.beta + 2.0 * spec.rho * spec.norm_s()));
}

EnsembleRecord run_one_instance(const EnsembleSpec& spec, std::int64_t index) {
  GeneratedInstance gi = gen_ensemble_instance(spec, index);
  const double eta_used = spec.eta > 0.0 ? spec.eta : default_step_size(gi.p);
  const double b1 = gi.info.V.col(0).dot(gi.p.b);

  EnsembleRecord rec;
  rec.instance = index;
  rec.zeta = gi.zeta;
  rec.margin = gi.sol.margin;
  rec.f_s = gi.sol.f_s;
  rec.norm_s = gi.sol.norm_s;
  rec.b1 = b1;

  const std::size_t m = spec.eps_grid.size();
  rec.bound.resize(m);
  rec.iterations_to_eps.assign(m, -1);
  double max_bound = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double eps_abs = spec.rho * cube(gi.sol.norm_s) * spec.eps_grid[j] / 12.0;
    const BoundReport br = bound_T_eps(gi.p, gi.sol, gi.info, eta_used, eps_abs, b1);
    rec.bound[j] = br.T_eps;
    max_bound = std::max(max_bound, br.T_eps);
  }

  // Thresholds f <= (1 - eps') f_s, visited loosest-first; descent makes a
  // crossed threshold stay crossed, so one moving pointer suffices.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return spec.eps_grid[a] > spec.eps_grid[b];
  });
  std::vector<double> thresh(m);
  for (std::size_t k = 0; k < m; ++k) thresh[k] = (1.0 - spec.eps_grid[order[k]]) * gi.sol.f_s;

  std::size_t ptr = 0;
  GdHook hook = [&](std::int64_t t, double f, double, double, const Eigen::VectorXd&) {
    while (ptr < m && f <= thresh[ptr]) {
      rec.iterations_to_eps[order[ptr]] = t;
      ++ptr;
    }
    return ptr < m;
  };

  GdConfig cfg;
  cfg.eta = spec.eta;
  cfg.init_radius_fraction = spec.x0_fraction;
  cfg.max_iters = static_cast<std::int64_t>(std::min(std::ceil(10.0 * max_bound), 4.6e18));
  cfg.grad_tol = 1e-300;  // the hook is the only intended stop
  cfg.record_trace = false;
  cfg.allow_eta_override = true;
  gd_run(gi.p, cfg, hook);
  return rec;
}

}  // namespace

std::vector<double> default_eps_grid() {
  std::vector<double> grid;
  for (int k = 0;; ++k) {
    const double e = 1e-6 * std::pow(10.0, k / 16.0);
    if (e >= 0.5 * (1.0 - 1e-12)) break;
    grid.push_back(e);
  }
  grid.push_back(0.5);
  return grid;
}

GeneratedInstance gen_ensemble_instance(const EnsembleSpec& spec, std::int64_t instance_index) {
  validate_spec(spec);
  rng::Stream stream(spec.seed, static_cast<std::uint64_t>(instance_index));
  const Eigen::Index d = spec.d;
  Eigen::VectorXd lam(d);
  lam[0] = -spec.gamma;
  lam[1] = -spec.gamma + spec.gap;
  for (Eigen::Index i = 2; i < d; ++i)
    lam[i] = -spec.gamma + spec.gap + (spec.beta + spec.gamma - spec.gap) * stream.uniform01();

  const double ns = spec.norm_s();
  const double zeta = std::exp2(2.0 * stream.uniform01() - 1.0);
  Eigen::VectorXd shat(d);
  double nshat = 0.0;
  do {
    const Eigen::VectorXd nu = stream.gaussian(d);
    for (Eigen::Index i = 0; i < d; ++i)
      shat[i] = nu[i] / std::pow(lam[i] + spec.rho * ns, zeta);
    nshat = shat.norm();
  } while (nshat == 0.0);

  Eigen::VectorXd s = shat * (ns / nshat);
  Eigen::VectorXd b(d);
  for (Eigen::Index i = 0; i < d; ++i) b[i] = -(lam[i] + spec.rho * ns) * s[i];

  const double declared_beta = std::max(spec.beta, spec.gamma);
  GeneratedInstance out{
      CubicProblem(LinearOperator::Diagonal(std::move(lam)), std::move(b), spec.rho,
                   declared_beta),
      std::move(s),
      {},
      {},
      zeta};
  out.info = spectral_decompose(out.p);
  out.sol = solve_exact(out.p);

  auto rel_err = [](double a, double target) {
    return std::abs(a - target) / std::max(1.0, std::abs(target));
  };
  if (rel_err(out.info.gamma, spec.gamma) > 1e-9 || rel_err(out.info.gap, spec.gap) > 1e-9 ||
      std::abs(out.sol.margin - spec.margin) > 1e-9)
    throw std::runtime_error("gen_ensemble_instance: oracle disagrees with construction targets");
  if (eval_grad(out.p, out.s_target).norm() > 1e-9)
    throw std::runtime_error("gen_ensemble_instance: constructed point is not stationary");
  return out;
}

CubicProblem gen_trajectory_instance(Eigen::Index d, double gamma, double beta, double rho,
                                     double b_norm, double b1_ratio) {
  if (d < 2) throw std::invalid_argument("gen_trajectory_instance: d must be >= 2");
  Eigen::VectorXd lam(d);
  lam[0] = -gamma;
  if (d == 2)
    lam[1] = -0.9 * gamma;  // degenerate spacing: the single point sits at the low end
  else
    lam.tail(d - 1) = Eigen::VectorXd::LinSpaced(d - 1, -0.9 * gamma, beta);
  Eigen::VectorXd b = Eigen::VectorXd::Ones(d);
  b[0] = b1_ratio;
  b *= b_norm / b.norm();
  return CubicProblem(LinearOperator::Diagonal(std::move(lam)), std::move(b), rho,
                      std::max(beta, gamma));
}

EnsembleResult run_ensemble(const EnsembleSpec& spec_in, int workers) {
  EnsembleSpec spec = spec_in;
  if (spec.eps_grid.empty()) spec.eps_grid = default_eps_grid();
  validate_spec(spec);
  workers = std::max(1, workers);

  EnsembleResult res;
  res.spec = spec;
  res.records.resize(spec.n_instances);

  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto worker_fn = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= spec.n_instances) return;
      try {
        res.records[i] = run_one_instance(spec, i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  if (workers == 1) {
    worker_fn();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker_fn);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  const double eta_used = curve_eta(spec);
  std::vector<double> abs_b1;
  abs_b1.reserve(res.records.size());
  for (const auto& r : res.records) abs_b1.push_back(std::abs(r.b1));
  const double med_b1 = median_of(std::move(abs_b1));

  std::vector<double> ratios;
  for (std::size_t j = 0; j < spec.eps_grid.size(); ++j) {
    std::vector<double> reached;
    for (const auto& r : res.records)
      if (r.iterations_to_eps[j] >= 0)
        reached.push_back(static_cast<double>(r.iterations_to_eps[j]));
    if (reached.empty()) continue;
    const CurvePoint c = eval_curves(spec, eta_used, med_b1, spec.eps_grid[j]);
    double curve = std::min(c.linear_arm, c.sublinear_arm);
    if (c.gap_active) curve = std::min(curve, c.gap_curve);
    if (!(curve > 0.0) || !std::isfinite(curve)) continue;
    ratios.push_back(median_of(std::move(reached)) / curve);
  }
  res.fitted_constant = ratios.empty() ? 0.0 : median_of(std::move(ratios));
  return res;
}

namespace {

nlohmann::json spec_to_json(const EnsembleSpec& spec) {
  return nlohmann::json{{"d", spec.d},
                        {"beta", spec.beta},
                        {"rho", spec.rho},
                        {"gamma", spec.gamma},
                        {"gap", spec.gap},
                        {"margin", spec.margin},
                        {"n_instances", spec.n_instances},
                        {"eps_grid", spec.eps_grid},
                        {"seed", spec.seed},
                        {"x0_fraction", spec.x0_fraction},
                        {"eta", spec.eta}};
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("failed writing: " + path);
}

}  // namespace

void write_ensemble_outputs(const EnsembleResult& res, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const EnsembleSpec& spec = res.spec;
  const std::vector<double>& grid = spec.eps_grid;

  std::string ensemble = "instance,eps,iters,bound,margin\n";
  for (const auto& r : res.records)
    for (std::size_t j = 0; j < grid.size(); ++j)
      ensemble += std::to_string(r.instance) + ',' + fmt_g(grid[j]) + ',' +
                  std::to_string(r.iterations_to_eps[j]) + ',' + fmt_g(r.bound[j]) + ',' +
                  fmt_g(r.margin) + '\n';

  std::string cdf = "eps,quantile,iters\n";
  for (std::size_t j = 0; j < grid.size(); ++j) {
    std::vector<std::int64_t> reached;
    for (const auto& r : res.records)
      if (r.iterations_to_eps[j] >= 0) reached.push_back(r.iterations_to_eps[j]);
    std::sort(reached.begin(), reached.end());
    for (int k = 0; k <= 20; ++k) {
      const double q = 0.05 * k;
      std::int64_t v = -1;
      if (!reached.empty()) {
        const auto idx = static_cast<std::size_t>(
            std::llround(q * static_cast<double>(reached.size() - 1)));
        v = reached[std::min(idx, reached.size() - 1)];
      }
      char qbuf[16];
      std::snprintf(qbuf, sizeof qbuf, "%.2f", q);
      cdf += fmt_g(grid[j]) + ',' + qbuf + ',' + std::to_string(v) + '\n';
    }
  }

  std::vector<double> abs_b1;
  abs_b1.reserve(res.records.size());
  for (const auto& r : res.records) abs_b1.push_back(std::abs(r.b1));
  const double med_b1 = median_of(std::move(abs_b1));
  const double eta_used = curve_eta(spec);
  std::string curves = "eps,linear_arm,sublinear_arm,gap_curve\n";
  for (double e : grid) {
    const CurvePoint c = eval_curves(spec, eta_used, med_b1, e);
    curves += fmt_g(e) + ',' + fmt_g(c.linear_arm) + ',' + fmt_g(c.sublinear_arm) + ',' +
              fmt_g(c.gap_curve) + '\n';
  }

  const std::string spec_dump = spec_to_json(spec).dump();
  char hash_buf[24];
  std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(spec_dump)));
  std::string inputs_hash = hash_buf;
  std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(ensemble + cdf + curves)));
  std::string outputs_hash = hash_buf;

  nlohmann::json manifest{{"spec", spec_to_json(spec)},
                          {"n_records", res.records.size()},
                          {"fitted_constant", res.fitted_constant},
                          {"median_abs_b1", med_b1},
                          {"content_hash", inputs_hash},
                          {"outputs_hash", outputs_hash}};

  write_file((fs::path(out_dir) / "ensemble.csv").string(), ensemble);
  write_file((fs::path(out_dir) / "cdf.csv").string(), cdf);
  write_file((fs::path(out_dir) / "curves.csv").string(), curves);
  write_file((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

LineSearchComparison run_linesearch_comparison(const CubicProblem& p,
                                               const std::vector<StepDomain>& domains,
                                               std::int64_t max_iters, double x0_fraction) {
  LineSearchComparison cmp;
  cmp.domains = domains;
  cmp.runs.reserve(domains.size());
  for (StepDomain dom : domains)
    cmp.runs.push_back(line_search_run(p, dom, x0_fraction, max_iters).second);

  GdConfig cfg;
  cfg.init_radius_fraction = x0_fraction;
  cfg.max_iters = max_iters;
  cmp.fixed_eta = default_step_size(p);
  cmp.fixed_step = gd_run(p, cfg).second;
  return cmp;
}

void write_linesearch_csv(const std::string& path, const LineSearchComparison& cmp) {
  std::string out = "domain,iter,f,norm_x,grad_norm,step,eta_t,lambda_min_hess\n";
  for (std::size_t k = 0; k < cmp.runs.size(); ++k) {
    const LineSearchTrace& tr = cmp.runs[k];
    const char* name = to_string(cmp.domains[k]);
    for (std::size_t t = 0; t < tr.f_val.size(); ++t)
      out += std::string(name) + ',' + std::to_string(t) + ',' + fmt_g(tr.f_val[t]) + ',' +
             fmt_g(tr.norm_x[t]) + ',' + fmt_g(tr.grad_norm[t]) + ',' + fmt_g(tr.step_size[t]) +
             ',' + fmt_g(tr.eta_t[t]) + ',' + fmt_g(tr.lambda_min_hess[t]) + '\n';
  }
  const SolverTrace& fx = cmp.fixed_step;
  for (std::size_t t = 0; t < fx.f_val.size(); ++t)
    out += "fixed," + std::to_string(t) + ',' + fmt_g(fx.f_val[t]) + ',' + fmt_g(fx.norm_x[t]) +
           ',' + fmt_g(fx.grad_norm[t]) + ',' + fmt_g(fx.step_size[t]) + ',' +
           fmt_g(fx.step_size[t]) + ",\n";
  write_file(path, out);
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace cubegrad
