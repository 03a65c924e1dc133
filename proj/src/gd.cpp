#include "cubegrad/gd.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cubegrad/rng.hpp"

namespace cubegrad {

namespace {

constexpr std::size_t kMaxRecordedViolations = 1024;

struct PerturbContext {
  double sigma = 0.0;
  const Eigen::VectorXd* q = nullptr;  // unit direction; objective uses b + sigma q
};

void note_violation(SolverTrace& trace, std::int64_t iter, const char* quantity, double excess) {
  if (trace.violations.size() < kMaxRecordedViolations)
    trace.violations.push_back({iter, quantity, excess});
}

// Shared fixed-step engine. `p` already carries the (possibly perturbed) b;
// when ctx is set the trace additionally records f for the unperturbed b.
std::pair<Eigen::VectorXd, SolverTrace> run_engine(const CubicProblem& p, const GdConfig& cfg,
                                                   const GdHook& hook, const PerturbContext* ctx) {
  const double eta_cap = default_step_size(p);
  const double eta = cfg.eta > 0.0 ? cfg.eta : eta_cap;
  if (!cfg.allow_eta_override && eta > eta_cap * (1.0 + 1e-12))
    throw std::invalid_argument("gd_run: eta exceeds 1/(4(beta+rho R)); set allow_eta_override");
  if (cfg.init_radius_fraction < 0.0 || cfg.init_radius_fraction > 1.0)
    throw std::invalid_argument("gd_run: init_radius_fraction must lie in [0,1]");
  const double grad_tol = cfg.grad_tol >= 0.0 ? cfg.grad_tol : 1e-10 * (1.0 + p.b.norm());
  const double R = radius_upper_R(p);

  Eigen::VectorXd x = init_point(p, cfg.init_radius_fraction);
  Eigen::VectorXd Ax(p.dim()), g(p.dim());

  auto refresh = [&](double& f, double& nx, double& ng) {
    p.A.apply(x, Ax);
    nx = x.norm();
    f = 0.5 * x.dot(Ax) + p.b.dot(x) + (p.rho / 3.0) * nx * nx * nx;
    g = Ax + p.b + (p.rho * nx) * x;
    ng = g.norm();
  };

  double f, nx, ng;
  refresh(f, nx, ng);

  const double scale = std::max({1.0, R, std::abs(f)});
  const double slack = 1e-10 * scale;

  SolverTrace trace;
  trace.snapshot_stride = cfg.snapshot_stride;

  auto record = [&](std::int64_t t) {
    if (cfg.record_trace) {
      trace.f_val.push_back(f);
      trace.norm_x.push_back(nx);
      trace.grad_norm.push_back(ng);
      trace.step_size.push_back(eta);
      if (ctx) trace.f_unperturbed.push_back(f - ctx->sigma * ctx->q->dot(x));
    }
    if (cfg.snapshot_stride > 0 && t % cfg.snapshot_stride == 0) trace.snapshots.push_back(x);
  };

  std::int64_t t = 0;
  for (;; ++t) {
    if (!std::isfinite(f) || !std::isfinite(ng))
      throw std::runtime_error("gd_run: non-finite value at iteration " + std::to_string(t));
    record(t);
    if (cfg.monitor_invariants) {
      const double xg = x.dot(g);
      if (xg > slack) note_violation(trace, t, "x_dot_grad", xg);
      if (nx > R + slack) note_violation(trace, t, "norm_bound", nx - R);
      if (ctx) {
        const double dev = std::abs(ctx->sigma * ctx->q->dot(x)) - ctx->sigma * nx;
        if (dev > slack) note_violation(trace, t, "perturbation_gap", dev);
      }
    }
    if (hook && !hook(t, f, nx, ng, x)) break;
    if (ng <= grad_tol) {
      trace.converged = true;
      break;
    }
    if (t >= cfg.max_iters) break;

    const double prev_f = f, prev_nx = nx, prev_ng = ng;
    x -= eta * g;
    refresh(f, nx, ng);
    if (cfg.monitor_invariants) {
      if (nx < prev_nx - slack) note_violation(trace, t + 1, "norm_monotone", prev_nx - nx);
      const double descent_rhs = prev_f - 0.5 * eta * prev_ng * prev_ng;
      if (f > descent_rhs + slack) note_violation(trace, t + 1, "descent", f - descent_rhs);
    }
  }

  trace.iters = t;
  trace.final_f = f;
  trace.final_grad_norm = ng;
  return {std::move(x), std::move(trace)};
}

double clamp_eps(double eps, double beta, double rho, double norm_s, bool& clamped) {
  const double cap = 0.5 * beta * norm_s * norm_s + rho * norm_s * norm_s * norm_s;
  if (eps > cap && cap > 0.0) {
    clamped = true;
    return cap;
  }
  return eps;
}

}  // namespace

const char* to_string(Regime r) {
  switch (r) {
    case Regime::linear:
      return "linear";
    case Regime::sublinear:
      return "sublinear";
    case Regime::gap:
      return "gap";
  }
  return "unknown";
}

double default_step_size(const CubicProblem& p) {
  return 1.0 / (4.0 * (p.beta + p.rho * radius_upper_R(p)));
}

Eigen::VectorXd init_point(const CubicProblem& p, double fraction) {
  if (fraction < 0.0 || fraction > 1.0)
    throw std::invalid_argument("init_point: fraction must lie in [0,1]");
  const double nb = p.b.norm();
  if (nb == 0.0) return Eigen::VectorXd::Zero(p.dim());
  return (-fraction * cauchy_radius(p) / nb) * p.b;
}

std::pair<Eigen::VectorXd, SolverTrace> gd_run(const CubicProblem& p, const GdConfig& cfg,
                                               const GdHook& hook) {
  return run_engine(p, cfg, hook, nullptr);
}

PerturbSpec make_perturbation(const CubicProblem& p, double eps, double sigma_bar,
                              double norm_s_est, std::uint64_t seed) {
  if (!(eps > 0.0)) throw std::invalid_argument("make_perturbation: eps must be positive");
  if (!(sigma_bar > 0.0 && sigma_bar <= 1.0))
    throw std::invalid_argument("make_perturbation: sigma_bar must lie in (0,1]");
  if (!(norm_s_est > 0.0))
    throw std::invalid_argument("make_perturbation: norm_s_est must be positive");
  PerturbSpec ps;
  ps.sigma = p.rho * eps / (p.beta + 2.0 * p.rho * norm_s_est) * sigma_bar / 12.0;
  ps.sigma_bar = sigma_bar;
  ps.seed = seed;
  rng::Stream stream(seed);
  ps.q = stream.unit_sphere(p.dim());
  return ps;
}

PerturbSpec make_perturbation(const CubicProblem& p, double eps, double sigma_bar,
                              std::uint64_t seed) {
  return make_perturbation(p, eps, sigma_bar, radius_upper_R(p), seed);
}

std::pair<Eigen::VectorXd, SolverTrace> gd_run_perturbed(const CubicProblem& p,
                                                         const GdConfig& cfg,
                                                         const PerturbSpec& ps,
                                                         const GdHook& hook) {
  CubicProblem tilde(p.A, p.b + ps.sigma * ps.q, p.rho, p.beta);
  PerturbContext ctx{ps.sigma, &ps.q};
  return run_engine(tilde, cfg, hook, &ctx);
}

BoundReport bound_T_eps(const CubicProblem& p, const ExactSolution& sol, const SpectralInfo& spec,
                        double eta, double eps, double b1) {
  if (b1 == 0.0)
    throw std::invalid_argument("bound_T_eps: b1 = 0; use bound_T_eps_perturbed instead");
  if (!(eps > 0.0)) throw std::invalid_argument("bound_T_eps: eps must be positive");
  if (!(eta > 0.0)) throw std::invalid_argument("bound_T_eps: eta must be positive");
  const double ns = sol.norm_s;
  BoundReport rep;
  const double e = clamp_eps(eps, p.beta, p.rho, ns, rep.eps_clamped);
  rep.t_grow = spec.gamma > 0.0
                   ? 6.0 * std::log1p(spec.gamma_plus * spec.gamma_plus /
                                      (4.0 * p.rho * std::abs(b1)))
                   : 0.0;
  rep.L_s = p.beta + 2.0 * p.rho * ns;
  rep.t_conv = 6.0 * std::log(rep.L_s * ns * ns / e);
  const double inf = std::numeric_limits<double>::infinity();
  const double lin = sol.margin > 0.0 ? 1.0 / sol.margin : inf;
  const double sub = 10.0 * ns * ns / e;
  rep.T_eps = (1.0 / eta) * (rep.t_grow + rep.t_conv) * std::min(lin, sub);
  if (sol.margin <= e / (10.0 * ns * ns)) {
    const double denom = std::min(spec.gap, p.rho * ns);
    rep.T_eps_prime = denom > 0.0
                          ? (1.0 / eta) * (rep.t_grow + rep.t_conv) *
                                std::sqrt(10.0 * ns * ns / (e * denom))
                          : inf;
    rep.regime = Regime::gap;
  } else {
    rep.regime = lin <= sub ? Regime::linear : Regime::sublinear;
  }
  return rep;
}

BoundReport bound_T_eps_perturbed(double norm_s, double gamma, double beta, double gap, double rho,
                                  double eta, double eps, double sigma_bar, Eigen::Index d,
                                  double delta) {
  if (!(eps > 0.0)) throw std::invalid_argument("bound_T_eps_perturbed: eps must be positive");
  if (!(sigma_bar > 0.0 && sigma_bar <= 1.0))
    throw std::invalid_argument("bound_T_eps_perturbed: sigma_bar must lie in (0,1]");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("bound_T_eps_perturbed: delta must lie in (0,1)");
  if (d < 3) throw std::invalid_argument("bound_T_eps_perturbed: d must be at least 3");
  BoundReport rep;
  const double e = clamp_eps(eps, beta, rho, norm_s, rep.eps_clamped);
  rep.t_grow = 6.0 * std::log1p(gamma > 0.0
                                    ? 3.0 * std::sqrt(static_cast<double>(d)) /
                                          (sigma_bar * delta)
                                    : 0.0);
  rep.L_s = beta + 2.0 * rho * norm_s;
  rep.t_conv = 14.0 * std::log(rep.L_s * norm_s * norm_s / e);
  const double inf = std::numeric_limits<double>::infinity();
  const double margin = rho * norm_s - gamma;
  const double lin = margin > 0.0 ? 1.0 / margin : inf;
  const double sub = 10.0 * norm_s * norm_s / e;
  const double pre = (1.0 + sigma_bar) / eta;
  rep.T_eps = pre * (rep.t_grow + rep.t_conv) * std::min(lin, sub);
  if (margin <= (1.0 - 2.0 * sigma_bar / 3.0) * e / (10.0 * norm_s * norm_s)) {
    const double denom = std::min(gap, rho * norm_s);
    rep.T_eps_prime = denom > 0.0
                          ? pre * (rep.t_grow + rep.t_conv) *
                                std::sqrt(10.0 * norm_s * norm_s / (e * denom))
                          : inf;
    rep.regime = Regime::gap;
  } else {
    rep.regime = lin <= sub ? Regime::linear : Regime::sublinear;
  }
  return rep;
}

bool growth_time_check(const SolverTrace& trace, const CubicProblem& p, const SpectralInfo& spec,
                       double eta, double delta, double b1) {
  if (!(delta > 0.0)) throw std::invalid_argument("growth_time_check: delta must be positive");
  double t0;
  if (spec.gamma_plus == 0.0) {
    t0 = 0.0;
  } else if (b1 == 0.0) {
    return true;  // infinite threshold, condition vacuous
  } else {
    t0 = (2.0 / (eta * delta)) *
         std::log1p(spec.gamma_plus * spec.gamma_plus / (4.0 * p.rho * std::abs(b1)));
  }
  const double floor = spec.gamma - delta - 1e-10;
  for (std::size_t t = 0; t < trace.norm_x.size(); ++t) {
    if (static_cast<double>(t) >= t0 && p.rho * trace.norm_x[t] < floor) return false;
  }
  return true;
}

bool contraction_check(const SolverTrace& trace, const ExactSolution& sol, double eta) {
  if (trace.snapshot_stride != 1)
    throw std::invalid_argument("contraction_check: needs snapshots at stride 1");
  if (trace.snapshots.size() < 2)
    throw std::invalid_argument("contraction_check: needs at least two snapshots");
  const double rho = sol.norm_s > 0.0 ? sol.multiplier / sol.norm_s : 0.0;
  const double gamma = sol.multiplier - sol.margin;
  const double pivot = gamma - 0.5 * sol.margin;
  for (std::size_t k = 1; k < trace.snapshots.size(); ++k) {
    const double prev = (trace.snapshots[k - 1] - sol.s).squaredNorm();
    const double lhs = (trace.snapshots[k] - sol.s).squaredNorm();
    const double factor = 1.0 - eta * (rho * trace.snapshots[k].norm() - pivot);
    if (lhs > factor * prev + 1e-9 * prev + 1e-300) return false;
  }
  return true;
}

void write_trace_csv(const std::string& path, const SolverTrace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trace file for writing: " + path);
  out.precision(17);
  const bool perturbed = !trace.f_unperturbed.empty();
  out << "iter,f,norm_x,grad_norm,step";
  if (perturbed) out << ",f_unperturbed";
  out << "\n";
  for (std::size_t t = 0; t < trace.f_val.size(); ++t) {
    out << t << ',' << trace.f_val[t] << ',' << trace.norm_x[t] << ',' << trace.grad_norm[t]
        << ',' << trace.step_size[t];
    if (perturbed) out << ',' << trace.f_unperturbed[t];
    out << "\n";
  }
  if (!out) throw std::runtime_error("failed writing trace file: " + path);
}

}  // namespace cubegrad
