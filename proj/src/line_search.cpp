#include "cubegrad/line_search.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "cubegrad/gd.hpp"

namespace cubegrad {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr Eigen::Index kLambdaMinDimCap = 200;

// All scalars of h(eta) = f(x - eta g) for g = grad f(x). Only g'Ag needs an
// operator application; the x-side products follow from Ax = g - b - rho||x||x.
struct StepScalars {
  double rho, xx, xg, gg, bx, bg, gAg;
  double nx, xAg, xAx;

  void derive() {
    nx = std::sqrt(xx);
    xAg = gg - bg - rho * nx * xg;
    xAx = xg - bx - rho * nx * xx;
  }

  double Q(double eta) const { return xx - 2.0 * eta * xg + eta * eta * gg; }

  double h(double eta) const {
    const double q = std::max(0.0, Q(eta));
    return 0.5 * xAx - eta * xAg + 0.5 * eta * eta * gAg + bx - eta * bg +
           (rho / 3.0) * q * std::sqrt(q);
  }

  double hprime(double eta) const {
    const double N = eta * gAg - (xAg + bg);
    const double L = eta * gg - xg;
    return N + rho * std::sqrt(std::max(0.0, Q(eta))) * L;
  }
};

// Real roots of the quartic p4 x^4 + ... + p0 via companion-matrix eigenvalues.
void quartic_real_roots(const double p[5], std::vector<double>& roots) {
  roots.clear();
  const double lead = p[4];
  Eigen::Matrix4d C = Eigen::Matrix4d::Zero();
  C(1, 0) = C(2, 1) = C(3, 2) = 1.0;
  for (int i = 0; i < 4; ++i) C(i, 3) = -p[i] / lead;
  Eigen::EigenSolver<Eigen::Matrix4d> es(C, /*computeEigenvectors=*/false);
  for (int i = 0; i < 4; ++i) {
    const auto z = es.eigenvalues()[i];
    if (std::abs(z.imag()) <= 1e-8 * std::max(1.0, std::abs(z.real())))
      roots.push_back(z.real());
  }
}

double exact_step_scalars(StepScalars sc, StepDomain domain) {
  sc.derive();
  if (sc.gg <= 0.0) throw std::invalid_argument("exact_step: gradient must be nonzero");

  const double q0 = sc.xx, q1 = -2.0 * sc.xg, q2 = sc.gg;
  const double l0 = -sc.xg, l1 = sc.gg;
  const double n0 = -(sc.xAg + sc.bg), n1 = sc.gAg;
  const double r2 = sc.rho * sc.rho;
  const double p[5] = {
      r2 * (q0 * l0 * l0) - n0 * n0,
      r2 * (q1 * l0 * l0 + 2.0 * q0 * l0 * l1) - 2.0 * n0 * n1,
      r2 * (q2 * l0 * l0 + 2.0 * q1 * l0 * l1 + q0 * l1 * l1) - n1 * n1,
      r2 * (2.0 * q2 * l0 * l1 + q1 * l1 * l1),
      r2 * (q2 * l1 * l1),  // rho^2 ||g||^6 > 0: always a genuine quartic
  };

  std::vector<double> roots;
  quartic_real_roots(p, roots);

  double upper = kInf;
  if (domain == StepDomain::guarded) {
    const double hinge = sc.gAg / sc.gg + sc.rho * sc.nx;
    if (hinge > 0.0) upper = 1.0 / hinge;
  }

  std::vector<double> cands;
  for (double r : roots) {
    // Squaring h' = 0 introduces roots of the wrong radical branch; keep only
    // points where h' itself vanishes at the scale of its two addends.
    const double N = r * sc.gAg - (sc.xAg + sc.bg);
    const double L = r * sc.gg - sc.xg;
    const double scale = std::abs(N) + sc.rho * std::sqrt(std::max(0.0, sc.Q(r))) * std::abs(L);
    if (std::abs(sc.hprime(r)) > 1e-9 * (scale + 1e-300)) continue;
    if (domain != StepDomain::unconstrained && r < 0.0) continue;
    if (r > upper) continue;
    cands.push_back(r);
  }
  if (domain != StepDomain::unconstrained) cands.push_back(0.0);
  if (std::isfinite(upper)) cands.push_back(upper);
  if (cands.empty()) {
    // Filter too aggressive (extreme scaling); fall back to unfiltered roots.
    for (double r : roots)
      if (domain == StepDomain::unconstrained || (r >= 0.0 && r <= upper)) cands.push_back(r);
    if (cands.empty()) throw std::runtime_error("exact_step: no candidate minimizer");
  }

  double best_eta = cands.front();
  double best_h = sc.h(best_eta);
  for (std::size_t i = 1; i < cands.size(); ++i) {
    const double hv = sc.h(cands[i]);
    const bool better =
        hv < best_h ||
        (hv == best_h && cands[i] >= 0.0 && (best_eta < 0.0 || cands[i] < best_eta));
    if (better) {
      best_h = hv;
      best_eta = cands[i];
    }
  }
  return best_eta;
}

double lambda_min_hess(const CubicProblem& p, const Eigen::VectorXd& x) {
  if (p.A.kind() != OperatorKind::dense || p.dim() > kLambdaMinDimCap)
    return std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd H = p.A.dense();
  const double nx = x.norm();
  H.diagonal().array() += p.rho * nx;
  if (nx > 0.0) H += (p.rho / nx) * (x * x.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

}  // namespace

const char* to_string(StepDomain d) {
  switch (d) {
    case StepDomain::unconstrained:
      return "unconstrained";
    case StepDomain::nonnegative:
      return "nonnegative";
    case StepDomain::guarded:
      return "guarded";
  }
  return "unknown";
}

double exact_step(const CubicProblem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                  StepDomain domain) {
  if (x.size() != p.dim() || g.size() != p.dim())
    throw std::invalid_argument("exact_step: dim mismatch");
  StepScalars sc;
  sc.rho = p.rho;
  sc.xx = x.squaredNorm();
  sc.xg = x.dot(g);
  sc.gg = g.squaredNorm();
  sc.bx = p.b.dot(x);
  sc.bg = p.b.dot(g);
  sc.gAg = g.dot(p.A.apply(g));
  return exact_step_scalars(sc, domain);
}

std::pair<Eigen::VectorXd, LineSearchTrace> line_search_run(const CubicProblem& p,
                                                            StepDomain domain, double x0_fraction,
                                                            std::int64_t max_iters) {
  Eigen::VectorXd x = init_point(p, x0_fraction);
  Eigen::VectorXd Ax = p.A.apply(x);
  Eigen::VectorXd g(p.dim()), Ag(p.dim());
  const double stop_tol = 1e-14 * (1.0 + p.b.norm());

  LineSearchTrace trace;
  double f = 0.0, ng = 0.0;
  std::int64_t t = 0;
  for (;; ++t) {
    const double nx = x.norm();
    f = 0.5 * x.dot(Ax) + p.b.dot(x) + (p.rho / 3.0) * nx * nx * nx;
    g = Ax + p.b + (p.rho * nx) * x;
    ng = g.norm();
    if (!std::isfinite(f) || !std::isfinite(ng))
      throw std::runtime_error("line_search_run: non-finite value at iteration " +
                               std::to_string(t));
    trace.f_val.push_back(f);
    trace.norm_x.push_back(nx);
    trace.grad_norm.push_back(ng);
    trace.lambda_min_hess.push_back(lambda_min_hess(p, x));
    if (ng <= stop_tol) {
      trace.converged = true;
      trace.eta_t.push_back(0.0);
      trace.step_size.push_back(0.0);
      break;
    }
    if (t >= max_iters) {
      trace.eta_t.push_back(0.0);
      trace.step_size.push_back(0.0);
      break;
    }

    p.A.apply(g, Ag);
    StepScalars sc;
    sc.rho = p.rho;
    sc.xx = nx * nx;
    sc.xg = x.dot(g);
    sc.gg = ng * ng;
    sc.bx = p.b.dot(x);
    sc.bg = p.b.dot(g);
    sc.gAg = g.dot(Ag);
    const double eta = exact_step_scalars(sc, domain);
    trace.eta_t.push_back(eta);
    trace.step_size.push_back(eta);

    x -= eta * g;
    if ((t + 1) % 1024 == 0) {
      p.A.apply(x, Ax);  // periodic refresh bounds incremental-update drift
    } else {
      Ax -= eta * Ag;
    }
  }

  trace.iters = t;
  trace.final_f = f;
  trace.final_grad_norm = ng;
  return {std::move(x), std::move(trace)};
}

void write_trace_csv(const std::string& path, const LineSearchTrace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trace file for writing: " + path);
  out.precision(17);
  out << "iter,f,norm_x,grad_norm,step,eta_t,lambda_min_hess\n";
  for (std::size_t t = 0; t < trace.f_val.size(); ++t) {
    out << t << ',' << trace.f_val[t] << ',' << trace.norm_x[t] << ',' << trace.grad_norm[t]
        << ',' << trace.step_size[t] << ',' << trace.eta_t[t] << ',' << trace.lambda_min_hess[t]
        << "\n";
  }
  if (!out) throw std::runtime_error("failed writing trace file: " + path);
}

}  // namespace cubegrad
