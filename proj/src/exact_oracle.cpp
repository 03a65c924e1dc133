#include "cubegrad/exact_oracle.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace cubegrad {

namespace {

// Eigenvalues within this slack of lambda_min count as the bottom eigenspace;
// floating-point decompositions never produce exact ties.
double bottom_tol(double beta_exact) { return 1e-10 * std::max(1.0, beta_exact); }

// phi(r) = ||(A + rho r I)^{-1} b|| - r in the eigenbasis. t gets the solve
// coordinates -bhat_i/(lam_i + rho r) negated later; overflow to inf is fine
// for bracketing and disables the Newton step via a non-finite derivative.
double eval_phi(const Eigen::VectorXd& lam, const Eigen::VectorXd& bhat, double rho, double r,
                Eigen::VectorXd& t, double* dphi) {
  const Eigen::Index d = lam.size();
  t.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) t[i] = bhat[i] / (lam[i] + rho * r);
  const double n = t.stableNorm();
  if (dphi) {
    if (!std::isfinite(n) || n == 0.0) {
      *dphi = std::numeric_limits<double>::quiet_NaN();
    } else {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) {
        const double u = t[i] / n;
        acc += u * u / (lam[i] + rho * r);
      }
      *dphi = -rho * n * acc - 1.0;
    }
  }
  return n - r;
}

bool phi_converged(double phi, double r) { return std::abs(phi) <= 1e-12 * (1.0 + r); }

// Safeguarded Newton/bisection for the decreasing convex secular function.
double solve_secular(const Eigen::VectorXd& lam, const Eigen::VectorXd& bhat, double rho,
                     double lo, double hi) {
  Eigen::VectorXd t;
  double phi_lo = eval_phi(lam, bhat, rho, lo, t, nullptr);
  if (phi_lo <= 0.0) {
    // Root at or below the bracket floor: ||s|| equals the norm there.
    return std::isfinite(phi_lo) ? std::max(0.0, phi_lo + lo) : lo;
  }
  if (phi_converged(phi_lo, lo)) return lo;

  double phi_hi = eval_phi(lam, bhat, rho, hi, t, nullptr);
  for (int k = 0; k < 64 && phi_hi > 0.0; ++k) {
    hi = 2.0 * hi + 1.0;
    phi_hi = eval_phi(lam, bhat, rho, hi, t, nullptr);
  }
  if (phi_hi > 0.0) {
    std::ostringstream os;
    os << "secular bracketing failure: phi > 0 on [" << lo << ", " << hi << "]";
    throw std::runtime_error(os.str());
  }
  if (phi_converged(phi_hi, hi)) return hi;

  double r = hi, phi_r = phi_hi, dphi_r = std::numeric_limits<double>::quiet_NaN();
  for (int it = 0; it < 300; ++it) {
    double cand = std::numeric_limits<double>::quiet_NaN();
    if (std::isfinite(dphi_r) && dphi_r < 0.0) {
      const double step = phi_r / dphi_r;
      const double newton = r - step;
      if (newton > lo && newton < hi) cand = newton;
    }
    if (!std::isfinite(cand)) cand = lo + 0.5 * (hi - lo);
    double dphi = std::numeric_limits<double>::quiet_NaN();
    const double phi = eval_phi(lam, bhat, rho, cand, t, &dphi);
    if (phi_converged(phi, cand)) return cand;
    if (phi > 0.0)
      lo = cand;
    else
      hi = cand;
    r = cand;
    phi_r = phi;
    dphi_r = dphi;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
      // Bracket at machine resolution. When the root is steep (tiny bottom
      // coordinate of b), no representable r drives |phi| below
      // |phi'| * ulp(r); accept exactly that much. The gradient residual
      // check downstream still validates the solution it produces.
      double dphi_fin = std::numeric_limits<double>::quiet_NaN();
      const double phi_fin = eval_phi(lam, bhat, rho, r, t, &dphi_fin);
      const double slack = std::isfinite(dphi_fin)
                               ? std::abs(dphi_fin) * 8.0 *
                                     std::numeric_limits<double>::epsilon() * std::max(1.0, hi)
                               : 0.0;
      if (phi_converged(phi_fin, r) || std::abs(phi_fin) <= slack) return r;
      std::ostringstream os;
      os << "secular root refinement stalled on bracket [" << lo << ", " << hi
         << "] with residual " << phi_fin;
      throw std::runtime_error(os.str());
    }
  }
  std::ostringstream os;
  os << "secular iteration limit on bracket [" << lo << ", " << hi << "]";
  throw std::runtime_error(os.str());
}

}  // namespace

SpectralInfo spectral_decompose(const CubicProblem& p, Eigen::Index max_dim) {
  const Eigen::Index d = p.dim();
  if (p.A.kind() == OperatorKind::callback)
    throw std::invalid_argument("spectral_decompose: callback operators are not supported");
  if (d > max_dim)
    throw std::invalid_argument("spectral_decompose: dim exceeds cap " + std::to_string(max_dim));

  SpectralInfo info;
  if (p.A.kind() == OperatorKind::diagonal) {
    const Eigen::VectorXd& diag = p.A.diagonal();
    std::vector<Eigen::Index> order(static_cast<size_t>(d));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return diag[a] < diag[b]; });
    info.eigenvalues.resize(d);
    info.V = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index k = 0; k < d; ++k) {
      info.eigenvalues[k] = diag[order[static_cast<size_t>(k)]];
      info.V(order[static_cast<size_t>(k)], k) = 1.0;
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.A.dense());
    if (es.info() != Eigen::Success)
      throw std::runtime_error("spectral_decompose: eigensolver did not converge");
    info.eigenvalues = es.eigenvalues();
    info.V = es.eigenvectors();
  }
  info.gamma = -info.eigenvalues[0];
  info.gamma_plus = std::max(info.gamma, 0.0);
  info.beta_exact = std::max(std::abs(info.eigenvalues[0]), std::abs(info.eigenvalues[d - 1]));
  info.gap = 0.0;
  const double tol = bottom_tol(info.beta_exact);
  for (Eigen::Index k = 1; k < d; ++k) {
    if (info.eigenvalues[k] > info.eigenvalues[0] + tol) {
      info.gap = info.eigenvalues[k] - info.eigenvalues[0];
      break;
    }
  }
  return info;
}

ExactSolution solve_exact(const CubicProblem& p, Eigen::Index max_dim) {
  const SpectralInfo info = spectral_decompose(p, max_dim);
  const Eigen::Index d = p.dim();
  const double rho = p.rho;
  const double gamma = info.gamma;
  const Eigen::VectorXd bhat = info.V.transpose() * p.b;
  const double nb = p.b.norm();

  const double tol_eig = bottom_tol(info.beta_exact);
  std::vector<bool> bottom(static_cast<size_t>(d), false);
  for (Eigen::Index i = 0; i < d; ++i)
    bottom[static_cast<size_t>(i)] = info.eigenvalues[i] <= info.eigenvalues[0] + tol_eig;

  bool bottom_zero = true;
  for (Eigen::Index i = 0; i < d; ++i)
    if (bottom[static_cast<size_t>(i)] && std::abs(bhat[i]) > 1e-12 * nb) bottom_zero = false;

  ExactSolution sol;
  Eigen::VectorXd shat = Eigen::VectorXd::Zero(d);

  bool hard = false;
  if (bottom_zero && gamma > 0.0) {
    // Restricted solve at multiplier gamma, coordinates outside the bottom
    // eigenspace only; the residual bottom components (<= 1e-12 ||b||) are
    // treated as exact zeros.
    double n2 = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (bottom[static_cast<size_t>(i)]) continue;
      const double v = bhat[i] / (info.eigenvalues[i] + gamma);
      n2 += v * v;
    }
    const double n_restricted = std::sqrt(n2);
    hard = n_restricted < gamma / rho;
    if (hard) {
      for (Eigen::Index i = 0; i < d; ++i)
        if (!bottom[static_cast<size_t>(i)])
          shat[i] = -bhat[i] / (info.eigenvalues[i] + gamma);
      const double target = gamma / rho;
      const double tau = std::sqrt(std::max(0.0, target * target - n2));
      Eigen::VectorXd v1 = info.V.col(0);
      for (Eigen::Index i = 0; i < d; ++i) {
        if (v1[i] != 0.0) {
          if (v1[i] < 0.0) v1 = -v1;
          break;
        }
      }
      sol.s = info.V * shat + tau * v1;
      sol.hard_case = true;
    }
  }

  if (!hard) {
    const double lo = std::max(0.0, gamma / rho) + 1e-300;
    const double hi = radius_upper_R(p) * (1.0 + 1e-12) + 1e-300;
    const double r = solve_secular(info.eigenvalues, bhat, rho, lo, hi);
    for (Eigen::Index i = 0; i < d; ++i) shat[i] = -bhat[i] / (info.eigenvalues[i] + rho * r);
    sol.s = info.V * shat;
    sol.hard_case = false;

    // Near-hard repair. When the bottom coefficients of b are tiny, the root
    // sits a hair above gamma/rho and the divisions lambda_i + rho r for the
    // bottom coordinates cancel catastrophically: no representable r keeps
    // the gradient small. The non-bottom coordinates stay well conditioned,
    // so rebuild the bottom block along -b with its magnitude fixed by the
    // norm constraint ||s|| = r, exactly as in the hard case.
    if (eval_grad(p, sol.s).norm() > 1e-8 * (1.0 + nb)) {
      double n2 = 0.0, b_bot2 = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) {
        if (bottom[static_cast<size_t>(i)])
          b_bot2 += bhat[i] * bhat[i];
        else
          n2 += shat[i] * shat[i];
      }
      if (b_bot2 > 0.0) {
        const double tau = std::sqrt(std::max(0.0, r * r - n2));
        const double scale = tau / std::sqrt(b_bot2);
        Eigen::VectorXd repaired = shat;
        for (Eigen::Index i = 0; i < d; ++i)
          if (bottom[static_cast<size_t>(i)]) repaired[i] = -bhat[i] * scale;
        const Eigen::VectorXd s2 = info.V * repaired;
        if (eval_grad(p, s2).norm() < eval_grad(p, sol.s).norm()) sol.s = s2;
      }
    }
  }

  sol.norm_s = sol.s.norm();
  sol.multiplier = rho * sol.norm_s;
  sol.margin = sol.multiplier - gamma;
  sol.f_s = eval_f(p, sol.s);

  const double resid = eval_grad(p, sol.s).norm();
  if (!(resid <= 1e-8 * (1.0 + nb))) {
    std::ostringstream os;
    os << "solve_exact: optimality residual " << resid << " exceeds 1e-8*(1+||b||)";
    throw std::runtime_error(os.str());
  }
  return sol;
}

double suboptimality(const CubicProblem& p, const ExactSolution& sol, const Eigen::VectorXd& x) {
  if (x.size() != p.dim()) throw std::invalid_argument("suboptimality: dim mismatch");
  const double fx = eval_f(p, x);
  const double direct = fx - sol.f_s;

  const Eigen::VectorXd e = x - sol.s;
  const Eigen::VectorXd Ae = p.A.apply(e);
  const double nx = x.norm();
  const double ns = sol.norm_s;
  const double quad = 0.5 * (e.dot(Ae) + p.rho * ns * e.squaredNorm());
  const double cube = (p.rho / 6.0) * (ns - nx) * (ns - nx) * (ns + 2.0 * nx);
  const double via_identity = quad + cube;

  if (!(std::abs(direct - via_identity) <= 1e-8 * (1.0 + std::abs(fx)))) {
    std::ostringstream os;
    os << "suboptimality: dual evaluations disagree (direct " << direct << ", identity "
       << via_identity << ")";
    throw std::runtime_error(os.str());
  }
  return direct;
}

}  // namespace cubegrad
