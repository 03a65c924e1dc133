#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "cubegrad/exact_oracle.hpp"
#include "cubegrad/majorization.hpp"
#include "cubegrad/problem.hpp"
#include "cubegrad/rng.hpp"

using cubegrad::CubicProblem;
using cubegrad::LinearOperator;
using cubegrad::SmoothFunction;
using cubegrad::SpConfig;
using cubegrad::SpResult;
using cubegrad::rng::Stream;

namespace {

Eigen::VectorXd fd_grad_of_value(const SmoothFunction& g, const Eigen::VectorXd& y) {
  const Eigen::Index d = y.size();
  Eigen::VectorXd out(d);
  const double h = 1e-6 * (1.0 + y.norm());
  Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    e[i] = h;
    out[i] = (g.value(y + e) - g.value(y - e)) / (2.0 * h);
    e[i] = 0.0;
  }
  return out;
}

// Pure quadratic saddle diag(-1, 1): the textbook verify_second_order failure.
SmoothFunction quadratic_saddle() {
  SmoothFunction f;
  f.dim = 2;
  f.beta = 1.0;
  f.rho = 1.0;
  f.g_lb = -100.0;
  f.value = [](const Eigen::VectorXd& y) { return 0.5 * (-y[0] * y[0] + y[1] * y[1]); };
  f.grad = [](const Eigen::VectorXd& y) {
    Eigen::VectorXd g(2);
    g << -y[0], y[1];
    return g;
  };
  f.hess_vec = [](const Eigen::VectorXd&, const Eigen::VectorXd& v) {
    Eigen::VectorXd h(2);
    h << -v[0], v[1];
    return h;
  };
  return f;
}

}  // namespace

TEST_CASE("fixtures declare consistent derivatives") {
  CHECK(cubegrad::fixture_names().size() == 3);
  CHECK_THROWS_AS(cubegrad::make_fixture("nope"), std::invalid_argument);
  for (const auto& name : cubegrad::fixture_names()) {
    CAPTURE(name);
    const SmoothFunction g = cubegrad::make_fixture(name);
    REQUIRE(g.dim == 4);
    CHECK(g.beta > 0.0);
    CHECK(g.rho > 0.0);
    Stream rs(301);
    for (int probe = 0; probe < 10; ++probe) {
      const Eigen::VectorXd y = 2.0 * rs.gaussian(g.dim);
      const Eigen::VectorXd u = rs.gaussian(g.dim);
      const Eigen::VectorXd v = rs.gaussian(g.dim);
      // grad matches a finite difference of value.
      CHECK((g.grad(y) - fd_grad_of_value(g, y)).norm() <= 1e-7 * (1.0 + g.grad(y).norm()));
      // hess_vec is symmetric and matches a finite difference of grad.
      const Eigen::VectorXd Hu = g.hess_vec(y, u);
      const Eigen::VectorXd Hv = g.hess_vec(y, v);
      CHECK(v.dot(Hu) == doctest::Approx(u.dot(Hv)).epsilon(1e-9));
      CHECK((Hu - cubegrad::hess_vec_or_fd(g, y, u)).norm() <= 1e-10);  // exact path
      SmoothFunction g_fd = g;
      g_fd.hess_vec = nullptr;
      CHECK((Hu - cubegrad::hess_vec_or_fd(g_fd, y, u)).norm() <= 1e-5 * (1.0 + Hu.norm()));
      // declared smoothness actually bounds the Hessian on the probe.
      CHECK(Hu.norm() <= g.beta * u.norm() * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("hess_vec_or_fd maps the zero direction to zero") {
  const SmoothFunction g = cubegrad::make_fixture("logcosh_valley");
  SmoothFunction g_fd = g;
  g_fd.hess_vec = nullptr;
  const Eigen::VectorXd y = Eigen::VectorXd::Ones(4);
  CHECK(cubegrad::hess_vec_or_fd(g_fd, y, Eigen::VectorXd::Zero(4)).norm() == 0.0);
}

TEST_CASE("ssp validates its parameters") {
  Eigen::VectorXd diag = Eigen::VectorXd::Ones(2);
  const LinearOperator A = LinearOperator::Diagonal(diag);
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_AS(cubegrad::ssp(A, b, 1.0, 1.0, 0.1, -1.0, 0.5, 0.1, 0), std::invalid_argument);
  CHECK_THROWS_AS(cubegrad::ssp(A, b, 1.0, 1.0, 0.1, 0.5, 1.5, 0.1, 0), std::invalid_argument);
  CHECK_THROWS_AS(cubegrad::ssp(A, b, 1.0, 1.0, 0.1, 0.5, 0.5, 0.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(cubegrad::ssp(A, b, 1.0, 1.0, 0.0, 0.5, 0.5, 0.1, 0), std::invalid_argument);
}

TEST_CASE("ssp returns the Cauchy point outright when the norm of b certifies progress") {
  // ||b|| = 5 >= max{sqrt(beta rho) s_lb^{3/2}, rho s_lb^2} = 0.613 with room
  // to spare, so f at the Cauchy point is already far below the threshold.
  Eigen::VectorXd diag(2);
  diag << 2.0, 3.0;
  Eigen::VectorXd b(2);
  b << 5.0, 0.0;
  const LinearOperator A = LinearOperator::Diagonal(diag);
  const double rho = 1.0, beta = 3.0, s_lb = 0.5, eps_prime = 0.5;
  CHECK(b.norm() >= std::max(std::sqrt(beta * rho) * std::pow(s_lb, 1.5), rho * s_lb * s_lb));
  const CubicProblem p(A, b, rho, beta);
  const double threshold = -(1.0 - eps_prime) * rho * s_lb * s_lb * s_lb / 6.0;
  const Eigen::VectorXd cp = cubegrad::cauchy_point(p);
  REQUIRE(cubegrad::eval_f(p, cp) <= threshold);
  const Eigen::VectorXd x = cubegrad::ssp(A, b, rho, beta, 0.1, s_lb, eps_prime, 0.1, 99);
  CHECK(x == cp);  // bitwise: returned before any perturbation
}

TEST_CASE("ssp failure return correctly signals a small solution norm") {
  // b = 0 with A positive definite: the oracle solution is 0, so no iterate
  // can reach the negative threshold and the last iterate comes back.
  Eigen::VectorXd diag(2);
  diag << 1.0, 2.0;
  const LinearOperator A = LinearOperator::Diagonal(diag);
  const Eigen::VectorXd b = Eigen::VectorXd::Zero(2);
  const double rho = 1.0, beta = 2.0, s_lb = 0.5, eps_prime = 0.5;
  const CubicProblem p(A, b, rho, beta);
  CHECK(cubegrad::solve_exact(p).norm_s == 0.0);
  const double threshold = -(1.0 - eps_prime) * rho * s_lb * s_lb * s_lb / 6.0;
  const Eigen::VectorXd x = cubegrad::ssp(A, b, rho, beta, 0.05, s_lb, eps_prime, 0.1, 7);
  CHECK(cubegrad::eval_f(p, x) > threshold);
  CHECK(x.norm() < s_lb);
}

TEST_CASE("ssp is deterministic in the seed") {
  Eigen::VectorXd diag(2);
  diag << -1.0, 1.0;
  Eigen::VectorXd b(2);
  b << 0.0, 0.1;
  const LinearOperator A = LinearOperator::Diagonal(diag);
  const Eigen::VectorXd x1 = cubegrad::ssp(A, b, 1.0, 1.0, 0.1, 0.5, 0.5, 0.1, 11);
  const Eigen::VectorXd x2 = cubegrad::ssp(A, b, 1.0, 1.0, 0.1, 0.5, 0.5, 0.1, 11);
  const Eigen::VectorXd x3 = cubegrad::ssp(A, b, 1.0, 1.0, 0.1, 0.5, 0.5, 0.1, 12);
  CHECK(x1 == x2);
  CHECK(x1 != x3);
}

TEST_CASE("ssp meets its threshold within budget on nearly every seed") {
  // Saddle with b orthogonal to the bottom eigenvector: the Cauchy point does
  // not certify (f(CP) = -0.0047 vs threshold -0.0104) but the solution norm
  // is 1 >= s_lb, so the perturbed run should succeed w.p. >= 1 - delta.
  // 500 trials at delta = 0.1: expect >= 450 - 3 sigma binomial slack = 429.
  Eigen::VectorXd diag(2);
  diag << -1.0, 1.0;
  Eigen::VectorXd b(2);
  b << 0.0, 0.1;
  const LinearOperator A = LinearOperator::Diagonal(diag);
  const double rho = 1.0, beta = 1.0, s_lb = 0.5, eps_prime = 0.5;
  const CubicProblem p(A, b, rho, beta);
  const auto sol = cubegrad::solve_exact(p);
  REQUIRE(sol.norm_s >= s_lb);
  const double threshold = -(1.0 - eps_prime) * rho * s_lb * s_lb * s_lb / 6.0;
  REQUIRE(cubegrad::eval_f(p, cubegrad::cauchy_point(p)) > threshold);
  int successes = 0;
  for (int seed = 0; seed < 500; ++seed) {
    const Eigen::VectorXd x =
        cubegrad::ssp(A, b, rho, beta, 1.0 / (10.0 * beta), s_lb, eps_prime, 0.1, 5000 + seed);
    if (cubegrad::eval_f(p, x) <= threshold) ++successes;
  }
  CHECK(successes >= 429);
}

TEST_CASE("sfsp returns immediately when the gradient already vanishes") {
  Eigen::VectorXd diag(2);
  diag << 1.0, 2.0;
  const LinearOperator A = LinearOperator::Diagonal(diag);
  const Eigen::VectorXd x =
      cubegrad::sfsp(A, Eigen::VectorXd::Zero(2), 1.0, 0.05, 1e-10, 1000);
  CHECK(x.norm() == 0.0);
}

TEST_CASE("sfsp matches the oracle on a convex instance") {
  Eigen::VectorXd diag(3);
  diag << 0.5, 1.0, 2.0;
  Eigen::VectorXd b(3);
  b << 0.3, -0.2, 0.1;
  const LinearOperator A = LinearOperator::Diagonal(diag);
  const CubicProblem p(A, b, 1.0, 2.0);
  const auto sol = cubegrad::solve_exact(p);
  const double eps_grad = 1e-10;
  const Eigen::VectorXd x = cubegrad::sfsp(A, b, 1.0, 1.0 / 20.0, eps_grad, 1000000);
  CHECK(cubegrad::eval_grad(p, x).norm() <= eps_grad);
  // Curvature is at least lambda_min(A) = 0.5 everywhere, so the gradient
  // bound pins the iterate to within 2 eps_grad of the solution.
  CHECK((x - sol.s).norm() <= 1e-9);
}

TEST_CASE("sfsp drives the gradient below 1e-8 on the two-well saddle") {
  cubegrad::kernels::RowMat Ad(2, 2);
  Ad << -7.0, 1.0, 1.0, -7.0;
  const LinearOperator A = LinearOperator::Dense(Ad);
  Eigen::VectorXd b(2);
  b << 0.2, 0.0;
  const CubicProblem p(A, b, 1.0, 8.0);
  const Eigen::VectorXd x = cubegrad::sfsp(A, b, 1.0, 1.0 / 80.0, 1e-8, 1000000);
  CHECK(cubegrad::eval_grad(p, x).norm() <= 1e-8);
  CHECK((x - cubegrad::solve_exact(p).s).norm() <= 1e-7);
}

TEST_CASE("sfsp reports inconsistent declarations through its iteration cap") {
  cubegrad::kernels::RowMat Ad(2, 2);
  Ad << -7.0, 1.0, 1.0, -7.0;
  const LinearOperator A = LinearOperator::Dense(Ad);
  Eigen::VectorXd b(2);
  b << 0.2, 0.0;
  CHECK_THROWS_WITH_AS(cubegrad::sfsp(A, b, 1.0, 1.0 / 80.0, 1e-12, 5),
                       doctest::Contains("inconsistent"), std::runtime_error);
  CHECK_THROWS_AS(cubegrad::sfsp(A, b, 1.0, 1.0 / 80.0, 0.0, 5), std::invalid_argument);
}

TEST_CASE("sp_run validates its inputs") {
  const SmoothFunction g = cubegrad::make_fixture("quad_bowl");
  const Eigen::VectorXd y4 = Eigen::VectorXd::Zero(4);
  CHECK_THROWS_AS(cubegrad::sp_run(g, Eigen::VectorXd::Zero(3), {1e-3, 0.1, 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(cubegrad::sp_run(g, y4, {0.0, 0.1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(cubegrad::sp_run(g, y4, {1e-3, 1.0, 0}), std::invalid_argument);
  SmoothFunction broken = g;
  broken.value = nullptr;
  CHECK_THROWS_AS(cubegrad::sp_run(broken, y4, {1e-3, 0.1, 0}), std::invalid_argument);
  SmoothFunction lifted = g;
  lifted.g_lb = 1.0;  // claims inf g = 1 while g(0) = 0
  CHECK_THROWS_AS(cubegrad::sp_run(lifted, y4, {1e-3, 0.1, 0}), std::invalid_argument);
}

TEST_CASE("sp_run on the quadratic bowl: frozen run and outer-loop invariants") {
  const SmoothFunction g = cubegrad::make_fixture("quad_bowl");
  Eigen::VectorXd y0 = Eigen::VectorXd::Zero(4);
  y0[0] = 1.0;
  const SpResult r = cubegrad::sp_run(g, y0, {1e-3, 0.1, 42});

  CHECK(r.outer_iters == 6);
  CHECK(r.total_gradient_evals == 23);
  CHECK(g.value(r.y_out) <= 1e-15);
  CHECK(r.certificate.grad_ok);
  CHECK(r.certificate.lambda_ok);
  CHECK(r.certificate.verified);
  CHECK(r.certificate.grad_norm <= 1e-3);
  CHECK(r.certificate.lambda_min_bound == doctest::Approx(0.25).epsilon(1e-12));

  // First outer step is analytic: the model's Cauchy step from ||y|| = 1 has
  // radius 1/2, so g drops from 1/8 to exactly 1/32.
  REQUIRE(r.outer_trace.size() == 6);
  CHECK(r.outer_trace[0].k == 1);
  CHECK(r.outer_trace[0].g_before == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(r.outer_trace[0].g_after == doctest::Approx(0.03125).epsilon(1e-13));
  CHECK(r.outer_trace[0].accepted);
  CHECK(r.outer_trace[0].evals_so_far == 3);

  const double progress = (1.0 / 324.0) * std::pow(1e-3, 1.5) / std::sqrt(g.rho);
  std::int64_t prev_evals = 0;
  for (const auto& rec : r.outer_trace) {
    if (rec.accepted) CHECK(rec.g_after <= rec.g_before - progress);
    CHECK(rec.evals_so_far > prev_evals);
    prev_evals = rec.evals_so_far;
  }
  CHECK_FALSE(r.outer_trace.back().accepted);
  CHECK(r.total_gradient_evals >= r.outer_trace.back().evals_so_far);

  const double k_max =
      std::ceil((0.125 - g.g_lb) * std::sqrt(g.rho) / ((1.0 / 324.0) * std::pow(1e-3, 1.5)));
  CHECK(static_cast<double>(r.outer_iters) <= k_max);
}

TEST_CASE("sp_run escapes the log-cosh saddle started exactly at it") {
  const SmoothFunction g = cubegrad::make_fixture("logcosh_saddle");
  const Eigen::VectorXd y0 = Eigen::VectorXd::Zero(4);
  // y0 is a strict saddle: gradient zero, bottom curvature -1/40.
  CHECK(g.grad(y0).norm() == 0.0);
  const auto at_start = cubegrad::verify_second_order(g, y0, 1e-3, g.rho);
  CHECK(at_start.grad_ok);
  CHECK_FALSE(at_start.lambda_ok);

  const SpResult r = cubegrad::sp_run(g, y0, {1e-3, 0.1, 42});
  CHECK(r.outer_iters == 14);
  CHECK(r.total_gradient_evals == 17286);
  CHECK(g.value(r.y_out) == doctest::Approx(-0.0010010135140094206).epsilon(1e-12));
  CHECK(g.value(r.y_out) >= g.g_lb);
  CHECK(std::abs(r.y_out[0]) == doctest::Approx(0.56762631926024232).epsilon(1e-10));
  for (int j = 1; j < 4; ++j) CHECK(std::abs(r.y_out[j]) <= 1e-7);

  CHECK(r.certificate.grad_ok);
  CHECK(r.certificate.lambda_ok);
  CHECK(r.certificate.verified);
  CHECK(r.certificate.grad_norm == doctest::Approx(1.1263868319021061e-05).epsilon(1e-8));
  CHECK(r.certificate.lambda_min_bound ==
        doctest::Approx(0.0037252712619300645).epsilon(1e-8));

  // Output gradient bound decomposes through the final model solve:
  // ||grad g|| <= ||model grad|| + 2 rho ||step||^2, with the addends within
  // their eps/2 and 2 eps/9 budgets.
  CHECK(r.certificate.grad_norm <= r.certificate.final_model_grad_norm +
                                       r.certificate.final_step_correction + 1e-12);
  CHECK(r.certificate.final_model_grad_norm <= 0.5e-3);
  CHECK(r.certificate.final_step_correction <= 2.0e-3 / 9.0);

  const double progress = (1.0 / 324.0) * std::pow(1e-3, 1.5) / std::sqrt(g.rho);
  for (const auto& rec : r.outer_trace)
    if (rec.accepted) CHECK(rec.g_after <= rec.g_before - progress);
}

TEST_CASE("sp_run reaches a certified point on the separable valley") {
  const SmoothFunction g = cubegrad::make_fixture("logcosh_valley");
  const SpResult r = cubegrad::sp_run(g, Eigen::VectorXd::Ones(4), {1e-3, 0.1, 5});
  CHECK(r.certificate.grad_ok);
  CHECK(r.certificate.lambda_ok);
  CHECK(g.value(r.y_out) >= g.g_lb);
  CHECK(g.value(r.y_out) <= g.value(Eigen::VectorXd::Ones(4)));
}

TEST_CASE("sp_run works through the finite-difference Hessian path") {
  SmoothFunction g = cubegrad::make_fixture("quad_bowl");
  g.hess_vec = nullptr;
  Eigen::VectorXd y0 = Eigen::VectorXd::Zero(4);
  y0[0] = 1.0;
  const SpResult r = cubegrad::sp_run(g, y0, {1e-3, 0.1, 42});
  CHECK(r.certificate.grad_ok);
  CHECK(r.certificate.grad_norm <= 1e-3);
  CHECK(g.value(r.y_out) <= 1e-10);
}

TEST_CASE("sp_run exhausts its outer budget only under a misdeclared lower bound") {
  // Linear descent direction with a fictitious finite lower bound: every
  // outer step makes progress, so the loop runs to K_max and reports the
  // declaration problem instead of looping forever.
  SmoothFunction g;
  g.dim = 2;
  g.beta = 0.25;
  g.rho = 0.5;
  g.g_lb = -0.01;  // wrong: inf g is -infinity
  g.value = [](const Eigen::VectorXd& y) { return 0.1 * y[0]; };
  g.grad = [](const Eigen::VectorXd& y) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(y.size());
    out[0] = 0.1;
    return out;
  };
  g.hess_vec = [](const Eigen::VectorXd&, const Eigen::VectorXd& v) {
    return Eigen::VectorXd(Eigen::VectorXd::Zero(v.size()));
  };
  CHECK_THROWS_WITH_AS(cubegrad::sp_run(g, Eigen::VectorXd::Zero(2), {1e-3, 0.1, 1}),
                       doctest::Contains("exhausted"), std::runtime_error);
}

TEST_CASE("sp_run proceeds with a warning above the epsilon validity range") {
  const SmoothFunction g = cubegrad::make_fixture("quad_bowl");
  Eigen::VectorXd y0 = Eigen::VectorXd::Zero(4);
  y0[0] = 1.0;
  SpResult r;
  CHECK_NOTHROW(r = cubegrad::sp_run(g, y0, {10.0, 0.1, 1}));
  CHECK(r.outer_iters >= 1);
}

TEST_CASE("verify_second_order separates saddles from minima at the right scale") {
  const SmoothFunction g = cubegrad::make_fixture("logcosh_saddle");
  const Eigen::VectorXd y0 = Eigen::VectorXd::Zero(4);

  // lambda_min(hessian at 0) = -1/40; the tolerance -sqrt(rho eps) is
  // -0.02236 at eps = 1e-3 (fails) and -0.0707 at eps = 1e-2 (passes).
  const auto tight = cubegrad::verify_second_order(g, y0, 1e-3, g.rho);
  CHECK(tight.verified);
  CHECK(tight.grad_ok);
  CHECK_FALSE(tight.lambda_ok);
  CHECK(tight.lambda_min_bound == doctest::Approx(-0.025).epsilon(1e-6));

  const auto loose = cubegrad::verify_second_order(g, y0, 1e-2, g.rho);
  CHECK(loose.lambda_ok);

  // Textbook quadratic saddle: lambda_min = -1 fails every eps < 1/rho.
  const auto qs = cubegrad::verify_second_order(quadratic_saddle(), Eigen::VectorXd::Zero(2),
                                                1e-2, 1.0);
  CHECK(qs.grad_ok);
  CHECK_FALSE(qs.lambda_ok);
  CHECK(qs.lambda_min_bound == doctest::Approx(-1.0).epsilon(1e-9));

  // Exact minimizer of the convex bowl: both conditions pass.
  const auto bowl = cubegrad::verify_second_order(cubegrad::make_fixture("quad_bowl"),
                                                  Eigen::VectorXd::Zero(4), 1e-3, 0.5);
  CHECK(bowl.grad_ok);
  CHECK(bowl.lambda_ok);
  CHECK(bowl.lambda_min_bound == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("verify_second_order reports dimensions beyond the dense cap as unverified") {
  SmoothFunction g;
  g.dim = 501;
  g.beta = 1.0;
  g.rho = 1.0;
  g.g_lb = 0.0;
  g.value = [](const Eigen::VectorXd& y) { return 0.5 * y.squaredNorm(); };
  g.grad = [](const Eigen::VectorXd& y) { return y; };
  const auto cert = cubegrad::verify_second_order(g, Eigen::VectorXd::Zero(501), 1e-3, 1.0);
  CHECK_FALSE(cert.verified);
  CHECK_FALSE(cert.lambda_ok);
  CHECK(cert.grad_ok);
  CHECK(std::isnan(cert.lambda_min_bound));
}
