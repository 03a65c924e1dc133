#include "cubegrad/json_io.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace cubegrad {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& pointer, const std::string& what) {
  throw std::runtime_error("\"" + pointer + "\": " + what);
}

double get_number(const json& j, const std::string& pointer) {
  const json* v = j.contains(json::json_pointer(pointer))
                      ? &j.at(json::json_pointer(pointer))
                      : nullptr;
  if (!v) fail(pointer, "missing required number");
  if (!v->is_number()) fail(pointer, "expected a number");
  const double x = v->get<double>();
  if (!std::isfinite(x)) fail(pointer, "must be finite");
  return x;
}

Eigen::VectorXd get_vector(const json& j, const std::string& pointer) {
  const json* v = j.contains(json::json_pointer(pointer))
                      ? &j.at(json::json_pointer(pointer))
                      : nullptr;
  if (!v) fail(pointer, "missing required array");
  if (!v->is_array()) fail(pointer, "expected an array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v->size()));
  Eigen::Index i = 0;
  for (const auto& e : *v) {
    if (!e.is_number()) fail(pointer + "/" + std::to_string(i), "expected a number");
    out[i] = e.get<double>();
    if (!std::isfinite(out[i])) fail(pointer + "/" + std::to_string(i), "must be finite");
    ++i;
  }
  return out;
}

}  // namespace

CubicProblem problem_from_json(const json& j) {
  if (!j.is_object()) fail("", "expected a JSON object");
  const Eigen::VectorXd b = get_vector(j, "/b");
  const double rho = get_number(j, "/rho");
  const double beta = get_number(j, "/beta");
  const Eigen::Index d = b.size();
  if (d == 0) fail("/b", "must be non-empty");

  const bool has_dense = j.contains("A");
  const bool has_diag = j.contains("diag");
  if (has_dense == has_diag) fail("", "exactly one of \"A\" or \"diag\" is required");

  LinearOperator op = [&] {
    if (has_dense) {
      const Eigen::VectorXd flat = get_vector(j, "/A");
      if (flat.size() != d * d) fail("/A", "expected dim(b)^2 row-major entries");
      kernels::RowMat A(d, d);
      for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < d; ++c) A(r, c) = flat[r * d + c];
      if (!A.isApprox(A.transpose(), 1e-12)) fail("/A", "matrix must be symmetric");
      return LinearOperator::Dense(std::move(A));
    }
    Eigen::VectorXd diag = get_vector(j, "/diag");
    if (diag.size() != d) fail("/diag", "length must equal dim(b)");
    return LinearOperator::Diagonal(std::move(diag));
  }();

  if (!(rho > 0.0)) fail("/rho", "must be positive");
  if (!(beta > 0.0)) fail("/beta", "must be positive");
  return CubicProblem(std::move(op), b, rho, beta);
}

json problem_to_json(const CubicProblem& p) {
  json j;
  switch (p.A.kind()) {
    case OperatorKind::dense: {
      const auto& A = p.A.dense();
      std::vector<double> flat;
      flat.reserve(static_cast<size_t>(A.size()));
      for (Eigen::Index r = 0; r < A.rows(); ++r)
        for (Eigen::Index c = 0; c < A.cols(); ++c) flat.push_back(A(r, c));
      j["A"] = flat;
      break;
    }
    case OperatorKind::diagonal: {
      const auto& dvec = p.A.diagonal();
      j["diag"] = std::vector<double>(dvec.data(), dvec.data() + dvec.size());
      break;
    }
    case OperatorKind::callback:
      throw std::logic_error("callback operators have no JSON form");
  }
  j["b"] = std::vector<double>(p.b.data(), p.b.data() + p.b.size());
  j["rho"] = p.rho;
  j["beta"] = p.beta;
  return j;
}

CubicProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open problem file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }
  try {
    return problem_from_json(j);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

json trace_summary_json(const SolverTrace& trace) {
  return json{{"final_f", trace.final_f},
              {"iters", trace.iters},
              {"converged", trace.converged},
              {"invariant_violations", trace.violations.size()},
              {"final_grad_norm", trace.final_grad_norm}};
}

json solution_to_json(const ExactSolution& sol) {
  return json{{"s", std::vector<double>(sol.s.data(), sol.s.data() + sol.s.size())},
              {"norm_s", sol.norm_s},
              {"f_s", sol.f_s},
              {"multiplier", sol.multiplier},
              {"hard_case", sol.hard_case},
              {"margin", sol.margin}};
}

json bound_report_to_json(const BoundReport& report) {
  json j{{"t_grow", report.t_grow},
         {"t_conv", report.t_conv},
         {"T_eps", report.T_eps},
         {"regime", to_string(report.regime)},
         {"L_s", report.L_s},
         {"eps_clamped", report.eps_clamped}};
  if (report.T_eps_prime) j["T_eps_prime"] = *report.T_eps_prime;
  return j;
}

}  // namespace cubegrad
