#pragma once

#include <string>

#include "json.hpp"

#include "cubegrad/exact_oracle.hpp"
#include "cubegrad/gd.hpp"
#include "cubegrad/problem.hpp"

namespace cubegrad {

// Wire format:
//   dense:    {"A": [a00, a01, ..., row-major, d*d entries], "b": [...], "rho": x, "beta": x}
//   diagonal: {"diag": [...], "b": [...], "rho": x, "beta": x}
// Parse errors carry the JSON pointer of the offending field, e.g. "/A".
CubicProblem problem_from_json(const nlohmann::json& j);
nlohmann::json problem_to_json(const CubicProblem& p);

// Reads and parses a problem file; throws std::runtime_error with the file
// path in the message on I/O or parse failure.
CubicProblem load_problem(const std::string& path);

// {final_f, iters, converged, invariant_violations}
nlohmann::json trace_summary_json(const SolverTrace& trace);

nlohmann::json solution_to_json(const ExactSolution& sol);

nlohmann::json bound_report_to_json(const BoundReport& report);

}  // namespace cubegrad
