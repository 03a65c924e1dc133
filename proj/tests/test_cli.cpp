#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <Eigen/Core>

#include "json.hpp"

#include "cubegrad/exact_oracle.hpp"
#include "cubegrad/experiments.hpp"
#include "cubegrad/gd.hpp"
#include "cubegrad/json_io.hpp"
#include "cubegrad/kernels.hpp"
#include "cubegrad/problem.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using cubegrad::CubicProblem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

const std::string& cli_path() {
  static const std::string path = [] {
    const char* p = std::getenv("CUBEGRAD_CLI");
    REQUIRE_MESSAGE(p != nullptr, "CUBEGRAD_CLI must point at the cli binary");
    return std::string(p);
  }();
  return path;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "cubegrad_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunResult run_cli(const std::string& args, const fs::path& workdir) {
  const fs::path cap = workdir / "capture.txt";
  const std::string cmd = "\"" + cli_path() + "\" " + args + " > \"" + cap.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(cap);
  std::ostringstream os;
  os << in.rdbuf();
  r.output = os.str();
  return r;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE_MESSAGE(in.good(), p.string());
  json j;
  in >> j;
  return j;
}

void check_manifest(const json& m, const std::string& subcommand, std::uint64_t seed) {
  CHECK(m.at("subcommand") == subcommand);
  CHECK(m.at("seed") == seed);
  CHECK(m.at("config").is_object());
  CHECK(m.at("versions").is_object());
  CHECK(m.at("versions").contains("cubegrad"));
  CHECK(m.at("wall_time_s").get<double>() >= 0.0);
}

std::string write_instance(const fs::path& dir, const CubicProblem& p) {
  const fs::path path = dir / "instance_in.json";
  std::ofstream out(path);
  out << cubegrad::problem_to_json(p).dump(2) << "\n";
  REQUIRE(out.good());
  return path.string();
}

}  // namespace

TEST_CASE("solve reaches the exact minimum and round-trips the instance") {
  const fs::path dir = fresh_dir("solve");
  const CubicProblem p = cubegrad::gen_trajectory_instance(6, 0.2, 1.0, 0.2, 0.5, 0.5);
  const auto sol = cubegrad::solve_exact(p);
  const std::string inst = write_instance(dir, p);

  const auto r = run_cli("solve --instance \"" + inst + "\" --out \"" + (dir / "out").string() +
                             "\" --max-iters 200000",
                         dir);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("solve: final_f=") != std::string::npos);

  const json summary = read_json(dir / "out" / "summary.json");
  CHECK(summary.at("final_f").get<double>() ==
        doctest::Approx(sol.f_s).epsilon(1e-6));
  CHECK(summary.at("converged").get<bool>());
  CHECK(summary.at("eta").get<double>() == cubegrad::default_step_size(p));
  check_manifest(read_json(dir / "out" / "manifest.json"), "solve", 1234567ull);
  CHECK(fs::exists(dir / "out" / "trace.csv"));

  // The echoed instance parses back to the same problem, field for field.
  const CubicProblem q = cubegrad::load_problem((dir / "out" / "instance.json").string());
  CHECK(q.b == p.b);
  CHECK(q.A.diagonal() == p.A.diagonal());
  CHECK(q.rho == p.rho);
  CHECK(q.beta == p.beta);
}

TEST_CASE("oracle subcommand reports the secular solution") {
  const fs::path dir = fresh_dir("oracle");
  const CubicProblem p = cubegrad::gen_trajectory_instance(6, 0.2, 1.0, 0.2, 0.5, 0.5);
  const auto sol = cubegrad::solve_exact(p);
  const std::string inst = write_instance(dir, p);

  const auto r =
      run_cli("oracle --instance \"" + inst + "\" --out \"" + (dir / "out").string() + "\"", dir);
  CHECK(r.exit_code == 0);
  const json out = read_json(dir / "out" / "solution.json");
  CHECK(out.at("norm_s").get<double>() == doctest::Approx(sol.norm_s).epsilon(1e-12));
  CHECK(out.at("f_s").get<double>() == doctest::Approx(sol.f_s).epsilon(1e-12));
  CHECK(out.at("margin").get<double>() == doctest::Approx(sol.margin).epsilon(1e-9));
  check_manifest(read_json(dir / "out" / "manifest.json"), "oracle", 1234567ull);
}

TEST_CASE("bounds subcommand writes a report and validates its accuracy flags") {
  const fs::path dir = fresh_dir("bounds");
  const CubicProblem p = cubegrad::gen_trajectory_instance(6, 0.2, 1.0, 0.2, 0.5, 0.5);
  const std::string inst = write_instance(dir, p);

  const auto ok = run_cli("bounds --instance \"" + inst + "\" --eps-prime 0.1 --sigma-bar 1.0" +
                              " --out \"" + (dir / "out").string() + "\"",
                          dir);
  CHECK(ok.exit_code == 0);
  const json rep = read_json(dir / "out" / "bounds.json");
  CHECK(rep.at("T_eps").get<double>() > 0.0);
  CHECK(rep.at("eps").get<double>() > 0.0);
  CHECK(rep.contains("perturbed"));
  CHECK(rep.at("perturbed").at("T_eps").get<double>() > 0.0);

  const auto both = run_cli("bounds --instance \"" + inst + "\" --eps 0.1 --eps-prime 0.1" +
                                " --out \"" + (dir / "out2").string() + "\"",
                            dir);
  CHECK(both.exit_code == 2);
  CHECK(both.output.find("exactly one of") != std::string::npos);
}

TEST_CASE("missing instance file exits 2 and names the path") {
  const fs::path dir = fresh_dir("missing");
  const auto r = run_cli(
      "solve --instance /nonexistent/missing_xyz.json --out \"" + (dir / "out").string() + "\"",
      dir);
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("missing_xyz.json") != std::string::npos);
}

TEST_CASE("exit taxonomy: parse errors are 2, solver failures are 1") {
  const fs::path dir = fresh_dir("taxonomy");
  CHECK(run_cli("--no-such-flag", dir).exit_code == 2);
  CHECK(run_cli("", dir).exit_code == 2);
  CHECK(run_cli("solve", dir).exit_code == 2);  // --instance is required

  // A wildly unstable explicit step size makes the iteration blow up.
  const CubicProblem p = cubegrad::gen_trajectory_instance(6, 0.2, 1.0, 0.2, 0.5, 0.5);
  const std::string inst = write_instance(dir, p);
  const auto diverge = run_cli("solve --instance \"" + inst + "\" --eta 1e9 --out \"" +
                                   (dir / "out").string() + "\"",
                               dir);
  CHECK(diverge.exit_code == 1);
  CHECK(diverge.output.find("non-finite") != std::string::npos);
}

TEST_CASE("linesearch builtin comparison matches the frozen summary") {
  const fs::path dir = fresh_dir("linesearch");
  const auto r = run_cli("linesearch --out \"" + (dir / "out").string() + "\"", dir);
  CHECK(r.exit_code == 0);

  const json summary = read_json(dir / "out" / "summary.json");
  CHECK(summary.at("guarded").at("final_f").get<double>() ==
        doctest::Approx(-4.510129282364435).epsilon(1e-9));
  CHECK(summary.at("unconstrained").at("final_f").get<double>() ==
        doctest::Approx(-4.1176008867063576).epsilon(1e-9));
  CHECK(summary.contains("nonnegative"));

  // fixed.eta is the instance's default step size.
  cubegrad::kernels::RowMat A = cubegrad::kernels::RowMat::Zero(3, 3);
  A(0, 0) = -1.0;
  A(1, 1) = -0.8;
  A(2, 2) = -0.5;
  Eigen::VectorXd b(3);
  b << 0.04, 0.15, 0.3;
  const CubicProblem builtin(cubegrad::LinearOperator::Dense(std::move(A)), std::move(b), 0.2,
                             1.0);
  CHECK(summary.at("fixed").at("eta").get<double>() == cubegrad::default_step_size(builtin));
  CHECK(summary.at("fixed").at("final_f").get<double>() >=
        summary.at("guarded").at("final_f").get<double>() - 1e-12);

  std::ifstream csv(dir / "out" / "linesearch.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "domain,iter,f,norm_x,grad_norm,step,eta_t,lambda_min_hess");
  check_manifest(read_json(dir / "out" / "manifest.json"), "linesearch", 1234567ull);
}

TEST_CASE("majorize subcommand verifies the bowl fixture and echoes its seed") {
  const fs::path dir = fresh_dir("majorize");
  const auto r = run_cli("majorize --fixture quad_bowl --eps 1e-3 --seed 42 --out \"" +
                             (dir / "out").string() + "\"",
                         dir);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("seed=42") != std::string::npos);

  const json out = read_json(dir / "out" / "sp_result.json");
  CHECK(out.at("certificate").at("verified").get<bool>());
  CHECK(out.at("certificate").at("grad_ok").get<bool>());
  CHECK(out.at("g_final").get<double>() <= 1e-6);
  CHECK(out.at("y_out").size() == 4);

  std::ifstream csv(dir / "out" / "outer.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "k,g_before,g_after,accepted,evals_so_far");
  check_manifest(read_json(dir / "out" / "manifest.json"), "majorize", 42ull);

  CHECK(run_cli("majorize --fixture no_such_fixture --out \"" + (dir / "out2").string() + "\"",
                dir)
            .exit_code == 2);
}

TEST_CASE("ensemble subcommand merges result metadata into the manifest") {
  const fs::path dir = fresh_dir("ensemble");
  const auto r = run_cli(
      "ensemble --d 12 --n 3 --seed 99 --workers 2 --out \"" + (dir / "out").string() + "\"", dir);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("seed=99") != std::string::npos);
  CHECK(r.output.find("instances=3") != std::string::npos);

  const json m = read_json(dir / "out" / "manifest.json");
  check_manifest(m, "ensemble", 99ull);
  CHECK(m.at("n_records") == 3);
  CHECK(m.at("fitted_constant").get<double>() >= 0.0);
  CHECK(m.contains("content_hash"));
  CHECK(m.contains("outputs_hash"));
  CHECK(m.at("config").at("workers") == 2);
  for (const char* f : {"ensemble.csv", "cdf.csv", "curves.csv"})
    CHECK(fs::exists(dir / "out" / f));
}

TEST_CASE("ensemble spec file fills gaps and explicit flags win") {
  const fs::path dir = fresh_dir("ensemble_spec");
  {
    std::ofstream spec(dir / "spec.json");
    spec << R"({"d": 10, "n_instances": 2, "eps_grid": [0.01, 0.5]})" << "\n";
  }
  const auto r = run_cli("ensemble --spec \"" + (dir / "spec.json").string() +
                             "\" --n 4 --seed 5 --out \"" + (dir / "out").string() + "\"",
                         dir);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("instances=4") != std::string::npos);  // flag beat the file
  const json m = read_json(dir / "out" / "manifest.json");
  CHECK(m.at("config").at("d") == 10);  // file value survived
  CHECK(m.at("n_records") == 4);

  {
    std::ofstream spec(dir / "bad.json");
    spec << "{not json";
  }
  const auto bad = run_cli("ensemble --spec \"" + (dir / "bad.json").string() + "\" --out \"" +
                               (dir / "out2").string() + "\"",
                           dir);
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("invalid JSON") != std::string::npos);
}

TEST_CASE("trajectory subcommand runs the generated instance end to end") {
  const fs::path dir = fresh_dir("trajectory");
  const auto r = run_cli("trajectory --d 50 --b-norm 0.3 --max-iters 20000 --out \"" +
                             (dir / "out").string() + "\"",
                         dir);
  CHECK(r.exit_code == 0);
  const json summary = read_json(dir / "out" / "summary.json");
  CHECK(summary.at("final_f").get<double>() < 0.0);
  CHECK(fs::exists(dir / "out" / "trace.csv"));
  CHECK(fs::exists(dir / "out" / "instance.json"));
  check_manifest(read_json(dir / "out" / "manifest.json"), "trajectory", 1234567ull);
}
