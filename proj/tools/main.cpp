#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cubegrad/exact_oracle.hpp"
#include "cubegrad/experiments.hpp"
#include "cubegrad/gd.hpp"
#include "cubegrad/json_io.hpp"
#include "cubegrad/line_search.hpp"
#include "cubegrad/majorization.hpp"
#include "cubegrad/problem.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr std::uint64_t kDefaultSeed = 1234567;

int default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::min(hw == 0 ? 1u : hw, 8u));
}

struct Common {
  std::string out = "out";
  std::uint64_t seed = kDefaultSeed;
  int workers = default_workers();
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
  sub->add_option("--seed", c.seed, "PRNG seed (fixed default for reproducibility)")
      ->capture_default_str();
  sub->add_option("--workers", c.workers, "Worker threads for experiment subcommands")
      ->capture_default_str();
}

json versions_json() {
  char eigen[32];
  std::snprintf(eigen, sizeof eigen, "%d.%d.%d", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION,
                EIGEN_MINOR_VERSION);
  char njson[32];
  std::snprintf(njson, sizeof njson, "%d.%d.%d", NLOHMANN_JSON_VERSION_MAJOR,
                NLOHMANN_JSON_VERSION_MINOR, NLOHMANN_JSON_VERSION_PATCH);
  return json{{"cubegrad", kVersion}, {"eigen", eigen}, {"nlohmann_json", njson},
              {"cli11", CLI11_VERSION}};
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("failed writing: " + path.string());
}

class ManifestTimer {
 public:
  ManifestTimer(std::string out_dir, std::string subcommand, json config, std::uint64_t seed)
      : out_dir_(std::move(out_dir)),
        subcommand_(std::move(subcommand)),
        config_(std::move(config)),
        seed_(seed),
        start_(std::chrono::steady_clock::now()) {}

  void finish() const {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const fs::path path = fs::path(out_dir_) / "manifest.json";
    // Some subcommands (ensemble) already wrote result metadata here; keep it.
    json j = json::object();
    if (fs::exists(path)) {
      std::ifstream in(path);
      try {
        in >> j;
      } catch (const json::exception&) {
        j = json::object();
      }
      if (!j.is_object()) j = json::object();
    }
    j["subcommand"] = subcommand_;
    j["config"] = config_;
    j["seed"] = seed_;
    j["versions"] = versions_json();
    j["wall_time_s"] = wall;
    write_json_file(path, j);
  }

 private:
  std::string out_dir_;
  std::string subcommand_;
  json config_;
  std::uint64_t seed_;
  std::chrono::steady_clock::time_point start_;
};

cubegrad::CubicProblem load_instance_checked(const std::string& path) {
  if (!fs::exists(path)) throw std::runtime_error("instance file does not exist: " + path);
  return cubegrad::load_problem(path);
}

cubegrad::CubicProblem builtin_linesearch_instance() {
  cubegrad::kernels::RowMat A = cubegrad::kernels::RowMat::Zero(3, 3);
  A(0, 0) = -1.0;
  A(1, 1) = -0.8;
  A(2, 2) = -0.5;
  Eigen::VectorXd b(3);
  b << 0.04, 0.15, 0.3;
  return cubegrad::CubicProblem(cubegrad::LinearOperator::Dense(std::move(A)), std::move(b), 0.2,
                                1.0);
}

struct SolveOpts {
  Common common;
  std::string instance;
  double eta = 0.0;
  bool eta_given = false;
  double x0_fraction = 1.0;
  std::int64_t max_iters = 100000;
  double grad_tol = -1.0;
  bool monitor = false;
};

int do_solve(const SolveOpts& o) {
  std::optional<cubegrad::CubicProblem> p;
  try {
    fs::create_directories(o.common.out);
    p.emplace(load_instance_checked(o.instance));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    json config{{"instance", o.instance}, {"eta", o.eta},
                {"x0_fraction", o.x0_fraction}, {"max_iters", o.max_iters},
                {"grad_tol", o.grad_tol}, {"monitor", o.monitor}};
    ManifestTimer timer(o.common.out, "solve", config, o.common.seed);

    cubegrad::GdConfig cfg;
    cfg.eta = o.eta;
    cfg.init_radius_fraction = o.x0_fraction;
    cfg.max_iters = o.max_iters;
    cfg.grad_tol = o.grad_tol;
    cfg.monitor_invariants = o.monitor;
    cfg.allow_eta_override = o.eta_given;  // an explicit --eta is an explicit override
    auto [x, trace] = cubegrad::gd_run(*p, cfg);

    cubegrad::write_trace_csv((fs::path(o.common.out) / "trace.csv").string(), trace);
    json summary = cubegrad::trace_summary_json(trace);
    summary["eta"] = cfg.eta > 0.0 ? cfg.eta : cubegrad::default_step_size(*p);
    write_json_file(fs::path(o.common.out) / "summary.json", summary);
    write_json_file(fs::path(o.common.out) / "instance.json", cubegrad::problem_to_json(*p));
    timer.finish();
    std::cout << "solve: final_f=" << trace.final_f << " iters=" << trace.iters
              << " converged=" << (trace.converged ? "true" : "false") << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

struct OracleOpts {
  Common common;
  std::string instance;
};

int do_oracle(const OracleOpts& o) {
  std::optional<cubegrad::CubicProblem> p;
  try {
    fs::create_directories(o.common.out);
    p.emplace(load_instance_checked(o.instance));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    ManifestTimer timer(o.common.out, "oracle", json{{"instance", o.instance}}, o.common.seed);
    const cubegrad::ExactSolution sol = cubegrad::solve_exact(*p);
    write_json_file(fs::path(o.common.out) / "solution.json", cubegrad::solution_to_json(sol));
    timer.finish();
    std::cout << "oracle: norm_s=" << sol.norm_s << " f_s=" << sol.f_s
              << " margin=" << sol.margin << " hard_case=" << (sol.hard_case ? "true" : "false")
              << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

struct BoundsOpts {
  Common common;
  std::string instance;
  double eps = 0.0;
  double eps_prime = 0.0;
  double eta = 0.0;
  double sigma_bar = 0.0;
  double delta = 0.1;
};

int do_bounds(const BoundsOpts& o) {
  std::optional<cubegrad::CubicProblem> p;
  try {
    fs::create_directories(o.common.out);
    if ((o.eps > 0.0) == (o.eps_prime > 0.0))
      throw std::runtime_error("exactly one of --eps or --eps-prime is required");
    p.emplace(load_instance_checked(o.instance));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    json config{{"instance", o.instance}, {"eps", o.eps}, {"eps_prime", o.eps_prime},
                {"eta", o.eta}, {"sigma_bar", o.sigma_bar}, {"delta", o.delta}};
    ManifestTimer timer(o.common.out, "bounds", config, o.common.seed);

    const cubegrad::SpectralInfo info = cubegrad::spectral_decompose(*p);
    const cubegrad::ExactSolution sol = cubegrad::solve_exact(*p);
    const double eps =
        o.eps > 0.0 ? o.eps : p->rho * sol.norm_s * sol.norm_s * sol.norm_s * o.eps_prime / 12.0;
    const double eta = o.eta > 0.0 ? o.eta : cubegrad::default_step_size(*p);
    const double b1 = info.V.col(0).dot(p->b);
    const cubegrad::BoundReport report = cubegrad::bound_T_eps(*p, sol, info, eta, eps, b1);

    json out = cubegrad::bound_report_to_json(report);
    out["eps"] = eps;
    out["eta"] = eta;
    out["b1"] = b1;
    out["norm_s"] = sol.norm_s;
    if (o.sigma_bar > 0.0) {
      const cubegrad::BoundReport pr = cubegrad::bound_T_eps_perturbed(
          sol.norm_s, info.gamma, p->beta, info.gap, p->rho, eta, eps, o.sigma_bar, p->dim(),
          o.delta);
      out["perturbed"] = cubegrad::bound_report_to_json(pr);
    }
    write_json_file(fs::path(o.common.out) / "bounds.json", out);
    timer.finish();
    std::cout << "bounds: T_eps=" << report.T_eps << " regime=" << to_string(report.regime)
              << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

struct EnsembleOpts {
  Common common;
  std::string spec_path;
  cubegrad::EnsembleSpec spec;
};

void ensemble_spec_from_json(const json& j, cubegrad::EnsembleSpec& spec) {
  if (!j.is_object()) throw std::runtime_error("\"\": ensemble spec must be a JSON object");
  auto num = [&](const char* key, double& dst) {
    if (j.contains(key)) {
      if (!j.at(key).is_number()) throw std::runtime_error(std::string("\"/") + key +
                                                           "\": expected a number");
      dst = j.at(key).get<double>();
    }
  };
  if (j.contains("d")) spec.d = j.at("d").get<Eigen::Index>();
  num("beta", spec.beta);
  num("rho", spec.rho);
  num("gamma", spec.gamma);
  num("gap", spec.gap);
  num("margin", spec.margin);
  if (j.contains("n_instances")) spec.n_instances = j.at("n_instances").get<int>();
  if (j.contains("eps_grid")) spec.eps_grid = j.at("eps_grid").get<std::vector<double>>();
  if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  num("x0_fraction", spec.x0_fraction);
  num("eta", spec.eta);
}

int do_ensemble(EnsembleOpts& o, const CLI::App* sub) {
  try {
    fs::create_directories(o.common.out);
    o.spec.seed = o.common.seed;
    if (!o.spec_path.empty()) {
      if (!fs::exists(o.spec_path))
        throw std::runtime_error("spec file does not exist: " + o.spec_path);
      std::ifstream in(o.spec_path);
      json j;
      try {
        in >> j;
      } catch (const std::exception& e) {
        throw std::runtime_error(o.spec_path + ": invalid JSON: " + std::string(e.what()));
      }
      cubegrad::EnsembleSpec from_file = o.spec;  // CLI flags already applied; file fills gaps
      ensemble_spec_from_json(j, from_file);
      // Explicit CLI flags win over file values.
      auto keep = [&](const char* flag, auto member) {
        if (sub->count(flag) > 0) from_file.*member = o.spec.*member;
      };
      keep("--d", &cubegrad::EnsembleSpec::d);
      keep("--beta", &cubegrad::EnsembleSpec::beta);
      keep("--rho", &cubegrad::EnsembleSpec::rho);
      keep("--gamma", &cubegrad::EnsembleSpec::gamma);
      keep("--gap", &cubegrad::EnsembleSpec::gap);
      keep("--margin", &cubegrad::EnsembleSpec::margin);
      keep("--n", &cubegrad::EnsembleSpec::n_instances);
      keep("--x0-fraction", &cubegrad::EnsembleSpec::x0_fraction);
      keep("--eta", &cubegrad::EnsembleSpec::eta);
      if (sub->count("--seed") > 0) from_file.seed = o.common.seed;
      o.spec = from_file;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    json config{{"spec_path", o.spec_path}, {"d", o.spec.d}, {"n_instances", o.spec.n_instances},
                {"eta", o.spec.eta}, {"workers", o.common.workers}};
    ManifestTimer timer(o.common.out, "ensemble", config, o.spec.seed);
    const cubegrad::EnsembleResult res = cubegrad::run_ensemble(o.spec, o.common.workers);
    cubegrad::write_ensemble_outputs(res, o.common.out);
    timer.finish();
    std::cout << "ensemble: seed=" << res.spec.seed << " instances=" << res.records.size()
              << " fitted_constant=" << res.fitted_constant << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

struct TrajectoryOpts {
  Common common;
  Eigen::Index d = 1000;
  double gamma = 0.2;
  double beta = 1.0;
  double rho = 0.2;
  double b_norm = 0.2;
  double b1_ratio = 0.01;
  double eta = 0.1;
  bool eta_given = false;
  double x0_fraction = 0.0;
  std::int64_t max_iters = 200000;
};

int do_trajectory(const TrajectoryOpts& o) {
  try {
    fs::create_directories(o.common.out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    json config{{"d", o.d},       {"gamma", o.gamma},           {"beta", o.beta},
                {"rho", o.rho},   {"b_norm", o.b_norm},         {"b1_ratio", o.b1_ratio},
                {"eta", o.eta},   {"x0_fraction", o.x0_fraction}, {"max_iters", o.max_iters}};
    ManifestTimer timer(o.common.out, "trajectory", config, o.common.seed);

    const cubegrad::CubicProblem p =
        cubegrad::gen_trajectory_instance(o.d, o.gamma, o.beta, o.rho, o.b_norm, o.b1_ratio);
    cubegrad::GdConfig cfg;
    cfg.eta = o.eta;
    cfg.init_radius_fraction = o.x0_fraction;
    cfg.max_iters = o.max_iters;
    cfg.allow_eta_override = o.eta_given;
    auto [x, trace] = cubegrad::gd_run(p, cfg);

    write_json_file(fs::path(o.common.out) / "instance.json", cubegrad::problem_to_json(p));
    cubegrad::write_trace_csv((fs::path(o.common.out) / "trace.csv").string(), trace);
    json summary = cubegrad::trace_summary_json(trace);
    summary["eta"] = cfg.eta > 0.0 ? cfg.eta : cubegrad::default_step_size(p);
    write_json_file(fs::path(o.common.out) / "summary.json", summary);
    timer.finish();
    std::cout << "trajectory: final_f=" << trace.final_f << " iters=" << trace.iters
              << " converged=" << (trace.converged ? "true" : "false") << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

struct LineSearchOpts {
  Common common;
  std::string instance;
  std::int64_t max_iters = 300;
  double x0_fraction = 0.0;
};

int do_linesearch(const LineSearchOpts& o) {
  std::optional<cubegrad::CubicProblem> p;
  try {
    fs::create_directories(o.common.out);
    if (o.instance.empty())
      p.emplace(builtin_linesearch_instance());
    else
      p.emplace(load_instance_checked(o.instance));
    if (p->A.kind() == cubegrad::OperatorKind::callback)
      throw std::runtime_error("linesearch requires a dense or diagonal instance");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    json config{{"instance", o.instance.empty() ? "<builtin>" : o.instance},
                {"max_iters", o.max_iters}, {"x0_fraction", o.x0_fraction}};
    ManifestTimer timer(o.common.out, "linesearch", config, o.common.seed);

    const std::vector<cubegrad::StepDomain> domains{cubegrad::StepDomain::unconstrained,
                                                    cubegrad::StepDomain::nonnegative,
                                                    cubegrad::StepDomain::guarded};
    const cubegrad::LineSearchComparison cmp =
        cubegrad::run_linesearch_comparison(*p, domains, o.max_iters, o.x0_fraction);
    cubegrad::write_linesearch_csv((fs::path(o.common.out) / "linesearch.csv").string(), cmp);
    write_json_file(fs::path(o.common.out) / "instance.json", cubegrad::problem_to_json(*p));

    json summary;
    for (std::size_t k = 0; k < cmp.runs.size(); ++k)
      summary[to_string(cmp.domains[k])] = {{"final_f", cmp.runs[k].final_f},
                                            {"iters", cmp.runs[k].iters},
                                            {"final_grad_norm", cmp.runs[k].final_grad_norm}};
    summary["fixed"] = {{"final_f", cmp.fixed_step.final_f},
                        {"iters", cmp.fixed_step.iters},
                        {"eta", cmp.fixed_eta}};
    write_json_file(fs::path(o.common.out) / "summary.json", summary);
    timer.finish();
    for (std::size_t k = 0; k < cmp.runs.size(); ++k)
      std::cout << "linesearch[" << to_string(cmp.domains[k])
                << "]: final_f=" << cmp.runs[k].final_f << " iters=" << cmp.runs[k].iters << "\n";
    std::cout << "linesearch[fixed]: final_f=" << cmp.fixed_step.final_f
              << " eta=" << cmp.fixed_eta << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

struct MajorizeOpts {
  Common common;
  std::string fixture = "quad_bowl";
  double eps = 1e-3;
  double delta = 0.1;
  double y0_scale = 1.0;
};

int do_majorize(const MajorizeOpts& o) {
  std::optional<cubegrad::SmoothFunction> g;
  try {
    fs::create_directories(o.common.out);
    g.emplace(cubegrad::make_fixture(o.fixture));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    json config{{"fixture", o.fixture}, {"eps", o.eps}, {"delta", o.delta},
                {"y0_scale", o.y0_scale}};
    ManifestTimer timer(o.common.out, "majorize", config, o.common.seed);

    cubegrad::SpConfig cfg;
    cfg.epsilon = o.eps;
    cfg.delta = o.delta;
    cfg.seed = o.common.seed;
    const Eigen::VectorXd y0 = o.y0_scale * Eigen::VectorXd::Ones(g->dim);
    const cubegrad::SpResult res = cubegrad::sp_run(*g, y0, cfg);

    json out{{"y_out", std::vector<double>(res.y_out.data(), res.y_out.data() + res.y_out.size())},
             {"outer_iters", res.outer_iters},
             {"total_gradient_evals", res.total_gradient_evals},
             {"g_final", g->value(res.y_out)},
             {"certificate",
              {{"grad_norm", res.certificate.grad_norm},
               {"lambda_min_bound", res.certificate.lambda_min_bound},
               {"final_model_grad_norm", res.certificate.final_model_grad_norm},
               {"final_step_correction", res.certificate.final_step_correction},
               {"grad_ok", res.certificate.grad_ok},
               {"lambda_ok", res.certificate.lambda_ok},
               {"verified", res.certificate.verified}}}};
    write_json_file(fs::path(o.common.out) / "sp_result.json", out);

    std::string outer = "k,g_before,g_after,accepted,evals_so_far\n";
    for (const auto& r : res.outer_trace) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%d,%lld\n",
                    static_cast<long long>(r.k), r.g_before, r.g_after, r.accepted ? 1 : 0,
                    static_cast<long long>(r.evals_so_far));
      outer += buf;
    }
    std::ofstream oc(fs::path(o.common.out) / "outer.csv");
    if (!oc) throw std::runtime_error("cannot open outer.csv for writing");
    oc << outer;
    timer.finish();
    std::cout << "majorize: seed=" << cfg.seed << " outer_iters=" << res.outer_iters
              << " evals=" << res.total_gradient_evals
              << " grad_norm=" << res.certificate.grad_norm
              << " lambda_min=" << res.certificate.lambda_min_bound
              << " verified=" << (res.certificate.verified ? "true" : "false") << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "cubegrad: gradient-descent solvers, exact oracle, iteration-bound calculators, and "
      "experiment harness for the cubic-regularized quadratic min_x 1/2 x'Ax + b'x + "
      "(rho/3)||x||^3"};
  app.footer("Exit codes: 0 success, 1 solver error, 2 configuration error.");
  app.require_subcommand(1);

  SolveOpts so;
  CLI::App* solve = app.add_subcommand("solve", "Run fixed-step gradient descent on an instance");
  add_common(solve, so.common);
  solve->add_option("--instance", so.instance, "Problem JSON file")->required();
  solve->add_option("--eta", so.eta, "Step size override (default: 1/(4(beta+rho R)))");
  solve->add_option("--x0-fraction", so.x0_fraction, "x0 = -fraction R_c b/||b||")
      ->capture_default_str();
  solve->add_option("--max-iters", so.max_iters, "Iteration cap")->capture_default_str();
  solve->add_option("--grad-tol", so.grad_tol, "Stop when ||grad|| <= this (default 1e-10(1+||b||))");
  solve->add_flag("--monitor", so.monitor, "Record invariant violations in the summary");

  OracleOpts oo;
  CLI::App* oracle = app.add_subcommand("oracle", "Exact minimizer via the secular equation");
  add_common(oracle, oo.common);
  oracle->add_option("--instance", oo.instance, "Problem JSON file")->required();

  BoundsOpts bo;
  CLI::App* bounds = app.add_subcommand("bounds", "Theoretical iteration-bound report");
  add_common(bounds, bo.common);
  bounds->add_option("--instance", bo.instance, "Problem JSON file")->required();
  bounds->add_option("--eps", bo.eps, "Absolute accuracy target");
  bounds->add_option("--eps-prime", bo.eps_prime, "Relative accuracy (eps = rho||s||^3 eps'/12)");
  bounds->add_option("--eta", bo.eta, "Step size (default: 1/(4(beta+rho R)))");
  bounds->add_option("--sigma-bar", bo.sigma_bar, "Also report the perturbed bound at this sigma-bar");
  bounds->add_option("--delta", bo.delta, "Confidence parameter for the perturbed bound")
      ->capture_default_str();

  EnsembleOpts eo;
  CLI::App* ensemble = app.add_subcommand("ensemble", "Random-ensemble convergence experiment");
  add_common(ensemble, eo.common);
  ensemble->add_option("--spec", eo.spec_path, "EnsembleSpec JSON file (flags override fields)");
  ensemble->add_option("--d", eo.spec.d, "Dimension")->capture_default_str();
  ensemble->add_option("--beta", eo.spec.beta, "Spectrum upper end")->capture_default_str();
  ensemble->add_option("--rho", eo.spec.rho, "Cubic coefficient")->capture_default_str();
  ensemble->add_option("--gamma", eo.spec.gamma, "-lambda_min target")->capture_default_str();
  ensemble->add_option("--gap", eo.spec.gap, "Eigengap target")->capture_default_str();
  ensemble->add_option("--margin", eo.spec.margin, "rho||s||-gamma target")->capture_default_str();
  ensemble->add_option("--n", eo.spec.n_instances, "Number of instances")->capture_default_str();
  ensemble->add_option("--x0-fraction", eo.spec.x0_fraction, "Init fraction of R_c")
      ->capture_default_str();
  ensemble->add_option("--eta", eo.spec.eta, "Step size (0: per-instance default)")
      ->capture_default_str();

  TrajectoryOpts to;
  CLI::App* trajectory =
      app.add_subcommand("trajectory", "Equally-spaced-spectrum stall/convergence instance");
  add_common(trajectory, to.common);
  trajectory->add_option("--d", to.d, "Dimension")->capture_default_str();
  trajectory->add_option("--gamma", to.gamma, "-lambda_min")->capture_default_str();
  trajectory->add_option("--beta", to.beta, "Spectrum upper end")->capture_default_str();
  trajectory->add_option("--rho", to.rho, "Cubic coefficient")->capture_default_str();
  trajectory->add_option("--b-norm", to.b_norm, "||b||")->capture_default_str();
  trajectory->add_option("--b1-ratio", to.b1_ratio, "b1 as a fraction of the other entries")
      ->capture_default_str();
  trajectory->add_option("--eta", to.eta, "Step size")->capture_default_str();
  trajectory->add_option("--x0-fraction", to.x0_fraction, "Init fraction of R_c")
      ->capture_default_str();
  trajectory->add_option("--max-iters", to.max_iters, "Iteration cap")->capture_default_str();

  LineSearchOpts lo;
  CLI::App* linesearch =
      app.add_subcommand("linesearch", "Exact line-search variants vs fixed step");
  add_common(linesearch, lo.common);
  linesearch->add_option("--instance", lo.instance,
                         "Problem JSON (default: built-in 3-d comparison instance)");
  linesearch->add_option("--max-iters", lo.max_iters, "Iteration cap")->capture_default_str();
  linesearch->add_option("--x0-fraction", lo.x0_fraction, "Init fraction of R_c")
      ->capture_default_str();

  MajorizeOpts mo;
  CLI::App* majorize =
      app.add_subcommand("majorize", "Second-order stationary point search on a built-in fixture");
  add_common(majorize, mo.common);
  majorize->add_option("--fixture", mo.fixture, "quad_bowl | logcosh_saddle | logcosh_valley")
      ->capture_default_str();
  majorize->add_option("--eps", mo.eps, "Stationarity target")->capture_default_str();
  majorize->add_option("--delta", mo.delta, "Failure probability budget")->capture_default_str();
  majorize->add_option("--y0-scale", mo.y0_scale, "y0 = scale * ones")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  so.eta_given = solve->count("--eta") > 0;
  to.eta_given = trajectory->count("--eta") > 0;

  if (solve->parsed()) return do_solve(so);
  if (oracle->parsed()) return do_oracle(oo);
  if (bounds->parsed()) return do_bounds(bo);
  if (ensemble->parsed()) return do_ensemble(eo, ensemble);
  if (trajectory->parsed()) return do_trajectory(to);
  if (linesearch->parsed()) return do_linesearch(lo);
  if (majorize->parsed()) return do_majorize(mo);
  return 2;
}
