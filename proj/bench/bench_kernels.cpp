// Compares the OpenMP row-parallel kernels against the serial reference
// implementations, plus one end-to-end solver run so kernel-level wins can be
// sanity-checked against whole-iteration cost. Run with --benchmark_filter.

#include <benchmark/benchmark.h>

#include <Eigen/Core>
#include <cmath>
#include <cstdint>

#include "cubegrad/gd.hpp"
#include "cubegrad/kernels.hpp"
#include "cubegrad/linear_operator.hpp"
#include "cubegrad/problem.hpp"
#include "cubegrad/rng.hpp"

namespace {

using cubegrad::kernels::RowMat;

RowMat random_symmetric(Eigen::Index d, std::uint64_t seed) {
  cubegrad::rng::Stream st(seed, 0);
  RowMat G(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) G(i, j) = st.normal();
  return (G + G.transpose()) / (2.0 * std::sqrt(static_cast<double>(d)));
}

void BM_dense_matvec_parallel(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  const RowMat A = random_symmetric(d, 11);
  cubegrad::rng::Stream st(12, 0);
  const Eigen::VectorXd x = st.gaussian(d);
  Eigen::VectorXd y(d);
  for (auto _ : state) {
    cubegrad::kernels::dense_matvec(A, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * d * d);
}

void BM_dense_matvec_serial(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  const RowMat A = random_symmetric(d, 11);
  cubegrad::rng::Stream st(12, 0);
  const Eigen::VectorXd x = st.gaussian(d);
  Eigen::VectorXd y(d);
  for (auto _ : state) {
    cubegrad::kernels::dense_matvec_serial(A, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * d * d);
}

void BM_diag_matvec_parallel(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  cubegrad::rng::Stream st(13, 0);
  const Eigen::VectorXd diag = st.gaussian(d);
  const Eigen::VectorXd x = st.gaussian(d);
  Eigen::VectorXd y(d);
  for (auto _ : state) {
    cubegrad::kernels::diag_matvec(diag, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * d);
}

void BM_diag_matvec_serial(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  cubegrad::rng::Stream st(13, 0);
  const Eigen::VectorXd diag = st.gaussian(d);
  const Eigen::VectorXd x = st.gaussian(d);
  Eigen::VectorXd y(d);
  for (auto _ : state) {
    cubegrad::kernels::diag_matvec_serial(diag, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * d);
}

// Whole gradient-descent run on a dense instance, fixed iteration count so
// timings compare kernel dispatch cost rather than convergence luck.
void BM_gd_dense(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  cubegrad::rng::Stream st(14, 0);
  const RowMat A = random_symmetric(d, 15);
  Eigen::VectorXd b = st.gaussian(d);
  b *= 0.5 / b.norm();
  const double beta = 2.0;  // upper bound for the scaled Wigner draw
  cubegrad::CubicProblem p(cubegrad::LinearOperator::Dense(A), b, 1.0, beta);
  cubegrad::GdConfig cfg;
  cfg.max_iters = 200;
  cfg.grad_tol = 1e-300;
  cfg.record_trace = false;
  for (auto _ : state) {
    auto [x, trace] = cubegrad::gd_run(p, cfg);
    benchmark::DoNotOptimize(x.data());
  }
  state.SetItemsProcessed(state.iterations() * 200 * d * d);
}

BENCHMARK(BM_dense_matvec_parallel)->Arg(256)->Arg(1024)->Arg(2048);
BENCHMARK(BM_dense_matvec_serial)->Arg(256)->Arg(1024)->Arg(2048);
BENCHMARK(BM_diag_matvec_parallel)->Arg(1 << 14)->Arg(1 << 18);
BENCHMARK(BM_diag_matvec_serial)->Arg(1 << 14)->Arg(1 << 18);
BENCHMARK(BM_gd_dense)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
