// Microbenchmarks for the costs that dominate a penalty-grid fit: Gram
// assembly, the one-off spectral decomposition, the per-penalty refresh of
// the factored inverse (against the dense alternative it replaces), single
// fits, and warm against cold grids.

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include <cstdint>

#include "kere/kernel.hpp"
#include "kere/path.hpp"
#include "kere/random.hpp"
#include "kere/simulate.hpp"
#include "kere/solver.hpp"

namespace {

using namespace kere;

// one replication of the univariate benchmark design, deterministic per n
sim::SimData make_data(Eigen::Index n) {
  sim::Sim1Spec spec;
  spec.n = n;
  spec.seed = 42;
  return sim::sim1_generate(spec);
}

kernel::GramBundle make_bundle(const Eigen::MatrixXd& X) {
  const double sigma2 = kernel::median_pairwise_sq_dist(X);
  return kernel::gram_matrix(kernel::KernelSpec::rbf(sigma2), X);
}

void bm_gram_assembly(benchmark::State& state) {
  const auto data = make_data(state.range(0));
  for (auto _ : state) {
    auto bundle = make_bundle(data.X);
    benchmark::DoNotOptimize(bundle.kernel.data());
  }
}
BENCHMARK(bm_gram_assembly)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMicrosecond);

void bm_eigendecompose(benchmark::State& state) {
  const auto data = make_data(state.range(0));
  const auto base = make_bundle(data.X);
  for (auto _ : state) {
    auto bundle = base;  // decomposition is idempotent, so time a fresh copy
    kernel::eigendecompose(bundle);
    benchmark::DoNotOptimize(bundle.eigenvectors.data());
  }
}
BENCHMARK(bm_eigendecompose)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMicrosecond);

// per-penalty refresh through the factored route: O(n) once the
// decomposition exists
void bm_penalty_refresh_factored(benchmark::State& state) {
  const auto data = make_data(state.range(0));
  auto bundle = make_bundle(data.X);
  kernel::eigendecompose(bundle);
  const solver::KuInverseFactory factory(bundle, loss::ExpectileLevel(0.25));
  double lambda = 1.0;
  for (auto _ : state) {
    lambda = lambda >= 16.0 ? 1.0 : lambda * 1.1;  // vary to defeat caching
    benchmark::DoNotOptimize(factory.at(lambda).lambda());
  }
}
BENCHMARK(bm_penalty_refresh_factored)
    ->Arg(100)
    ->Arg(200)
    ->Arg(400)
    ->Unit(benchmark::kMicrosecond);

// the dense alternative: refactorize the full curvature matrix per penalty
void bm_penalty_refresh_dense(benchmark::State& state) {
  const auto data = make_data(state.range(0));
  auto bundle = make_bundle(data.X);
  kernel::eigendecompose(bundle);
  const auto n = bundle.size();
  const double hw = 0.75;  // max(omega, 1 - omega) at level 0.25

  Eigen::MatrixXd Z(n, n + 1);
  Z.col(0).setOnes();
  Z.rightCols(n) = bundle.kernel;
  const Eigen::MatrixXd ztz = Z.transpose() * Z;

  double lambda = 1.0;
  for (auto _ : state) {
    lambda = lambda >= 16.0 ? 1.0 : lambda * 1.1;
    Eigen::MatrixXd H = hw * ztz;
    H.bottomRightCorner(n, n) += lambda * bundle.kernel;
    const Eigen::LDLT<Eigen::MatrixXd> fac(H);
    benchmark::DoNotOptimize(fac.matrixL());
  }
}
BENCHMARK(bm_penalty_refresh_dense)
    ->Arg(100)
    ->Arg(200)
    ->Arg(400)
    ->Unit(benchmark::kMicrosecond);

void bm_fit(benchmark::State& state) {
  const auto data = make_data(state.range(0));
  auto bundle = make_bundle(data.X);
  kernel::eigendecompose(bundle);
  const loss::ExpectileLevel level(static_cast<double>(state.range(1)) / 100.0);
  const solver::KuInverseFactory factory(bundle, level);
  for (auto _ : state) {
    const auto result = solver::fit(factory, data.y, 0.5);
    benchmark::DoNotOptimize(result.diag.objective);
  }
}
BENCHMARK(bm_fit)
    ->Args({100, 50})
    ->Args({100, 10})
    ->Args({200, 50})
    ->Args({200, 10})
    ->Args({400, 50})
    ->Args({400, 10})
    ->Unit(benchmark::kMillisecond);

void bm_path_warm(benchmark::State& state) {
  const auto data = make_data(200);
  auto bundle = make_bundle(data.X);
  kernel::eigendecompose(bundle);
  const solver::KuInverseFactory factory(bundle, loss::ExpectileLevel(0.1));
  path::PathConfig config;
  config.num_lambdas = 20;
  for (auto _ : state) {
    const auto res = path::fit_path(factory, data.y, config);
    benchmark::DoNotOptimize(res.all_converged);
  }
}
BENCHMARK(bm_path_warm)->Unit(benchmark::kMillisecond);

void bm_path_cold(benchmark::State& state) {
  const auto data = make_data(200);
  auto bundle = make_bundle(data.X);
  kernel::eigendecompose(bundle);
  const solver::KuInverseFactory factory(bundle, loss::ExpectileLevel(0.1));
  path::PathConfig probe;
  probe.num_lambdas = 20;
  const auto grid = path::fit_path(factory, data.y, probe);  // reuse its lambdas
  for (auto _ : state) {
    double objective = 0.0;
    for (Eigen::Index j = 0; j < grid.lambdas.size(); ++j)
      objective += solver::fit(factory, data.y, grid.lambdas[j]).diag.objective;
    benchmark::DoNotOptimize(objective);
  }
}
BENCHMARK(bm_path_cold)->Unit(benchmark::kMillisecond);

}  // namespace
