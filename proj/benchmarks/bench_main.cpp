#include <benchmark/benchmark.h>

#include <vector>

#include "poolsim/noise.hpp"
#include "poolsim/pathwise.hpp"
#include "poolsim/pricing.hpp"
#include "poolsim/special.hpp"

namespace {

using namespace poolsim;

void BM_NormInvCdf(benchmark::State& state) {
  double p = 0.001;
  for (auto _ : state) {
    benchmark::DoNotOptimize(norm_inv_cdf(p));
    p += 0.000997;
    if (p >= 1.0) p -= 0.998;
  }
}
BENCHMARK(BM_NormInvCdf);

void BM_NormInvCdfRational(benchmark::State& state) {
  double p = 0.001;
  for (auto _ : state) {
    benchmark::DoNotOptimize(norm_inv_cdf_rational(p));
    p += 0.000997;
    if (p >= 1.0) p -= 0.998;
  }
}
BENCHMARK(BM_NormInvCdfRational);

void BM_BvnCdf(benchmark::State& state) {
  const double rho = static_cast<double>(state.range(0)) / 100.0;
  double h = -2.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bvn_cdf(h, 0.3, rho));
    h += 0.01;
    if (h > 2.0) h = -2.0;
  }
}
BENCHMARK(BM_BvnCdf)->Arg(10)->Arg(50)->Arg(80)->Arg(95);

void BM_Philox(benchmark::State& state) {
  std::uint32_t c = 0;
  for (auto _ : state) benchmark::DoNotOptimize(philox4x32({c++, 0, 0, 1}, {7, 9}));
}
BENCHMARK(BM_Philox);

void BM_GaussianStream(benchmark::State& state) {
  GaussianStream g({42, StreamRole::firm_y, 0});
  for (auto _ : state) benchmark::DoNotOptimize(g.next());
}
BENCHMARK(BM_GaussianStream);

void BM_SimulateMarket(benchmark::State& state) {
  const ModelParams p = reference_params(4e-3);
  const GridSpec grid{1.0, state.range(0)};
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_market(p, grid, seed++));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateMarket)->Arg(10000);

void BM_FinitePoolLoss(benchmark::State& state) {
  const ModelParams p = reference_params(4e-3);
  const GridSpec grid{1.0, 10000};
  const auto mkt = simulate_market(p, grid, 1);
  const auto firms = static_cast<std::uint64_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(finite_pool_loss(p, mkt, -0.1, firms, seed++));
  state.SetItemsProcessed(state.iterations() * state.range(0) * grid.N);
}
BENCHMARK(BM_FinitePoolLoss)->Arg(10);

void BM_TrueLossInner(benchmark::State& state) {
  const ModelParams p = reference_params(1e-2);
  const GridSpec grid{1.0, 4000};
  const auto mkt = simulate_market(p, grid, 1);
  RunOptions opts;
  opts.threads = 1;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(true_loss(p, mkt, -0.1, 256, seed++, opts));
  state.SetItemsProcessed(state.iterations() * 256 * grid.N);
}
BENCHMARK(BM_TrueLossInner);

void BM_CallErgYZ(benchmark::State& state) {
  const ModelParams p = reference_params(4e-3);
  for (auto _ : state) benchmark::DoNotOptimize(call_ergYZ(p, {0.05, -0.1, 1.0}, Averaging::linear));
}
BENCHMARK(BM_CallErgYZ);

}  // namespace
BENCHMARK_MAIN();
