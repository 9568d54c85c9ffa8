#include <benchmark/benchmark.h>

#include <vector>

#include "cmv/ensemble.hpp"
#include "cmv/kernels.hpp"
#include "cmv/rng.hpp"

namespace {

cmv::Exec exec_of(const benchmark::State& state) {
  return state.range(1) ? cmv::Exec::parallel : cmv::Exec::serial;
}

void BM_PairwiseSum(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> x(n);
  cmv::NormalStream normals(cmv::derive_streams(1, 0, cmv::Role::initial));
  for (auto& v : x) v = normals.next();
  const cmv::Exec exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(cmv::kernels::pairwise_sum(x, exec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_EmStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto model = cmv::make_double_well(8.0, 1.5, 0.1, 0.5);
  auto ens = cmv::sample_initial(model, cmv::InitialLaw::gaussian({0.0}, 0.25), n, 7);
  cmv::NormalStream common(cmv::derive_streams(7, 0, cmv::Role::common));
  const cmv::Exec exec = exec_of(state);
  const double dt = 1e-3;
  std::vector<double> dw(1);
  for (auto _ : state) {
    dw[0] = 0.03 * common.next();
    cmv::em_step(ens, dt, dw, exec);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_DrawNormals(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<cmv::NormalStream> streams;
  for (std::size_t i = 0; i < n; ++i) {
    streams.emplace_back(cmv::derive_streams(3, 0, cmv::Role::particle, static_cast<std::uint32_t>(i)));
  }
  std::vector<double> out(n);
  const cmv::Exec exec = exec_of(state);
  for (auto _ : state) {
    cmv::kernels::draw_normals(streams, 1, out, exec);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

}  // namespace

// Second argument: 0 = serial reference, 1 = OpenMP.
BENCHMARK(BM_PairwiseSum)->ArgsProduct({{1 << 12, 1 << 16, 1 << 20}, {0, 1}});
BENCHMARK(BM_EmStep)->ArgsProduct({{1 << 10, 1 << 14, 1 << 17}, {0, 1}});
BENCHMARK(BM_DrawNormals)->ArgsProduct({{1 << 10, 1 << 14, 1 << 17}, {0, 1}});

BENCHMARK_MAIN();
