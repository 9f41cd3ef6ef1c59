#include <benchmark/benchmark.h>

#include "kdvlab/bourgain.hpp"
#include "kdvlab/kdv_flow.hpp"
#include "kdvlab/measures.hpp"
#include "kdvlab/transport.hpp"

namespace {

using namespace kdvlab;

void BM_EvolveTenthUnit(benchmark::State& state) {
  SolverConfig cfg;
  cfg.modes = static_cast<std::size_t>(state.range(0));
  cfg.dt = 1e-3;
  const TorusField init = TorusField::cosine(1, 2) + 0.5 * TorusField::cosine(2, 2);
  for (auto _ : state) benchmark::DoNotOptimize(evolve(init, 0.1, cfg));
}
BENCHMARK(BM_EvolveTenthUnit)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_SampleGibbs(benchmark::State& state) {
  GibbsSpec spec;
  spec.base.modes = 16;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_gibbs(spec, static_cast<std::size_t>(state.range(0)), 1));
  }
}
BENCHMARK(BM_SampleGibbs)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_ExactTransport(benchmark::State& state) {
  GaussianSpec a{16, 1, {}}, b{16, 2, {}};
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto ea = sample_gaussian(a, n, 1), eb = sample_gaussian(b, n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(wasserstein_p_exact(ea, eb, 0.25, 2.0));
}
BENCHMARK(BM_ExactTransport)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Sinkhorn(benchmark::State& state) {
  GaussianSpec a{16, 1, {}}, b{16, 2, {}};
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto ea = sample_gaussian(a, n, 1), eb = sample_gaussian(b, n, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        combined_metric(ea, eb, 0.25, 2.0, TransportBackend::entropic, 0.01));
  }
}
BENCHMARK(BM_Sinkhorn)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_L4Ratio(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        l4_inequality_probe(100, static_cast<std::size_t>(state.range(0)), 1, 1));
  }
}
BENCHMARK(BM_L4Ratio)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
