#include <benchmark/benchmark.h>

#include "consensus_vem/baselines/datasets.hpp"
#include "consensus_vem/baselines/kmeans.hpp"
#include "consensus_vem/distributed/simulator.hpp"
#include "consensus_vem/elbo.hpp"
#include "consensus_vem/inference.hpp"
#include "fixtures.hpp"

using namespace cvem;

namespace {

fixtures::Sampled instance(std::size_t n) { return fixtures::sampled(17, fixtures::make_shape(n, 3, 4, 3, 3)); }

void BM_Elbo(benchmark::State& state) {
    const auto d = instance(static_cast<std::size_t>(state.range(0)));
    const auto init = initialize(d.w, d.shape, 1);
    for (auto _ : state) benchmark::DoNotOptimize(elbo(d.w, init.params, init.state));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Elbo)->Arg(200)->Arg(2000);

void BM_EStep(benchmark::State& state) {
    const auto d = instance(static_cast<std::size_t>(state.range(0)));
    const auto init = initialize(d.w, d.shape, 1);
    for (auto _ : state) {
        auto vs = init.state;
        benchmark::DoNotOptimize(e_step(d.w, init.params, vs));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EStep)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Fit(benchmark::State& state) {
    const auto d = instance(static_cast<std::size_t>(state.range(0)));
    FitConfig cfg;
    cfg.outer_max_iter = 10;
    for (auto _ : state) benchmark::DoNotOptimize(fit(d.w, d.shape, cfg));
}
BENCHMARK(BM_Fit)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_FitThreads(benchmark::State& state) {
    const auto d = instance(2000);
    FitConfig cfg;
    cfg.outer_max_iter = 5;
    cfg.threads = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(fit(d.w, d.shape, cfg));
}
BENCHMARK(BM_FitThreads)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_DistributedRow(benchmark::State& state) {
    const auto d = instance(200);
    FitConfig cfg;
    cfg.outer_max_iter = 10;
    const auto spec = dist::row_partition(200, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(dist::run_distributed(d.w, d.shape, cfg, spec));
}
BENCHMARK(BM_DistributedRow)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_KMeans(benchmark::State& state) {
    const auto data = baselines::make_half_moons(static_cast<std::size_t>(state.range(0)), 0.15, 3);
    for (auto _ : state) benchmark::DoNotOptimize(baselines::kmeans(data.points, 8, 5));
}
BENCHMARK(BM_KMeans)->Arg(800)->Arg(8000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
