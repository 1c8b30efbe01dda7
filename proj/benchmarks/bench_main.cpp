#include "gfsi/inference.hpp"
#include "gfsi/polyhedron.hpp"
#include "gfsi/sim_lab.hpp"

#include <benchmark/benchmark.h>

namespace {

gfsi::Generated null_chain(int n, std::uint64_t seed) {
    gfsi::Scenario s = gfsi::scenario_preset("middle_mutation_1d");
    s.n = n;
    return gfsi::generate(s, seed);
}

void BM_DualPathChain(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto g = std::make_shared<const gfsi::Graph>(gfsi::chain_graph(n));
    const auto data = null_chain(n, 7);
    for (auto _ : state) benchmark::DoNotOptimize(gfsi::run_dual_path(data.y, g, 10));
}
BENCHMARK(BM_DualPathChain)->Arg(200)->Arg(1000)->Arg(5000);

void BM_DualPathGrid(benchmark::State& state) {
    const auto g = std::make_shared<const gfsi::Graph>(gfsi::grid_graph(8, 8));
    gfsi::Scenario s = gfsi::scenario_preset("three_segment_2d");
    const auto data = gfsi::generate(s, 7);
    for (auto _ : state) benchmark::DoNotOptimize(gfsi::run_dual_path(data.y, g, 15));
}
BENCHMARK(BM_DualPathGrid);

void BM_PolyhedronApply(benchmark::State& state) {
    const auto g = std::make_shared<const gfsi::Graph>(gfsi::chain_graph(200));
    const auto data = null_chain(200, 3);
    const auto path = gfsi::run_dual_path(data.y, g, 2);
    const auto P = gfsi::build_polyhedron(path);
    for (auto _ : state) benchmark::DoNotOptimize(P.apply(data.y));
}
BENCHMARK(BM_PolyhedronApply);

void BM_ComputeS(benchmark::State& state) {
    const auto g = std::make_shared<const gfsi::Graph>(gfsi::chain_graph(200));
    const auto data = null_chain(200, 11);
    const auto path = gfsi::run_dual_path(data.y, g, 2);
    const auto& cc = path.steps().back().components;
    const auto c = gfsi::make_contrast(cc.block(0), cc.block(1), data.y);
    for (auto _ : state) {
        benchmark::DoNotOptimize(gfsi::compute_S(data.y, g, 2, c.c1, c.c2, c.nu));
    }
}
BENCHMARK(BM_ComputeS)->Unit(benchmark::kMillisecond);

void BM_TwoSidedSurvival(benchmark::State& state) {
    const gfsi::TruncatedGaussian tg{0.0, 1.0, gfsi::IntervalUnion({{-40.0, -12.0}, {-0.5, 0.25}, {11.0, 60.0}})};
    double t = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(gfsi::two_sided_survival(12.5 + t, tg));
        t = t < 1.0 ? t + 1e-3 : 0.0;
    }
}
BENCHMARK(BM_TwoSidedSurvival);

void BM_SolveMean(benchmark::State& state) {
    const gfsi::IntervalUnion S({{-1e300, -2.0}, {1.5, 3.0}, {8.0, 1e300}});
    for (auto _ : state) benchmark::DoNotOptimize(gfsi::solve_mean(2.5, 0.975, 1.0, S));
}
BENCHMARK(BM_SolveMean);

}  // namespace

BENCHMARK_MAIN();
