#include "itomc/completion.hpp"
#include "itomc/grid_fem.hpp"
#include "itomc/hpartition.hpp"
#include "itomc/phantoms.hpp"
#include "itomc/rte.hpp"
#include "itomc/sampling.hpp"

#include <benchmark/benchmark.h>

using namespace itomc;

static void BM_DtnAssembly(benchmark::State &state) {
    const auto g = GridSpec::from_level(static_cast<int>(state.range(0)));
    const auto a = shepp_logan(g.cells_per_dim(), g.cells_per_dim());
    for (auto _ : state) benchmark::DoNotOptimize(assemble_dtn(g, a).entries.data());
    state.SetLabel("n=" + std::to_string(g.boundary_count));
}
BENCHMARK(BM_DtnAssembly)->DenseRange(4, 7)->Unit(benchmark::kMillisecond);

static void BM_DtnJacobian(benchmark::State &state) {
    const auto g = GridSpec::from_level(static_cast<int>(state.range(0)));
    const auto a = ConductivityField::constant(16, 16, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(DtnJacobian(g, a).matrix().data());
}
BENCHMARK(BM_DtnJacobian)->DenseRange(4, 6)->Unit(benchmark::kMillisecond);

static void BM_Partition(benchmark::State &state) {
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(build_partition(n, Admissibility::strong_periodic, 8).blocks.size());
}
BENCHMARK(BM_Partition)->RangeMultiplier(4)->Range(64, 4096);

static void BM_CompleteBlockA(benchmark::State &state) {
    const int level = static_cast<int>(state.range(0));
    const auto g = GridSpec::from_level(level);
    const Block b = named_block(g.boundary_count, 'a');
    const Eigen::MatrixXd B = assemble_dtn_block(g, shepp_logan(g.cells_per_dim(), g.cells_per_dim()), b.row_start,
                                                 b.row_len, b.col_start, b.col_len);
    const auto obs = ObservedBlock::from_pattern(B, bernoulli_pattern(b.row_len, b.col_len, 0.1, 42));
    int iters = 0;
    for (auto _ : state) {
        const auto res = complete_block(obs, {});
        iters = res.iterations;
        benchmark::DoNotOptimize(res.X.data());
    }
    state.counters["iterations"] = iters;
}
BENCHMARK(BM_CompleteBlockA)->DenseRange(5, 7)->Unit(benchmark::kMillisecond);

static void BM_AlbedoAssembly(benchmark::State &state) {
    const auto p = rte_refinement(static_cast<int>(state.range(0)), 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(assemble_albedo(p).entries.data());
}
BENCHMARK(BM_AlbedoAssembly)->DenseRange(2, 4)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
