// Serial reference vs OpenMP for the three parallel hot spots.
#include <benchmark/benchmark.h>

#include <vector>

#include "kelab/family.hpp"
#include "kelab/kernels.hpp"
#include "kelab/numerics.hpp"
#include "kelab/radial_geometry.hpp"

using namespace kelab;

namespace {

// Level-200 sized problem: 401 exponents on the 8801-node Bergman grid.
struct GramInput {
    GridPtr grid = make_grid(80, 8801);
    std::vector<double> base;
    GramInput()
    {
        for (double t : grid->nodes) base.push_back(t - 402 * softplus(t));
    }
};

const GramInput& gram_input()
{
    static GramInput in;
    return in;
}

void BM_GramDiagonal(benchmark::State& st)
{
    const auto& in = gram_input();
    auto backend = static_cast<Backend>(st.range(0));
    for (auto _ : st) {
        auto gd = gram_diagonal_kernel(in.grid->nodes, in.base, in.grid->spacing, 0, 400, backend);
        benchmark::DoNotOptimize(gd.log_gram.data());
    }
    st.SetLabel(backend == Backend::serial ? "serial" : "openmp");
}

void BM_KernelProfile(benchmark::State& st)
{
    const auto& in = gram_input();
    auto backend = static_cast<Backend>(st.range(0));
    auto gd = gram_diagonal_kernel(in.grid->nodes, in.base, in.grid->spacing, 0, 400, Backend::openmp);
    for (auto _ : st) {
        auto k = kernel_profile(in.grid->nodes, gd.log_gram, 0, backend);
        benchmark::DoNotOptimize(k.data());
    }
    st.SetLabel(backend == Backend::serial ? "serial" : "openmp");
}

void BM_FiberSolves(benchmark::State& st)
{
    auto backend = static_cast<Backend>(st.range(0));
    FamilyRecipe r;
    r.kind = FamilyKind::perturbed;
    auto fam = build_family(r, make_base_grid(-3, 3, 41), make_grid(30, 1024));
    for (auto _ : st) {
        auto rel = solve_fiberwise(fam, 1e-10, backend);
        benchmark::DoNotOptimize(rel.columns.data());
    }
    st.SetLabel(backend == Backend::serial ? "serial" : "openmp");
}

}  // namespace

BENCHMARK(BM_GramDiagonal)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_KernelProfile)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_FiberSolves)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
