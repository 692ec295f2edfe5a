#include "loratdma/engine.hpp"
#include "loratdma/phy.hpp"
#include "loratdma/planner.hpp"

#include <benchmark/benchmark.h>

#include <array>

using namespace loratdma;

namespace {

void BM_TimeOnAir(benchmark::State& state)
{
    const phy::RadioParams radio{};
    int payload = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(phy::time_on_air(payload, radio));
        payload = (payload + 1) % 64;
    }
}
BENCHMARK(BM_TimeOnAir);

void BM_SimulateStar(benchmark::State& state)
{
    const std::array<double, 4> drifts{0.0, 20.0, -20.0, 10.0};
    auto sc = make_star(drifts);
    sc.frames = state.range(0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(run(sc));
    }
    state.SetItemsProcessed(state.iterations() * sc.frames);
}
BENCHMARK(BM_SimulateStar)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_SimulateLine(benchmark::State& state)
{
    const std::array<double, 4> drifts{0.0, 20.0, -20.0, 10.0};
    auto sc = make_line(drifts);
    sc.frames = 100;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run(sc));
    }
}
BENCHMARK(BM_SimulateLine)->Unit(benchmark::kMillisecond);

void BM_MakePlan(benchmark::State& state)
{
    planner::PlanRequest req;
    req.n = static_cast<int>(state.range(0));
    req.t_app_target = 233.8;
    req.max_n_slots = 360;
    for (auto _ : state) {
        benchmark::DoNotOptimize(planner::make_plan(req));
    }
}
BENCHMARK(BM_MakePlan)->Arg(4)->Arg(29);

}  // namespace

BENCHMARK_MAIN();
