#include "xva/mc_linear.hpp"
#include "xva/model.hpp"
#include "xva/simulate.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

using namespace xva;

namespace {

const Dynamics& dynamics(int d) {
    static const Dynamics dyn5 = Dynamics::gbm(5, 0.05, 0.2, 0.8);
    static const Dynamics dyn1 = Dynamics::gbm(1, 0.05, 0.2, 0.8);
    return d == 1 ? dyn1 : dyn5;
}

void bm_euler_serial(benchmark::State& state) {
    const TimeGrid grid(1.0, 100);
    const auto L = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(serial::simulate_euler(dynamics(5), grid, L, 1));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bm_euler_omp(benchmark::State& state) {
    const TimeGrid grid(1.0, 100);
    const auto L = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(simulate_euler(dynamics(5), grid, L, 1));
    state.SetItemsProcessed(state.iterations() * state.range(0));
    state.counters["threads"] = omp_get_max_threads();
}

void bm_mc_value(benchmark::State& state, bool parallel) {
    const Claim c = Claim::basket_put(5, 1.0, 0.03, 1.0, CloseoutFunction::recovery(0.4));
    const TimeGrid grid(1.0, 100);
    mc::McOptions opts;
    opts.parallel = parallel;
    const auto L = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(mc::estimate_riskfree_value(c, dynamics(5), grid, L, 2, opts));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bm_mc_serial(benchmark::State& state) { bm_mc_value(state, false); }
void bm_mc_omp(benchmark::State& state) { bm_mc_value(state, true); }

} // namespace

BENCHMARK(bm_euler_serial)->Arg(1 << 12)->Arg(1 << 15)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_euler_omp)->Arg(1 << 12)->Arg(1 << 15)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_mc_serial)->Arg(1 << 14)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_mc_omp)->Arg(1 << 14)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
