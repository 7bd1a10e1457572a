#include <benchmark/benchmark.h>

#include <windlog/engine.hpp>
#include <windlog/generators.hpp>
#include <windlog/lang.hpp>

using namespace windlog;

namespace {

void replay(benchmark::State &state, gen::Workload const &w, engine::Mode mode) {
    auto program = lang::load_program(w.program);
    auto background = lang::parse_facts(w.background);
    for (auto _ : state) {
        engine::Engine e(program, background, {.mode = mode});
        for (auto const &tick : w.ticks) { benchmark::DoNotOptimize(e.on_tick(tick)); }
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.ticks.size()));
}

engine::Mode mode_of(benchmark::State const &state) {
    return state.range(0) == 0 ? engine::Mode::Incremental : engine::Mode::Scratch;
}

void BM_HeavyJoin(benchmark::State &state) {
    auto w = gen::heavy_join(static_cast<std::uint32_t>(state.range(1)), 100, 30, 7);
    replay(state, w, mode_of(state));
}

void BM_Pvs(benchmark::State &state) {
    auto side = static_cast<std::size_t>(state.range(1));
    auto w = gen::pvs({.rows = side, .cols = side, .ticks = 60, .faults = {gen::parse_fault("col:1@10-40")}});
    replay(state, w, mode_of(state));
}

void BM_Caching(benchmark::State &state) {
    auto w = gen::caching(static_cast<std::size_t>(state.range(1)), 60, 7);
    replay(state, w, mode_of(state));
}

} // namespace

// First argument: 0 incremental, 1 scratch.
BENCHMARK(BM_HeavyJoin)->ArgsProduct({{0, 1}, {2, 20}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Pvs)->ArgsProduct({{0, 1}, {5, 8, 15}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Caching)->ArgsProduct({{0, 1}, {50, 500}})->Unit(benchmark::kMillisecond);
