#include <benchmark/benchmark.h>

#include <windlog/lang.hpp>
#include <windlog/rewrite.hpp>
#include <windlog/windows.hpp>

#include <random>

using namespace windlog;

namespace {

struct Fixture {
    rewrite::AuxSignature sig;
    windows::History history;
    std::vector<Tuple> current;
};

// A window of `w` ticks over p/1, each tick holding `n` random values out of 4n.
Fixture fill(std::string const &literal, std::int64_t w, std::int64_t n) {
    auto flat = rewrite::flatten(lang::load_program("x(X) :- " + literal + "."));
    Fixture f{flat.tau.entries.at(0).signature, {}, {}};
    PredicateKey p{Symbol::intern("p"), 1};
    f.history.track(p, static_cast<std::uint32_t>(w));
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::int64_t> value(0, 4 * n - 1);
    auto tick = [&] {
        std::vector<GroundAtom> atoms;
        for (std::int64_t i = 0; i < n; ++i) { atoms.push_back({p.name, {Value(value(rng))}}); }
        return atoms;
    };
    for (std::int64_t t = 0; t < w; ++t) { f.history.advance(tick()); }
    for (auto const &a : tick()) { f.current.push_back(a.args); }
    return f;
}

void run(benchmark::State &state, std::string const &modality) {
    auto w = state.range(0);
    auto f = fill("p(X) " + modality + " in [" + std::to_string(w) + "]", w, state.range(1));
    for (auto _ : state) { benchmark::DoNotOptimize(windows::evaluate(f.sig, f.history, f.current)); }
    state.SetItemsProcessed(state.iterations() * (w + 1) * state.range(1));
}

void BM_AtLeast(benchmark::State &state) { run(state, "at least 2"); }
void BM_Always(benchmark::State &state) { run(state, "always"); }
void BM_CountVariable(benchmark::State &state) {
    auto w = state.range(0);
    auto f = fill("p(X) count N in [" + std::to_string(w) + "]", w, state.range(1));
    for (auto _ : state) { benchmark::DoNotOptimize(windows::evaluate(f.sig, f.history, f.current)); }
    state.SetItemsProcessed(state.iterations() * (w + 1) * state.range(1));
}

} // namespace

BENCHMARK(BM_AtLeast)->ArgsProduct({{2, 20, 50}, {50, 500}});
BENCHMARK(BM_Always)->ArgsProduct({{2, 20, 50}, {50, 500}});
BENCHMARK(BM_CountVariable)->ArgsProduct({{2, 20, 50}, {50, 500}});
