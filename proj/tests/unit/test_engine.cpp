#include <doctest.h>

#include "fixtures.hpp"
#include "random_program.hpp"

#include <windlog/engine.hpp>
#include <windlog/lang.hpp>
#include <windlog/oracle.hpp>

using namespace windlog;

namespace {

GroundAtom atom(char const *pred, std::vector<std::int64_t> args) {
    Tuple t;
    for (auto a : args) { t.emplace_back(a); }
    return {Symbol::intern(pred), t};
}

AtomSet run_tick(engine::Engine &e, std::vector<GroundAtom> input) { return e.on_tick(input).atoms; }

char const *const p2 = "c(X) :- b(X).\nd(X) :- c(X) in [1].\n";
char const *const p3 = "#temp c(X) :- b(X).\nd(X) :- c(X) in [1].\n";
char const *const p4 = testing::p4_text;

} // namespace

TEST_CASE("two-tick stream through the copy-then-window program") {
    engine::Engine e(lang::load_program(p2), {});
    CHECK(run_tick(e, {atom("b", {5})}) == AtomSet{atom("b", {5}), atom("c", {5}), atom("d", {5})});
    CHECK(run_tick(e, {atom("c", {7})}) == AtomSet{atom("c", {7}), atom("d", {7}), atom("d", {5})});
}

TEST_CASE("temp rule heads are not persisted") {
    engine::Engine e(lang::load_program(p3), {});
    CHECK(run_tick(e, {atom("b", {5})}) == AtomSet{atom("b", {5}), atom("c", {5}), atom("d", {5})});
    CHECK(e.last_persisted() == AtomSet{atom("b", {5}), atom("d", {5})});
    CHECK(run_tick(e, {atom("c", {7})}) == AtomSet{atom("c", {7}), atom("d", {7})});
}

TEST_CASE("empty program echoes the input") {
    engine::Engine e(Program{}, {});
    CHECK(e.plan().subprograms.empty());
    CHECK(e.window_operator_count() == 0);
    CHECK(run_tick(e, {atom("x", {1}), atom("y", {})}) == AtomSet{atom("x", {1}), atom("y", {})});
}

TEST_CASE("flat program has one subprogram and no window operators") {
    engine::Engine e(lang::load_program("q(X) :- p(X), not r(X).\n"), {});
    CHECK(e.plan().subprograms.size() == 1);
    CHECK(e.window_operator_count() == 0);
}

TEST_CASE("wiring of the recursive window program") {
    engine::Engine e(lang::load_program(p4), {});
    CHECK(e.plan().subprograms.size() == 2);
    CHECK(e.window_operator_count() == 3);
}

TEST_CASE("background facts join every tick") {
    engine::Engine e(lang::load_program("q(X) :- p(X), k(X).\n"), {atom("k", {1})});
    CHECK(run_tick(e, {atom("p", {1})}) == AtomSet{atom("k", {1}), atom("p", {1}), atom("q", {1})});
    CHECK(run_tick(e, {}) == AtomSet{atom("k", {1})});
}

TEST_CASE("skip_failed_ticks persists the input only") {
    auto program = lang::load_program("q(Y) :- p(X), Y = 10 / X.\n");
    engine::Options opts;
    opts.skip_failed_ticks = true;
    engine::Engine e(program, {}, opts);
    auto out = e.on_tick({atom("p", {0})});
    CHECK(out.failed);
    CHECK(out.atoms == AtomSet{atom("p", {0})});
    CHECK(e.on_tick({atom("p", {5})}).atoms == AtomSet{atom("p", {5}), atom("q", {2})});

    engine::Engine strict(program, {});
    CHECK_THROWS_AS(strict.on_tick({atom("p", {0})}), EvaluationError);
}

TEST_CASE("resource cap is fatal") {
    engine::Options opts;
    opts.max_ground_rules = 2;
    opts.skip_failed_ticks = true;
    engine::Engine e(lang::load_program("q(X) :- p(X).\n"), {}, opts);
    CHECK_THROWS_AS(e.on_tick({atom("p", {1}), atom("p", {2}), atom("p", {3})}), ResourceError);
}

TEST_CASE("random programs agree with the oracle") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        auto gen = testing::random_program(rng);
        auto stream = testing::random_stream(rng, 6);
        engine::Engine eng(gen.program, {});
        oracle::ModelBuilder reference(gen.program, analysis::check_stratifiable(gen.program));
        for (std::size_t n = 0; n < stream.size(); ++n) {
            auto got = eng.on_tick({stream[n].begin(), stream[n].end()}).atoms;
            auto want = reference.push(stream[n]);
            if (got != want) {
                INFO("program:\n" << gen.text);
                INFO("tick " << n << " input " << testing::show(stream[n]));
                INFO("engine " << testing::show(got));
                INFO("oracle " << testing::show(want));
                FAIL("divergence");
            }
        }
    }
}
