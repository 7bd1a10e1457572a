#include <doctest.h>

#include <windlog/analysis.hpp>
#include <windlog/lang.hpp>

#include "fixtures.hpp"

#include <algorithm>
#include <set>

using namespace windlog;

namespace {

struct Arc {
    std::string from;
    std::string to;
    bool windowed;
    friend auto operator<=>(Arc const &, Arc const &) = default;
};

std::set<Arc> arcs(analysis::Sdg const &g) {
    std::set<Arc> out;
    for (auto const &a : g.arcs) {
        out.insert(Arc{std::string(g.nodes[a.from].name.str()), std::string(g.nodes[a.to].name.str()), a.windowed});
    }
    return out;
}

std::vector<std::string> names(analysis::SplitPlan const &plan, std::vector<std::size_t> const &components) {
    std::vector<std::string> out;
    for (auto c : components) { out.push_back(analysis::component_name(plan.sdg, plan.scg, c)); }
    return out;
}

std::vector<std::string> macro_names(analysis::SplitPlan const &plan) {
    std::vector<std::string> out;
    for (auto const &m : plan.macro_nodes) {
        std::vector<std::string> preds;
        for (auto c : m) {
            for (auto n : plan.scg.components[c]) { preds.emplace_back(plan.sdg.nodes[n].name.str()); }
        }
        std::sort(preds.begin(), preds.end());
        std::string s;
        for (auto const &p : preds) { s += p; }
        out.push_back(s);
    }
    return out;
}

std::vector<std::string> stratification_cycle(std::string_view text) {
    try {
        analysis::check_stratifiable(lang::load_program(text));
    } catch (StratificationError const &e) {
        return e.cycle();
    }
    return {};
}

} // namespace

TEST_CASE("dependency graph of the recursive window program") {
    auto g = analysis::build_sdg(lang::load_program(testing::p4_text));
    CHECK(g.nodes.size() == 4);
    CHECK_FALSE(g.node(PredicateKey{Symbol::intern("c"), 1}).has_value());
    std::set<Arc> expected{{"b", "a", true}, {"a", "b", true}, {"b", "d", true}, {"a", "e", false}, {"b", "e", false}};
    CHECK(arcs(g) == expected);
}

TEST_CASE("small dependency graphs") {
    auto fact = analysis::build_sdg(lang::load_program("p."));
    CHECK(fact.nodes.size() == 1);
    CHECK(fact.arcs.empty());

    auto cycle = analysis::build_sdg(lang::load_program("a :- b.\nb :- a.\n"));
    CHECK(arcs(cycle) == std::set<Arc>{{"a", "b", false}, {"b", "a", false}});

    // A windowed literal dominates a plain one over the same arc.
    auto both = analysis::build_sdg(lang::load_program("a :- b, b in [1].\nb :- c.\n"));
    CHECK(arcs(both) == std::set<Arc>{{"b", "a", true}});
}

TEST_CASE("component graph") {
    auto g = analysis::build_sdg(lang::load_program(testing::p4_text));
    auto scg = analysis::build_scg(g);
    std::set<std::string> comps;
    for (std::size_t i = 0; i < scg.components.size(); ++i) { comps.insert(analysis::component_name(g, scg, i)); }
    CHECK(comps == std::set<std::string>{"{a,b}", "{d}", "{e}"});

    auto chain = lang::load_program("b :- a.\nc :- b.\na :- x.\n");
    auto cg = analysis::build_sdg(chain);
    CHECK(analysis::build_scg(cg).components.size() == 3);

    auto self = analysis::build_sdg(lang::load_program("p :- p in [1].\n"));
    auto ss = analysis::build_scg(self);
    REQUIRE(ss.components.size() == 1);
    CHECK(ss.internal_windowed[0]);
}

TEST_CASE("stratifiability") {
    CHECK(stratification_cycle("a :- not a.") == std::vector<std::string>{"a"});
    CHECK_FALSE(stratification_cycle("a :- b count 2 in [3].\nb :- a.\n").empty());
    CHECK_FALSE(stratification_cycle("a :- not b in [2].\nb :- a.\n").empty());
    CHECK_FALSE(stratification_cycle("a(T) :- #count{X: b(X)} = T.\nb(X) :- a(X).\n").empty());
    CHECK(stratification_cycle(testing::pvs_text).empty());
    CHECK(stratification_cycle(testing::p4_text).empty());

    try {
        analysis::check_stratifiable(lang::load_program("a :- not a."));
    } catch (StratificationError const &e) {
        CHECK(e.code() == ExitCode::Stratification);
    }
}

TEST_CASE("processing order and split of the recursive window program") {
    auto plan = analysis::plan(lang::load_program(testing::p4_text));
    CHECK(names(plan, plan.ordering) == std::vector<std::string>{"{a,b}", "{e}", "{d}"});
    CHECK(macro_names(plan) == std::vector<std::string>{"abe", "d"});
    REQUIRE(plan.subprograms.size() == 2);
    CHECK(plan.subprograms[0].rules == std::vector<std::size_t>{0, 1, 3});
    CHECK(plan.subprograms[0].streaming_recursive == std::vector<bool>{true, true, false});
    CHECK(plan.subprograms[1].rules == std::vector<std::size_t>{2});
    CHECK_FALSE(plan.subprograms[1].recursive());
}

TEST_CASE("every valid ordering partitions the rules") {
    auto p = lang::load_program(testing::p4_text);
    auto base = analysis::plan(p);
    auto orderings = analysis::enumerate_orderings(base.scg, 100);
    // {a,b} first; then {d} and {e} in either order.
    CHECK(orderings.size() == 2);
    for (auto const &o : orderings) {
        auto plan = analysis::build_split_plan(p, o);
        CHECK(plan.subprograms.size() <= 3);
        std::size_t rules = 0;
        for (auto const &sub : plan.subprograms) { rules += sub.rules.size(); }
        CHECK(rules == p.rules.size());
    }
}

TEST_CASE("orderings") {
    auto single = analysis::plan(lang::load_program("p :- q."));
    CHECK(single.ordering.size() == 1);

    auto chain = analysis::plan(lang::load_program("b :- a in [1].\nc :- b in [1].\na :- x.\n"));
    CHECK(names(chain, chain.ordering) == std::vector<std::string>{"{a}", "{b}", "{c}"});
    CHECK(analysis::enumerate_orderings(chain.scg, 10).size() == 1);
    CHECK(chain.macro_nodes.size() == 3);

    auto bad = chain.ordering;
    std::reverse(bad.begin(), bad.end());
    CHECK_THROWS_AS(analysis::build_split_plan(lang::load_program("b :- a in [1].\nc :- b in [1].\na :- x.\n"), bad),
                    std::invalid_argument);
}

TEST_CASE("windowless programs form one subprogram") {
    auto plan = analysis::plan(lang::load_program("a(X) :- b(X).\nc(X) :- a(X), not d(X).\nd(X) :- e(X).\n"));
    REQUIRE(plan.subprograms.size() == 1);
    CHECK_FALSE(plan.subprograms[0].recursive());
}

TEST_CASE("windowed cycle makes both rules streaming-recursive") {
    auto plan = analysis::plan(lang::load_program("p :- q in [2].\nq :- p.\n"));
    REQUIRE(plan.scg.components.size() == 1);
    REQUIRE(plan.subprograms.size() == 1);
    CHECK(plan.subprograms[0].streaming_recursive == std::vector<bool>{true, true});
}

TEST_CASE("no windowed path leads back to an earlier macro-node") {
    auto plan = analysis::plan(lang::load_program(testing::pvs_text));
    std::vector<std::size_t> macro_of(plan.scg.components.size());
    for (std::size_t m = 0; m < plan.macro_nodes.size(); ++m) {
        for (auto c : plan.macro_nodes[m]) { macro_of[c] = m; }
    }
    for (std::size_t i = 0; i < plan.scg.components.size(); ++i) {
        for (std::size_t j = 0; j < plan.scg.components.size(); ++j) {
            if (plan.scg.precedes[i][j]) { CHECK(macro_of[i] < macro_of[j]); }
        }
    }
}
