#pragma once

#include <windlog/lang.hpp>

#include <string>

namespace windlog::testing {

// One fact per line in stream files; tests write them space separated.
inline AtomSet atoms(std::string text) {
    for (std::size_t i = 0; (i = text.find(". ", i)) != std::string::npos;) { text[i + 1] = '\n'; }
    auto facts = lang::parse_facts(text);
    return {facts.begin(), facts.end()};
}

inline StreamingLiteral literal(std::string const &text) {
    auto p = lang::desugar(lang::parse_program("x :- " + text + "."));
    return std::get<StreamingLiteral>(p.rules.at(0).body.at(0));
}

inline constexpr auto p4_text = "a(X) :- b(X) always in [2].\n"
                                "b(Y) :- a(X) in [1], Y=X+1, c(Y).\n"
                                "d(X) :- b(X) at least 2 in [4].\n"
                                "e(X,Y) :- a(X), b(Y).\n";

inline constexpr auto pvs_text =
    "workingPanel(P) :- energyDelivered(P,W) at least 1 in [4], energyThreshold(Et), W >= Et.\n"
    "reachable(cea,P2) :- link(cea,P2), workingPanel(P2).\n"
    "reachable(P1,P3) :- reachable(P1,P2), link(P2,P3), workingPanel(P3).\n"
    "unlinked :- workingPanel(P), not reachable(cea,P).\n"
    "regularFunctioning :- unlinked at most 2 in [3].\n"
    "alert :- not regularFunctioning.\n"
    "callMaintenance :- alert always in [5].\n";

} // namespace windlog::testing
