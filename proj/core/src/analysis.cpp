#include <windlog/analysis.hpp>

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>

namespace windlog::analysis {

namespace {

struct Dependency {
    PredicateKey body;
    bool windowed;
    bool non_harmless;
};

std::vector<Dependency> dependencies(Rule const &rule) {
    std::vector<Dependency> out;
    for (auto const &lit : rule.body) {
        if (auto const *s = std::get_if<StreamingLiteral>(&lit)) {
            bool harmless = !s->negative && (s->modality == Modality::AtLeast || s->modality == Modality::Always);
            out.push_back({s->atom.key(), !s->degenerate(), !harmless});
        } else if (auto const *a = std::get_if<AggregateLiteral>(&lit)) {
            for (auto const &e : a->elements) {
                for (auto const &c : e.condition) {
                    if (auto const *p = std::get_if<PredicateAtom>(&c)) { out.push_back({p->key(), false, true}); }
                }
            }
        }
    }
    return out;
}

std::vector<std::size_t> strict_topological(Scg const &scg) {
    std::size_t n = scg.components.size();
    std::vector<std::size_t> indegree(n, 0);
    std::vector<std::vector<std::size_t>> succ(n);
    for (auto const &arc : scg.arcs) {
        succ[arc.from].push_back(arc.to);
        ++indegree[arc.to];
    }
    std::deque<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i) {
        if (indegree[i] == 0) { ready.push_back(i); }
    }
    std::vector<std::size_t> order;
    while (!ready.empty()) {
        auto c = ready.front();
        ready.pop_front();
        order.push_back(c);
        for (auto s : succ[c]) {
            if (--indegree[s] == 0) { ready.push_back(s); }
        }
    }
    return order;
}

} // namespace

std::optional<std::size_t> Sdg::node(PredicateKey const &key) const {
    auto it = std::find(nodes.begin(), nodes.end(), key);
    if (it == nodes.end()) { return std::nullopt; }
    return static_cast<std::size_t>(it - nodes.begin());
}

bool Subprogram::recursive() const {
    return std::find(streaming_recursive.begin(), streaming_recursive.end(), true) != streaming_recursive.end();
}

Sdg build_sdg(Program const &program) {
    Sdg sdg;
    for (auto const &rule : program.rules) {
        if (!sdg.node(rule.head.key())) { sdg.nodes.push_back(rule.head.key()); }
    }
    std::sort(sdg.nodes.begin(), sdg.nodes.end());
    std::map<std::pair<std::size_t, std::size_t>, SdgArc> arcs;
    for (auto const &rule : program.rules) {
        auto to = *sdg.node(rule.head.key());
        for (auto const &dep : dependencies(rule)) {
            auto from = sdg.node(dep.body);
            if (!from) { continue; }
            auto &arc = arcs[{*from, to}];
            arc.from = *from;
            arc.to = to;
            arc.windowed = arc.windowed || dep.windowed;
            arc.non_harmless = arc.non_harmless || dep.non_harmless;
        }
    }
    for (auto const &[key, arc] : arcs) { sdg.arcs.push_back(arc); }
    return sdg;
}

Scg build_scg(Sdg const &sdg) {
    std::size_t n = sdg.nodes.size();
    std::vector<std::vector<std::size_t>> succ(n);
    for (auto const &arc : sdg.arcs) { succ[arc.from].push_back(arc.to); }

    // Tarjan's algorithm.
    Scg scg;
    scg.component_of.assign(n, SIZE_MAX);
    std::vector<std::size_t> index(n, SIZE_MAX);
    std::vector<std::size_t> low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::size_t counter = 0;
    std::function<void(std::size_t)> visit = [&](std::size_t v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
        for (auto w : succ[v]) {
            if (index[w] == SIZE_MAX) {
                visit(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            std::vector<std::size_t> component;
            std::size_t w = 0;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                scg.component_of[w] = scg.components.size();
                component.push_back(w);
            } while (w != v);
            std::sort(component.begin(), component.end());
            scg.components.push_back(std::move(component));
        }
    };
    for (std::size_t v = 0; v < n; ++v) {
        if (index[v] == SIZE_MAX) { visit(v); }
    }

    std::size_t m = scg.components.size();
    scg.internal_windowed.assign(m, false);
    std::map<std::pair<std::size_t, std::size_t>, bool> lifted;
    for (auto const &arc : sdg.arcs) {
        auto a = scg.component_of[arc.from];
        auto b = scg.component_of[arc.to];
        if (a == b) {
            if (arc.windowed) { scg.internal_windowed[a] = true; }
            continue;
        }
        lifted[{a, b}] = lifted[{a, b}] || arc.windowed;
    }
    for (auto const &[key, windowed] : lifted) { scg.arcs.push_back({key.first, key.second, windowed}); }

    std::vector<std::vector<bool>> reach(m, std::vector<bool>(m, false));
    for (std::size_t i = 0; i < m; ++i) { reach[i][i] = true; }
    for (auto const &arc : scg.arcs) { reach[arc.from][arc.to] = true; }
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t i = 0; i < m; ++i) {
            if (!reach[i][k]) { continue; }
            for (std::size_t j = 0; j < m; ++j) {
                if (reach[k][j]) { reach[i][j] = true; }
            }
        }
    }
    scg.precedes.assign(m, std::vector<bool>(m, false));
    for (auto const &arc : scg.arcs) {
        if (!arc.windowed) { continue; }
        for (std::size_t i = 0; i < m; ++i) {
            if (!reach[i][arc.from]) { continue; }
            for (std::size_t j = 0; j < m; ++j) {
                if (reach[arc.to][j]) { scg.precedes[i][j] = true; }
            }
        }
    }
    return scg;
}

Stratification check_stratifiable(Program const &program) {
    auto sdg = build_sdg(program);
    auto scg = build_scg(sdg);
    for (auto const &arc : sdg.arcs) {
        if (!arc.non_harmless || scg.component_of[arc.from] != scg.component_of[arc.to]) { continue; }
        // Close the cycle with a shortest path to -> from inside the component.
        std::vector<std::size_t> parent(sdg.nodes.size(), SIZE_MAX);
        std::deque<std::size_t> queue{arc.to};
        parent[arc.to] = arc.to;
        while (!queue.empty() && parent[arc.from] == SIZE_MAX) {
            auto v = queue.front();
            queue.pop_front();
            for (auto const &next : sdg.arcs) {
                if (next.from == v && parent[next.to] == SIZE_MAX &&
                    scg.component_of[next.to] == scg.component_of[arc.from]) {
                    parent[next.to] = v;
                    queue.push_back(next.to);
                }
            }
        }
        std::vector<std::string> cycle;
        for (auto v = arc.from;; v = parent[v]) {
            cycle.push_back(std::string(sdg.nodes[v].name.str()));
            if (v == arc.to) { break; }
        }
        std::reverse(cycle.begin(), cycle.end());
        if (arc.from != arc.to) { cycle.push_back(std::string(sdg.nodes[arc.to].name.str())); }
        throw StratificationError(std::move(cycle));
    }
    Stratification strata;
    for (auto c : strict_topological(scg)) {
        std::vector<std::size_t> rules;
        for (std::size_t r = 0; r < program.rules.size(); ++r) {
            if (scg.component_of[*sdg.node(program.rules[r].head.key())] == c) { rules.push_back(r); }
        }
        strata.push_back(std::move(rules));
    }
    return strata;
}

std::string component_name(Sdg const &sdg, Scg const &scg, std::size_t component) {
    std::string out = "{";
    for (std::size_t i = 0; i < scg.components[component].size(); ++i) {
        if (i > 0) { out += ','; }
        out += sdg.nodes[scg.components[component][i]].name.str();
    }
    return out + "}";
}

std::vector<std::size_t> order_components(Sdg const &sdg, Scg const &scg, std::optional<std::uint64_t> seed) {
    std::size_t m = scg.components.size();
    std::vector<std::size_t> indegree(m, 0);
    for (auto const &arc : scg.arcs) { ++indegree[arc.to]; }
    std::vector<bool> placed(m, false);
    std::vector<std::size_t> order;
    std::vector<std::size_t> run;
    std::mt19937_64 rng(seed.value_or(0));
    auto smallest = [&](std::size_t c) { return sdg.nodes[scg.components[c].front()]; };
    while (order.size() < m) {
        std::vector<std::size_t> ready;
        for (std::size_t c = 0; c < m; ++c) {
            if (!placed[c] && indegree[c] == 0) { ready.push_back(c); }
        }
        std::sort(ready.begin(), ready.end(), [&](auto a, auto b) { return smallest(a) < smallest(b); });
        std::size_t pick = ready.front();
        if (seed) {
            pick = ready[std::uniform_int_distribution<std::size_t>(0, ready.size() - 1)(rng)];
        } else {
            for (auto c : ready) {
                if (std::all_of(run.begin(), run.end(), [&](auto r) { return scg.alongside(c, r); })) {
                    pick = c;
                    break;
                }
            }
        }
        if (!std::all_of(run.begin(), run.end(), [&](auto r) { return scg.alongside(pick, r); })) { run.clear(); }
        run.push_back(pick);
        placed[pick] = true;
        order.push_back(pick);
        for (auto const &arc : scg.arcs) {
            if (arc.from == pick) { --indegree[arc.to]; }
        }
    }
    return order;
}

std::vector<std::vector<std::size_t>> enumerate_orderings(Scg const &scg, std::size_t limit) {
    std::size_t m = scg.components.size();
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> indegree(m, 0);
    for (auto const &arc : scg.arcs) { ++indegree[arc.to]; }
    std::vector<bool> placed(m, false);
    std::vector<std::size_t> order;
    std::function<void()> extend = [&] {
        if (out.size() >= limit) { return; }
        if (order.size() == m) {
            out.push_back(order);
            return;
        }
        for (std::size_t c = 0; c < m; ++c) {
            if (placed[c] || indegree[c] != 0) { continue; }
            placed[c] = true;
            order.push_back(c);
            for (auto const &arc : scg.arcs) {
                if (arc.from == c) { --indegree[arc.to]; }
            }
            extend();
            for (auto const &arc : scg.arcs) {
                if (arc.from == c) { ++indegree[arc.to]; }
            }
            order.pop_back();
            placed[c] = false;
        }
    };
    extend();
    return out;
}

SplitPlan build_split_plan(Program const &program, std::vector<std::size_t> const &ordering) {
    SplitPlan plan;
    plan.stratification = check_stratifiable(program);
    plan.sdg = build_sdg(program);
    plan.scg = build_scg(plan.sdg);
    auto const &scg = plan.scg;
    std::size_t m = scg.components.size();

    std::vector<std::size_t> position(m, SIZE_MAX);
    if (ordering.size() != m) { throw std::invalid_argument("ordering does not cover all components"); }
    for (std::size_t i = 0; i < m; ++i) {
        if (ordering[i] >= m || position[ordering[i]] != SIZE_MAX) {
            throw std::invalid_argument("ordering is not a permutation of the components");
        }
        position[ordering[i]] = i;
    }
    for (auto const &arc : scg.arcs) {
        if (position[arc.from] > position[arc.to]) {
            throw std::invalid_argument("ordering places a component before one it depends on");
        }
    }
    plan.ordering = ordering;

    for (auto c : ordering) {
        if (plan.macro_nodes.empty() ||
            !std::all_of(plan.macro_nodes.back().begin(), plan.macro_nodes.back().end(),
                         [&](auto r) { return scg.alongside(c, r); })) {
            plan.macro_nodes.emplace_back();
        }
        plan.macro_nodes.back().push_back(c);
    }

    for (auto const &macro : plan.macro_nodes) {
        Subprogram sub;
        for (auto c : macro) {
            for (auto v : scg.components[c]) { sub.predicates.push_back(plan.sdg.nodes[v]); }
        }
        std::sort(sub.predicates.begin(), sub.predicates.end());
        for (std::size_t r = 0; r < program.rules.size(); ++r) {
            auto const &rule = program.rules[r];
            auto head = *plan.sdg.node(rule.head.key());
            if (std::find(macro.begin(), macro.end(), scg.component_of[head]) == macro.end()) { continue; }
            bool recursive = false;
            auto hc = scg.component_of[head];
            if (scg.internal_windowed[hc]) {
                for (auto const &dep : dependencies(rule)) {
                    auto b = plan.sdg.node(dep.body);
                    if (b && scg.component_of[*b] == hc) { recursive = true; }
                }
            }
            sub.rules.push_back(r);
            sub.streaming_recursive.push_back(recursive);
        }
        plan.subprograms.push_back(std::move(sub));
    }
    return plan;
}

SplitPlan plan(Program const &program, std::optional<std::uint64_t> seed) {
    check_stratifiable(program);
    auto sdg = build_sdg(program);
    auto scg = build_scg(sdg);
    return build_split_plan(program, order_components(sdg, scg, seed));
}

} // namespace windlog::analysis
