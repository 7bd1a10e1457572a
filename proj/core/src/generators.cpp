#include <windlog/generators.hpp>

#include <algorithm>
#include <random>
#include <stdexcept>

namespace windlog::gen {

namespace {

GroundAtom make(std::string_view pred, Tuple args) { return {Symbol::intern(pred), std::move(args)}; }
Value num(std::int64_t n) { return Value(n); }
Value sym(std::string const &s) { return Value::symbol(s); }

std::string panel(std::size_t r, std::size_t c) { return "p" + std::to_string(r) + "_" + std::to_string(c); }

std::size_t parse_size(std::string const &s, std::string const &what) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &used);
    } catch (std::exception const &) {
        used = 0;
    }
    if (used == 0 || used != s.size()) { throw std::invalid_argument("bad " + what + " '" + s + "'"); }
    return static_cast<std::size_t>(v);
}

} // namespace

std::string stream_text(std::vector<std::vector<GroundAtom>> const &ticks) {
    std::string out;
    for (auto const &tick : ticks) {
        for (auto const &a : tick) { out += a.to_string() + ".\n"; }
        out += "#end.\n";
    }
    return out;
}

Workload heavy_join(std::uint32_t w, std::size_t events, std::size_t ticks, std::uint64_t seed) {
    if (w < 1) { throw std::invalid_argument("heavy-join: w must be at least 1"); }
    if (events == 0 || events % 2 != 0) { throw std::invalid_argument("heavy-join: events per tick must be even"); }
    constexpr int keys = 16;
    constexpr int ids = 64;
    Workload out;
    out.program = "a(X,Y) :- b(X,Z) in [" + std::to_string(w) + "], c(Z,Y) in [" + std::to_string(w) + "].\n";
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> key(1, keys);
    std::uniform_int_distribution<int> id(1, ids);
    for (std::size_t t = 0; t < ticks; ++t) {
        std::vector<GroundAtom> facts;
        for (std::size_t i = 0; i < events / 2; ++i) { facts.push_back(make("b", {num(id(rng)), num(key(rng))})); }
        for (std::size_t i = 0; i < events / 2; ++i) { facts.push_back(make("c", {num(key(rng)), num(id(rng))})); }
        out.ticks.push_back(std::move(facts));
    }
    return out;
}

Fault parse_fault(std::string const &text) {
    auto at = text.find('@');
    auto dash = text.find('-', at == std::string::npos ? 0 : at);
    if (at == std::string::npos || dash == std::string::npos) {
        throw std::invalid_argument("fault '" + text + "': expected PANELS@FIRST-LAST");
    }
    Fault f;
    f.first = parse_size(text.substr(at + 1, dash - at - 1), "first tick");
    f.last = parse_size(text.substr(dash + 1), "last tick");
    if (f.last < f.first) { throw std::invalid_argument("fault '" + text + "': empty tick range"); }
    auto what = text.substr(0, at);
    if (what.starts_with("col:") || what.starts_with("row:")) {
        auto index = parse_size(what.substr(4), "grid index");
        // Expanded against the grid size in pvs().
        f.panels.emplace_back(what[0] == 'c' ? SIZE_MAX : index, what[0] == 'c' ? index : SIZE_MAX);
        return f;
    }
    std::size_t start = 0;
    while (start <= what.size()) {
        auto end = what.find('+', start);
        auto name = what.substr(start, end == std::string::npos ? std::string::npos : end - start);
        auto us = name.find('_');
        if (name.size() < 4 || name[0] != 'p' || us == std::string::npos) {
            throw std::invalid_argument("fault '" + text + "': bad panel '" + name + "'");
        }
        f.panels.emplace_back(parse_size(name.substr(1, us - 1), "row"), parse_size(name.substr(us + 1), "column"));
        if (end == std::string::npos) { break; }
        start = end + 1;
    }
    return f;
}

Workload pvs(PvsOptions const &o) {
    if (o.rows < 2 || o.cols < 2) { throw std::invalid_argument("pvs: grid must be at least 2x2"); }
    std::vector<Fault> faults = o.faults;
    for (auto &f : faults) {
        std::vector<std::pair<std::size_t, std::size_t>> expanded;
        for (auto [r, c] : f.panels) {
            if (r == SIZE_MAX && c < o.cols) {
                for (std::size_t i = 0; i < o.rows; ++i) { expanded.emplace_back(i, c); }
            } else if (c == SIZE_MAX && r < o.rows) {
                for (std::size_t i = 0; i < o.cols; ++i) { expanded.emplace_back(r, i); }
            } else if (r < o.rows && c < o.cols) {
                expanded.emplace_back(r, c);
            } else {
                throw std::invalid_argument("pvs: fault references a panel outside the " + std::to_string(o.rows) +
                                            "x" + std::to_string(o.cols) + " grid");
            }
        }
        f.panels = std::move(expanded);
    }

    Workload out;
    out.program = "workingPanel(P) :- energyDelivered(P,W) at least 1 in [4], energyThreshold(Et), W >= Et.\n"
                  "reachable(cea,P2) :- link(cea,P2), workingPanel(P2).\n"
                  "reachable(P1,P3) :- reachable(P1,P2), link(P2,P3), workingPanel(P3).\n"
                  "unlinked :- workingPanel(P), not reachable(cea,P).\n"
                  "regularFunctioning :- unlinked at most 2 in [3].\n"
                  "alert :- not regularFunctioning.\n"
                  "callMaintenance :- alert always in [5].\n";
    auto link = [&](std::string const &a, std::string const &b) {
        out.background += "link(" + a + "," + b + ").\n";
    };
    link("cea", panel(0, 0));
    for (std::size_t r = 0; r < o.rows; ++r) {
        for (std::size_t c = 0; c < o.cols; ++c) {
            if (c + 1 < o.cols) {
                link(panel(r, c), panel(r, c + 1));
                link(panel(r, c + 1), panel(r, c));
            }
            if (r + 1 < o.rows) {
                link(panel(r, c), panel(r + 1, c));
                link(panel(r + 1, c), panel(r, c));
            }
        }
    }
    out.background += "energyThreshold(10).\n";

    std::mt19937_64 rng(o.seed);
    std::uniform_int_distribution<int> energy(20, 60);
    for (std::size_t t = 0; t < o.ticks; ++t) {
        if (o.steady_from && t > 0 && t >= *o.steady_from) {
            out.ticks.push_back(out.ticks.back());
            continue;
        }
        std::vector<GroundAtom> facts;
        for (std::size_t r = 0; r < o.rows; ++r) {
            for (std::size_t c = 0; c < o.cols; ++c) {
                auto w = energy(rng);
                bool down = false;
                for (auto const &f : faults) {
                    if (t < f.first || t > f.last) { continue; }
                    for (auto const &p : f.panels) { down = down || p == std::pair{r, c}; }
                }
                if (!down) { facts.push_back(make("energyDelivered", {sym(panel(r, c)), num(w)})); }
            }
        }
        out.ticks.push_back(std::move(facts));
    }
    return out;
}

Workload caching(std::size_t contents, std::size_t ticks, std::uint64_t seed, std::uint32_t window) {
    if (contents < 1 || contents > 500) { throw std::invalid_argument("caching: contents must be in [1, 500]"); }
    if (window < 1) { throw std::invalid_argument("caching: window must be at least 1"); }
    auto w = std::to_string(window);
    auto need = std::to_string(std::min<std::uint32_t>(3, window + 1));
    Workload out;
    out.program = "popular(C) :- popularity(C,L), L >= 4.\n"
                  "cache(C) :- popular(C) at least " + need + " in [" + w + "].\n"
                  "uncache(C) :- popularity(C,L), not popular(C) in [" + w + "].\n"
                  "#temp hits(C,N) :- popular(C) count N in [" + w + "].\n"
                  "medium(C) :- popularity(C,L), L >= 2, L < 4, not cache(C).\n";
    std::mt19937_64 rng(seed);
    std::vector<int> level(contents);
    std::uniform_int_distribution<int> init(1, 5);
    std::uniform_int_distribution<int> step(-1, 1);
    for (auto &l : level) { l = init(rng); }
    for (std::size_t t = 0; t < ticks; ++t) {
        std::vector<GroundAtom> facts;
        for (std::size_t c = 0; c < contents; ++c) {
            level[c] = std::clamp(level[c] + step(rng), 1, 5);
            facts.push_back(make("popularity", {sym("v" + std::to_string(c)), num(level[c])}));
        }
        out.ticks.push_back(std::move(facts));
    }
    return out;
}

} // namespace windlog::gen
