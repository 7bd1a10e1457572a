#pragma once

// Seeded benchmark workloads. Every generator is a pure function of its
// arguments; invalid parameters throw std::invalid_argument.

#include <windlog/value.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace windlog::gen {

struct Workload {
    std::string program;
    /// Facts added to every tick (may be empty).
    std::string background;
    std::vector<std::vector<GroundAtom>> ticks;
};

/// Stream file text: facts of each tick followed by `#end.`.
std::string stream_text(std::vector<std::vector<GroundAtom>> const &ticks);

/// `a(X,Y) :- b(X,Z) in [w], c(Z,Y) in [w].` with events/2 b-facts and
/// events/2 c-facts per tick; join keys Z come from a space of 16 values.
/// `events` must be even and positive.
Workload heavy_join(std::uint32_t w, std::size_t events, std::size_t ticks, std::uint64_t seed);

/// Panels p<r>_<c> that stop delivering energy over ticks [first, last].
struct Fault {
    std::vector<std::pair<std::size_t, std::size_t>> panels;
    std::size_t first = 0;
    std::size_t last = 0;
};

/// Parses `col:C@A-B`, `row:R@A-B` or `p<r>_<c>[+p<r>_<c>...]@A-B`.
Fault parse_fault(std::string const &text);

struct PvsOptions {
    std::size_t rows = 5;
    std::size_t cols = 5;
    std::size_t ticks = 60;
    std::vector<Fault> faults;
    /// From this tick on every tick repeats the previous tick's deliveries.
    std::optional<std::size_t> steady_from;
    std::uint64_t seed = 1;
};

/// Photovoltaic monitoring: grid links plus a CEA attached to p0_0 and an
/// energy threshold of 10 as background; per-tick energyDelivered(P,W) with
/// W in [20,60] for every non-faulted panel.
Workload pvs(PvsOptions const &options);

/// Content caching: per-tick popularity(C,L), L in 1..5, for `contents`
/// contents following a seeded random walk; cache/uncache decisions over a
/// window of `window` ticks. `contents` must be in [1, 500].
Workload caching(std::size_t contents, std::size_t ticks, std::uint64_t seed, std::uint32_t window = 50);

} // namespace windlog::gen
