#pragma once

#include <windlog/ast.hpp>

#include <optional>

namespace windlog::analysis {

struct SdgArc {
    std::size_t from = 0;
    std::size_t to = 0;
    /// Some contributing body literal is non-degenerate.
    bool windowed = false;
    /// Some contributing body literal is negative, a count, or an aggregate.
    bool non_harmless = false;
};

/// Nodes are head predicates; arcs go from body predicate to head predicate.
struct Sdg {
    std::vector<PredicateKey> nodes;
    std::vector<SdgArc> arcs;

    std::optional<std::size_t> node(PredicateKey const &key) const;
};

struct ScgArc {
    std::size_t from = 0;
    std::size_t to = 0;
    bool windowed = false;
};

struct Scg {
    /// Components with their SDG node indices; predicates sorted.
    std::vector<std::vector<std::size_t>> components;
    std::vector<std::size_t> component_of;
    std::vector<ScgArc> arcs;
    /// Component has a windowed arc between two of its own predicates.
    std::vector<bool> internal_windowed;
    /// precedes[i][j]: a path from i to j with at least one windowed arc.
    std::vector<std::vector<bool>> precedes;

    bool alongside(std::size_t i, std::size_t j) const { return !precedes[i][j] && !precedes[j][i]; }
};

struct Subprogram {
    std::vector<PredicateKey> predicates;
    std::vector<std::size_t> rules;
    /// Parallel to `rules`.
    std::vector<bool> streaming_recursive;

    bool recursive() const;
};

struct SplitPlan {
    Sdg sdg;
    Scg scg;
    std::vector<std::size_t> ordering;
    /// Component indices per macro-node, in processing order.
    std::vector<std::vector<std::size_t>> macro_nodes;
    std::vector<Subprogram> subprograms;
    Stratification stratification;
};

Sdg build_sdg(Program const &program);

Scg build_scg(Sdg const &sdg);

/// Throws StratificationError naming a cycle through a non-harmless literal;
/// otherwise returns a stratification usable by the oracle.
Stratification check_stratifiable(Program const &program);

/// Deterministic processing order of the SCG components: a topological order
/// that, among ready components, prefers one that extends the current
/// macro-node, then the lexicographically smallest predicate. With a seed,
/// ready components are picked at random instead.
std::vector<std::size_t> order_components(Sdg const &sdg, Scg const &scg,
                                          std::optional<std::uint64_t> seed = std::nullopt);

/// Up to `limit` distinct valid orderings.
std::vector<std::vector<std::size_t>> enumerate_orderings(Scg const &scg, std::size_t limit);

/// Throws std::invalid_argument if the ordering is not valid for the SCG.
SplitPlan build_split_plan(Program const &program, std::vector<std::size_t> const &ordering);

/// check_stratifiable + order_components + build_split_plan.
SplitPlan plan(Program const &program, std::optional<std::uint64_t> seed = std::nullopt);

std::string component_name(Sdg const &sdg, Scg const &scg, std::size_t component);

} // namespace windlog::analysis
