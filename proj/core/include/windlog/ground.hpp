#pragma once

// Shot-based evaluator for flat, stratified normal programs with builtins and
// #count/#sum aggregates. Ground rule instances accumulate across shots and
// are reused (overgrounding); truth is recomputed for every shot from that
// shot's facts only.

#include <windlog/ast.hpp>

#include <map>
#include <memory>

namespace windlog::ground {

struct ShotStats {
    std::size_t ground_rules_total = 0;
    std::size_t ground_rules_new = 0;
    std::size_t derivations = 0;
};

struct ShotResult {
    /// The unique answer set; contains every input fact.
    AtomSet answer;
    /// Atoms derived by at least one instance of a non-#temp rule.
    AtomSet supported;
    ShotStats stats;
};

struct Options {
    /// Upper bound on stored ground rule instances; 0 means unbounded.
    std::size_t max_ground_rules = 0;
};

class Evaluator {
public:
    /// Throws std::invalid_argument for non-flat programs and
    /// StratificationError if negation or aggregates are recursive.
    explicit Evaluator(Program const &flat, Options options = {});
    ~Evaluator();
    Evaluator(Evaluator &&) noexcept;
    Evaluator &operator=(Evaluator &&) noexcept;

    /// Throws EvaluationError on arithmetic errors and ResourceError when the
    /// instance cap is exceeded; the store stays usable after an error.
    ShotResult shot(std::vector<GroundAtom> const &facts);

    std::size_t strata_count() const;
    std::size_t ground_rules_total() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

using Binding = std::map<std::string, Value>;

/// Evaluates a builtin: nullopt when it is neither fully bound nor an
/// assignment `V = expr` with expr bound; an assignment extends `binding`.
std::optional<bool> eval_builtin(BuiltinAtom const &builtin, Binding &binding);

/// Evaluates an aggregate over `interpretation`; with an unbound guard and
/// `=` the guard variable is bound to the aggregate value.
std::optional<bool> eval_aggregate(AggregateLiteral const &aggregate, Binding &binding, AtomSet const &interpretation);

} // namespace windlog::ground
