#pragma once

// Reference evaluator: a direct, unoptimised transcription of the stream
// semantics. Used as ground truth by tests and by `run --oracle-check`.

#include <windlog/ast.hpp>

#include <map>
#include <random>
#include <utility>

namespace windlog::oracle {

/// ⟨S_0,...,S_n⟩; the last element is the current time point.
using Stream = std::vector<AtomSet>;

using Substitution = std::map<std::string, Value>;

struct Trigger {
    std::size_t rule = 0;
    Substitution subst;
    friend bool operator==(Trigger const &, Trigger const &) = default;
    friend auto operator<=>(Trigger const &, Trigger const &) = default;
};

/// Pairs (i, S_i) for i = n - d, d in D, i >= 0; ordered by decreasing i.
std::vector<std::pair<std::size_t, AtomSet>> backward_observation(Stream const &stream, WindowSet const &window);

/// Entailment of a ground, desugared streaming literal.
bool entails(Stream const &stream, StreamingLiteral const &literal);

/// Instantiates an atom; every variable must be bound.
GroundAtom ground(PredicateAtom const &atom, Substitution const &subst);

/// All triggers of the given rules applicable on the stream. Rule indices
/// refer to `program.rules`.
std::vector<Trigger> applicable_triggers(Program const &program, std::vector<std::size_t> const &rules,
                                         Stream const &stream);

/// Adds the trigger's head instance to the last set.
Stream apply_trigger(Stream stream, Program const &program, Trigger const &trigger);

/// Exhaustive application of the triggers of one stratum.
Stream stratum_outcome(Program const &program, std::vector<std::size_t> const &stratum, Stream stream);

/// Same as stratum_outcome, but applies one randomly chosen fresh trigger at
/// a time. Used to check that the result does not depend on the order.
Stream stratum_outcome_random(Program const &program, std::vector<std::size_t> const &stratum, Stream stream,
                              std::mt19937_64 &rng);

/// Final stream after applying all strata in order.
Stream strata_stream(Program const &program, Stratification const &strata, Stream stream);

/// R(P, Σ): the last set of strata_stream.
AtomSet outcome_over_strata(Program const &program, Stratification const &strata, Stream const &stream);

/// 𝒫(P, Σ): atoms of R(P, Σ) in S_n or supported by a non-#temp rule.
AtomSet persistent_outcome(Program const &program, Stratification const &strata, Stream const &stream);

/// Streaming model of P on Σ (with the persisted history Σ′ built from
/// scratch).
AtomSet streaming_model(Program const &program, Stratification const &strata, Stream const &stream);

/// Incremental form of streaming_model: push S_i, get the model at i.
class ModelBuilder {
public:
    ModelBuilder(Program program, Stratification strata);

    AtomSet push(AtomSet input);
    /// A tick whose evaluation failed: only the input is persisted.
    void push_failed(AtomSet input) { persisted_.push_back(std::move(input)); }

    /// Σ′ so far: persisted sets of all pushed ticks.
    Stream const &persisted() const { return persisted_; }

private:
    Program program_;
    Stratification strata_;
    Stream persisted_;
};

} // namespace windlog::oracle
