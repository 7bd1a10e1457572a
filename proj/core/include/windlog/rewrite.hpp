#pragma once

#include <windlog/ast.hpp>

#include <optional>

namespace windlog::rewrite {

/// Identity of a non-degenerate streaming atom, independent of its terms.
struct AuxSignature {
    PredicateKey source;
    Modality modality = Modality::AtLeast;
    /// Count constant; nullopt for `count X` with a variable and for always.
    std::optional<std::int64_t> count;
    std::vector<std::uint32_t> offsets;

    bool variable_count() const { return modality == Modality::Count && !count; }
    std::uint32_t max_offset() const { return offsets.back(); }
    bool reads_current() const { return offsets.front() == 0; }

    friend bool operator==(AuxSignature const &, AuxSignature const &) = default;
    friend auto operator<=>(AuxSignature const &, AuxSignature const &) = default;
};

std::string to_string(AuxSignature const &sig);

struct AuxPredicate {
    Symbol name;
    std::uint32_t arity = 0;
    AuxSignature signature;

    PredicateKey key() const { return {name, arity}; }
};

/// τ: signature -> fresh predicate; entries numbered from 1 in order of
/// first occurrence.
struct TauMapping {
    std::vector<AuxPredicate> entries;

    std::optional<std::size_t> find(AuxSignature const &sig) const;
    std::optional<std::size_t> find(PredicateKey const &aux) const;
};

struct FlattenResult {
    Program flat;
    TauMapping tau;
};

/// Replaces every non-degenerate streaming literal by a degenerate literal
/// over its τ predicate, keeping polarity.
FlattenResult flatten(Program const &program);

/// Ground aux facts for the tuples where entry `index` holds. For variable
/// counts each tuple already carries the count as its last value.
std::vector<GroundAtom> materialize_aux(TauMapping const &tau, std::size_t index, std::vector<Tuple> const &holding);

bool is_aux(Symbol predicate);

} // namespace windlog::rewrite
