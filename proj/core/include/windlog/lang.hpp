#pragma once

#include <windlog/ast.hpp>

#include <string_view>
#include <variant>

namespace windlog::lang {

/// Prefix reserved for auxiliary predicates introduced by flattening.
inline constexpr std::string_view reserved_prefix = "aux__";

/// Parses program text. Shortcuts are kept as written; see desugar().
/// Throws ParseError listing every malformed statement.
Program parse_program(std::string_view source);

/// Rewrites shortcuts: bare atoms and `in` become `at least 1`, `at most c`
/// becomes the negated `at least c+1`, and `[w]` becomes an explicit set.
Program desugar(Program const &program);

/// Returns all safety violations of a desugared program (empty when safe).
std::vector<SafetyViolation> safety_violations(Program const &program);

/// Throws SafetyError if any rule is unsafe.
void check_safety(Program const &program);

/// parse + desugar + check_safety.
Program load_program(std::string_view source);

struct TickMarker {
    friend bool operator==(TickMarker, TickMarker) { return true; }
};
/// Blank line or comment.
struct NoFact {
    friend bool operator==(NoFact, NoFact) { return true; }
};

using FactLine = std::variant<GroundAtom, TickMarker, NoFact>;

/// Parses one line of the fact wire format: `atom.`, `#end.` or a `%` comment.
/// Throws ParseError for non-ground or malformed atoms.
FactLine parse_fact_line(std::string_view line);

/// Parses a whole fact file (one atom per line, no tick markers expected).
std::vector<GroundAtom> parse_facts(std::string_view text);

} // namespace windlog::lang
