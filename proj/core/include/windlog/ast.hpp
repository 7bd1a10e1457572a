#pragma once

#include <windlog/error.hpp>
#include <windlog/value.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace windlog {

/// A variable (uppercase name) or a ground constant.
class Term {
public:
    Term() = default;
    static Term variable(std::string name) {
        Term t;
        t.is_var_ = true;
        t.name_ = std::move(name);
        return t;
    }
    static Term constant(Value value) {
        Term t;
        t.value_ = value;
        return t;
    }
    static Term integer(std::int64_t n) { return constant(Value(n)); }
    static Term symbol(std::string_view s) { return constant(Value::symbol(s)); }

    bool is_variable() const { return is_var_; }
    bool is_constant() const { return !is_var_; }
    std::string const &name() const { return name_; }
    Value const &value() const { return value_; }

    friend bool operator==(Term const &, Term const &) = default;

private:
    bool is_var_ = false;
    std::string name_;
    Value value_;
};

struct PredicateAtom {
    Symbol predicate;
    std::vector<Term> terms;
    Location loc;

    PredicateKey key() const { return {predicate, static_cast<std::uint32_t>(terms.size())}; }
    std::size_t arity() const { return terms.size(); }
    friend bool operator==(PredicateAtom const &a, PredicateAtom const &b) {
        return a.predicate == b.predicate && a.terms == b.terms;
    }
};

/// Non-empty set of offsets D, kept sorted and duplicate free. `interval`
/// records that the source wrote `[w]`, meaning {0..w}.
struct WindowSet {
    std::vector<std::uint32_t> offsets;
    bool interval = false;

    static WindowSet explicit_set(std::vector<std::uint32_t> offsets);
    static WindowSet upto(std::uint32_t w);

    std::uint32_t max() const { return offsets.back(); }
    std::uint32_t min() const { return offsets.front(); }
    bool is_current_only() const { return offsets.size() == 1 && offsets.front() == 0; }
    friend bool operator==(WindowSet const &, WindowSet const &) = default;
};

enum class Modality : std::uint8_t { AtLeast, AtMost, Always, Count };

/// Surface shortcut that produced an `at least 1` literal.
enum class Shorthand : std::uint8_t { None, Bare, In };

struct StreamingLiteral {
    bool negative = false;
    PredicateAtom atom;
    Modality modality = Modality::AtLeast;
    // AtLeast/AtMost: integer constant. Count: constant or variable.
    Term count = Term::integer(1);
    WindowSet window = WindowSet::explicit_set({0});
    Shorthand shorthand = Shorthand::None;

    /// `a at least 1 in {0}`, in either polarity.
    bool degenerate() const {
        return modality == Modality::AtLeast && count.is_constant() && count.value() == Value(std::int64_t{1}) &&
               window.is_current_only();
    }
    bool count_variable() const { return modality == Modality::Count && count.is_variable(); }

    friend bool operator==(StreamingLiteral const &a, StreamingLiteral const &b) {
        return a.negative == b.negative && a.atom == b.atom && a.modality == b.modality && a.count == b.count &&
               a.window == b.window && a.shorthand == b.shorthand;
    }
};

enum class CompareOp : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge };
enum class ArithOp : std::uint8_t { Add, Sub, Mul, Div };

/// A term or a single binary integer operation over two terms.
struct Expr {
    Term lhs;
    std::optional<ArithOp> op;
    Term rhs;

    static Expr of(Term t) { return Expr{std::move(t), std::nullopt, Term()}; }
    bool is_term() const { return !op.has_value(); }
    friend bool operator==(Expr const &, Expr const &) = default;
};

struct BuiltinAtom {
    Expr lhs;
    CompareOp op = CompareOp::Eq;
    Expr rhs;
    Location loc;
    friend bool operator==(BuiltinAtom const &a, BuiltinAtom const &b) {
        return a.lhs == b.lhs && a.op == b.op && a.rhs == b.rhs;
    }
};

enum class AggregateFunction : std::uint8_t { Count, Sum };

using Condition = std::variant<PredicateAtom, BuiltinAtom>;

/// Rule indices per stratum, lowest stratum first.
using Stratification = std::vector<std::vector<std::size_t>>;

struct AggregateElement {
    std::vector<Term> terms;
    std::vector<Condition> condition;
    friend bool operator==(AggregateElement const &, AggregateElement const &) = default;
};

/// `#count{...} op T` or `#sum{...} op T` (right guard only).
struct AggregateLiteral {
    AggregateFunction function = AggregateFunction::Count;
    std::vector<AggregateElement> elements;
    CompareOp op = CompareOp::Eq;
    Term guard;
    Location loc;
    friend bool operator==(AggregateLiteral const &a, AggregateLiteral const &b) {
        return a.function == b.function && a.elements == b.elements && a.op == b.op && a.guard == b.guard;
    }
};

using BodyLiteral = std::variant<StreamingLiteral, BuiltinAtom, AggregateLiteral>;

struct Rule {
    bool temp = false;
    PredicateAtom head;
    std::vector<BodyLiteral> body;
    Location loc;
    friend bool operator==(Rule const &a, Rule const &b) {
        return a.temp == b.temp && a.head == b.head && a.body == b.body;
    }
};

struct Program {
    std::vector<Rule> rules;
    friend bool operator==(Program const &, Program const &) = default;
};

/// Variables of a term list / literal, in first-occurrence order.
void collect_variables(Term const &term, std::vector<std::string> &out);
void collect_variables(Expr const &expr, std::vector<std::string> &out);
void collect_variables(PredicateAtom const &atom, std::vector<std::string> &out);
void collect_variables(BuiltinAtom const &atom, std::vector<std::string> &out);
void collect_variables(AggregateLiteral const &agg, std::vector<std::string> &out);
void collect_variables(StreamingLiteral const &lit, std::vector<std::string> &out);

std::string to_string(Term const &term);
std::string to_string(Expr const &expr);
std::string to_string(CompareOp op);
std::string to_string(PredicateAtom const &atom);
std::string to_string(WindowSet const &window);
std::string to_string(StreamingLiteral const &lit);
std::string to_string(BuiltinAtom const &atom);
std::string to_string(AggregateLiteral const &agg);
std::string to_string(BodyLiteral const &lit);
std::string to_string(Rule const &rule);
std::string to_string(Program const &program);

} // namespace windlog
