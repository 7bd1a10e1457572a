#pragma once

#include <windlog/symbol.hpp>

#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace windlog {

/// A ground term: a 64-bit integer or a symbolic constant.
class Value {
public:
    Value() : Value(std::int64_t{0}) { }
    explicit Value(std::int64_t number) : is_int_(true), number_(number) { }
    explicit Value(Symbol symbol) : is_int_(false), symbol_(symbol) { }

    static Value integer(std::int64_t n) { return Value(n); }
    static Value symbol(std::string_view text) { return Value(Symbol::intern(text)); }

    bool is_integer() const { return is_int_; }
    bool is_symbol() const { return !is_int_; }
    std::int64_t as_integer() const { return number_; }
    Symbol as_symbol() const { return symbol_; }

    friend bool operator==(Value const &a, Value const &b) {
        if (a.is_int_ != b.is_int_) { return false; }
        return a.is_int_ ? a.number_ == b.number_ : a.symbol_ == b.symbol_;
    }
    // Integers order before symbols.
    friend std::strong_ordering operator<=>(Value const &a, Value const &b) {
        if (a.is_int_ != b.is_int_) { return a.is_int_ ? std::strong_ordering::less : std::strong_ordering::greater; }
        return a.is_int_ ? a.number_ <=> b.number_ : a.symbol_ <=> b.symbol_;
    }

    std::size_t hash() const {
        return is_int_ ? std::hash<std::int64_t>{}(number_) * 0x9e3779b97f4a7c15ULL : symbol_.hash();
    }

private:
    bool is_int_;
    std::int64_t number_ = 0;
    Symbol symbol_;
};

std::ostream &operator<<(std::ostream &out, Value const &value);

using Tuple = std::vector<Value>;

struct TupleHash {
    std::size_t operator()(Tuple const &tuple) const noexcept {
        std::size_t seed = tuple.size();
        for (auto const &v : tuple) { seed ^= v.hash() + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2); }
        return seed;
    }
};

/// Predicate identity: name plus arity (p/1 and p/2 are distinct predicates).
struct PredicateKey {
    Symbol name;
    std::uint32_t arity = 0;

    friend bool operator==(PredicateKey const &, PredicateKey const &) = default;
    friend std::strong_ordering operator<=>(PredicateKey const &a, PredicateKey const &b) {
        if (auto c = a.name <=> b.name; c != 0) { return c; }
        return a.arity <=> b.arity;
    }
    std::string to_string() const { return std::string(name.str()) + "/" + std::to_string(arity); }
};

struct PredicateKeyHash {
    std::size_t operator()(PredicateKey const &key) const noexcept { return key.name.hash() * 31 + key.arity; }
};

/// A ground predicate atom p(c1,...,cn).
struct GroundAtom {
    Symbol predicate;
    Tuple args;

    GroundAtom() = default;
    GroundAtom(Symbol pred, Tuple arguments) : predicate(pred), args(std::move(arguments)) { }

    PredicateKey key() const { return {predicate, static_cast<std::uint32_t>(args.size())}; }

    friend bool operator==(GroundAtom const &, GroundAtom const &) = default;
    friend std::strong_ordering operator<=>(GroundAtom const &a, GroundAtom const &b) {
        if (auto c = a.predicate <=> b.predicate; c != 0) { return c; }
        if (auto c = a.args.size() <=> b.args.size(); c != 0) { return c; }
        for (std::size_t i = 0; i < a.args.size(); ++i) {
            if (auto c = a.args[i] <=> b.args[i]; c != 0) { return c; }
        }
        return std::strong_ordering::equal;
    }

    std::string to_string() const;
};

std::ostream &operator<<(std::ostream &out, GroundAtom const &atom);

struct GroundAtomHash {
    std::size_t operator()(GroundAtom const &atom) const noexcept {
        return atom.predicate.hash() ^ (TupleHash{}(atom.args) << 1);
    }
};

/// Ordered atom set; the exchange type between oracle, engine and sinks.
using AtomSet = std::set<GroundAtom>;

/// Atoms rendered one per entry in lexicographic text order (output order).
std::vector<std::string> sorted_text(AtomSet const &atoms);

} // namespace windlog

template <>
struct std::hash<windlog::Value> {
    std::size_t operator()(windlog::Value const &v) const noexcept { return v.hash(); }
};
