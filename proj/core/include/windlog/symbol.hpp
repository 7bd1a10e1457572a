#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <string>
#include <string_view>

namespace windlog {

/// Interned string. Two symbols are equal iff they were interned from equal
/// text; equality and hashing are pointer operations. The interning table is
/// process-wide, append-only and thread-safe.
class Symbol {
public:
    Symbol();
    static Symbol intern(std::string_view text);

    std::string_view str() const { return *text_; }
    std::string const &string() const { return *text_; }
    bool empty() const { return text_->empty(); }

    friend bool operator==(Symbol a, Symbol b) { return a.text_ == b.text_; }
    // Ordered by text so that sorted containers are reproducible across runs.
    friend std::strong_ordering operator<=>(Symbol a, Symbol b) {
        if (a.text_ == b.text_) { return std::strong_ordering::equal; }
        return a.str() <=> b.str();
    }

    std::size_t hash() const { return std::hash<void const *>{}(text_); }

private:
    explicit Symbol(std::string const *text) : text_(text) { }
    std::string const *text_;
};

} // namespace windlog

template <>
struct std::hash<windlog::Symbol> {
    std::size_t operator()(windlog::Symbol s) const noexcept { return s.hash(); }
};
