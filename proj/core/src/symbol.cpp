#include <windlog/symbol.hpp>
#include <windlog/value.hpp>

#include <algorithm>
#include <mutex>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace windlog {

namespace {

std::string const &empty_text() {
    static std::string const empty;
    return empty;
}

struct InternTable {
    std::mutex mutex;
    // Node-based: element addresses survive rehashing.
    std::unordered_set<std::string> strings;
};

InternTable &table() {
    static InternTable instance;
    return instance;
}

} // namespace

Symbol::Symbol() : text_(&empty_text()) { }

Symbol Symbol::intern(std::string_view text) {
    if (text.empty()) { return Symbol(); }
    auto &t = table();
    std::lock_guard lock(t.mutex);
    auto it = t.strings.emplace(text).first;
    return Symbol(&*it);
}

std::ostream &operator<<(std::ostream &out, Value const &value) {
    if (value.is_integer()) { return out << value.as_integer(); }
    return out << value.as_symbol().str();
}

std::string GroundAtom::to_string() const {
    std::ostringstream out;
    out << *this;
    return out.str();
}

std::ostream &operator<<(std::ostream &out, GroundAtom const &atom) {
    out << atom.predicate.str();
    if (!atom.args.empty()) {
        out << '(';
        for (std::size_t i = 0; i < atom.args.size(); ++i) {
            if (i > 0) { out << ','; }
            out << atom.args[i];
        }
        out << ')';
    }
    return out;
}

std::vector<std::string> sorted_text(AtomSet const &atoms) {
    std::vector<std::string> lines;
    lines.reserve(atoms.size());
    for (auto const &atom : atoms) { lines.push_back(atom.to_string()); }
    std::sort(lines.begin(), lines.end());
    return lines;
}

} // namespace windlog
