#include <windlog/windows.hpp>

#include <algorithm>
#include <stdexcept>

namespace windlog::windows {

void History::track(PredicateKey const &predicate, std::uint32_t max_offset) {
    auto &ring = rings_[predicate];
    ring.capacity = std::max(ring.capacity, max_offset);
}

std::uint32_t History::depth(PredicateKey const &predicate) const {
    auto it = rings_.find(predicate);
    return it == rings_.end() ? 0 : it->second.capacity + 1;
}

void History::finish_advance() {
    for (auto &[key, ring] : rings_) {
        auto &front = ring.slots.front();
        std::sort(front.begin(), front.end());
        front.erase(std::unique(front.begin(), front.end()), front.end());
        while (ring.slots.size() > ring.capacity) { ring.slots.pop_back(); }
    }
    ++tick_;
}

std::vector<Tuple> const *History::slot(PredicateKey const &predicate, std::size_t index) const {
    if (index >= tick_) { return nullptr; }
    auto it = rings_.find(predicate);
    if (it == rings_.end()) { return nullptr; }
    std::size_t age = tick_ - 1 - index;
    if (age >= it->second.slots.size()) { return nullptr; }
    return &it->second.slots[age];
}

std::size_t History::size() const {
    std::size_t n = 0;
    for (auto const &[key, ring] : rings_) {
        for (auto const &s : ring.slots) { n += s.size(); }
    }
    return n;
}

namespace {

struct Counts {
    std::unordered_map<Tuple, std::uint32_t, TupleHash> per_tuple;
    std::uint32_t observed = 0;
};

Counts count(rewrite::AuxSignature const &sig, History const &history, std::vector<Tuple> const &current) {
    Counts c;
    std::size_t n = history.tick();
    for (auto d : sig.offsets) {
        if (d > n) { continue; }
        std::vector<Tuple> const *slot = nullptr;
        if (d == 0) {
            slot = &current;
        } else {
            slot = history.slot(sig.source, n - d);
            if (slot == nullptr) { throw std::logic_error("window reads an unretained tick of " + sig.source.to_string()); }
        }
        ++c.observed;
        for (auto const &t : *slot) { ++c.per_tuple[t]; }
    }
    return c;
}

template <class Keep>
std::vector<Tuple> select(Counts const &c, Keep keep) {
    std::vector<Tuple> out;
    for (auto const &[t, k] : c.per_tuple) {
        if (keep(k)) { out.push_back(t); }
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

std::vector<Tuple> eval_at_least(rewrite::AuxSignature const &sig, History const &history,
                                 std::vector<Tuple> const &current) {
    auto c = count(sig, history, current);
    auto need = static_cast<std::uint64_t>(*sig.count);
    return select(c, [&](std::uint32_t k) { return k >= need; });
}

std::vector<Tuple> eval_always(rewrite::AuxSignature const &sig, History const &history,
                               std::vector<Tuple> const &current) {
    auto c = count(sig, history, current);
    return select(c, [&](std::uint32_t k) { return c.observed > 0 && k == c.observed; });
}

std::vector<Tuple> eval_count(rewrite::AuxSignature const &sig, History const &history,
                              std::vector<Tuple> const &current) {
    auto c = count(sig, history, current);
    if (sig.count) {
        auto want = static_cast<std::uint64_t>(*sig.count);
        return select(c, [&](std::uint32_t k) { return k == want; });
    }
    std::vector<Tuple> out;
    out.reserve(c.per_tuple.size());
    for (auto const &[t, k] : c.per_tuple) {
        Tuple with = t;
        with.emplace_back(static_cast<std::int64_t>(k));
        out.push_back(std::move(with));
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Tuple> evaluate(rewrite::AuxSignature const &sig, History const &history,
                            std::vector<Tuple> const &current) {
    switch (sig.modality) {
        case Modality::AtLeast: return eval_at_least(sig, history, current);
        case Modality::Always: return eval_always(sig, history, current);
        case Modality::Count: return eval_count(sig, history, current);
        case Modality::AtMost: break;
    }
    throw std::logic_error("at most must be desugared before evaluation");
}

} // namespace windlog::windows
