#pragma once

#include <windlog/rewrite.hpp>

#include <deque>
#include <unordered_map>

namespace windlog::windows {

/// Persisted atoms of past ticks, kept only for predicates read by some
/// window with an offset d >= 1 and only as far back as the largest offset.
class History {
public:
    /// Registers a window over `predicate` reaching back `max_offset` ticks.
    void track(PredicateKey const &predicate, std::uint32_t max_offset);

    /// 1 + largest offset for the predicate (0 when untracked).
    std::uint32_t depth(PredicateKey const &predicate) const;

    /// Index of the tick currently being evaluated (number of completed ticks).
    std::size_t tick() const { return tick_; }

    /// Stores the persisted set of the current tick and moves to the next one.
    template <class Atoms>
    void advance(Atoms const &persisted) {
        for (auto &[key, ring] : rings_) { ring.slots.emplace_front(); }
        for (auto const &atom : persisted) {
            auto it = rings_.find(atom.key());
            if (it != rings_.end()) { it->second.slots.front().push_back(atom.args); }
        }
        finish_advance();
    }

    /// Tuples of `predicate` persisted at tick `index`, or nullptr if that
    /// tick is not retained.
    std::vector<Tuple> const *slot(PredicateKey const &predicate, std::size_t index) const;

    /// Number of retained (tick, predicate) tuples; for memory accounting.
    std::size_t size() const;

private:
    void finish_advance();

    struct Ring {
        std::uint32_t capacity = 0;
        // front() is the most recent completed tick.
        std::deque<std::vector<Tuple>> slots;
    };
    std::unordered_map<PredicateKey, Ring, PredicateKeyHash> rings_;
    std::size_t tick_ = 0;
};

/// Extension of a streaming atom at the current tick. `current` holds the
/// source predicate's tuples in the in-progress set (read when 0 is in D).
/// Variable counts append the occurrence count to each tuple. Result sorted.
std::vector<Tuple> evaluate(rewrite::AuxSignature const &sig, History const &history,
                            std::vector<Tuple> const &current);

std::vector<Tuple> eval_at_least(rewrite::AuxSignature const &sig, History const &history,
                                 std::vector<Tuple> const &current);
std::vector<Tuple> eval_always(rewrite::AuxSignature const &sig, History const &history,
                               std::vector<Tuple> const &current);
std::vector<Tuple> eval_count(rewrite::AuxSignature const &sig, History const &history,
                              std::vector<Tuple> const &current);

} // namespace windlog::windows
