#pragma once

#include <windlog/analysis.hpp>
#include <windlog/ground.hpp>
#include <windlog/rewrite.hpp>
#include <windlog/windows.hpp>

#include <chrono>
#include <functional>
#include <memory>

namespace windlog::engine {

enum class Mode : std::uint8_t {
    Incremental,
    /// Fresh evaluator for every tick: no reuse of ground instances.
    Scratch,
};

struct Options {
    Mode mode = Mode::Incremental;
    std::size_t max_ground_rules = 0;
    /// Explicit component ordering; otherwise the deterministic default, or a
    /// random valid one when `ordering_seed` is set.
    std::optional<std::vector<std::size_t>> ordering;
    std::optional<std::uint64_t> ordering_seed;
    /// Record evaluation errors as failed ticks (persisting only S_n) instead
    /// of throwing.
    bool skip_failed_ticks = false;
};

struct TickStats {
    std::size_t ground_rules_total = 0;
    std::size_t ground_rules_new = 0;
    std::size_t derivations = 0;
    std::size_t shots = 0;
};

struct TickOutput {
    std::size_t tick = 0;
    /// S_n ∪ O_n.
    AtomSet atoms;
    TickStats stats;
    bool failed = false;
    std::string error;
};

class Engine {
public:
    /// `program` must be desugared and safe; throws StratificationError.
    Engine(Program program, std::vector<GroundAtom> background, Options options = {});
    ~Engine();

    TickOutput on_tick(std::vector<GroundAtom> const &input);

    std::size_t tick() const;
    /// Atoms written to the history for the last completed tick.
    AtomSet const &last_persisted() const;

    Program const &program() const;
    analysis::SplitPlan const &plan() const;
    rewrite::FlattenResult const &flat() const;
    std::size_t window_operator_count() const;
    windows::History const &history() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

using Clock = std::chrono::steady_clock;

struct ArrivedTick {
    std::vector<GroundAtom> facts;
    Clock::time_point arrival;
};

/// Producer of tick-delimited fact sets; next() blocks until a tick is
/// complete and returns nullopt at end of stream.
class TickSource {
public:
    virtual ~TickSource() = default;
    virtual std::optional<ArrivedTick> next() = 0;
    /// Called from another thread to make a blocked next() return nullopt.
    virtual void cancel() { }
};

struct MetricsRecord {
    std::size_t tick = 0;
    std::int64_t arrival_ns = 0;
    std::int64_t emit_ns = 0;
    std::int64_t latency_ns = 0;
    std::size_t queue_length = 0;
    std::size_t ground_rules_total = 0;
    std::size_t ground_rules_new = 0;
};

struct RunSummary {
    std::size_t accepted = 0;
    std::size_t failed = 0;
    double total_seconds = 0;
    /// Time spent inside on_tick.
    double eval_seconds = 0;
    double latency_mean_ns = 0;
    std::int64_t latency_p50_ns = 0;
    std::int64_t latency_p95_ns = 0;
    std::int64_t latency_max_ns = 0;
    std::size_t max_queue_length = 0;
};

using TickCallback = std::function<void(TickOutput const &, MetricsRecord const &)>;

/// Runs the source on its own thread and evaluates ticks in arrival order on
/// the calling thread; nothing is dropped. Source errors are rethrown after
/// all ticks that did arrive have been processed.
RunSummary run(Engine &engine, TickSource &source, TickCallback const &on_output);

} // namespace windlog::engine
