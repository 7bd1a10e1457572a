#include <windlog/engine.hpp>

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_set>

namespace windlog::engine {

namespace {

struct Sub {
    Program rules;
    std::optional<ground::Evaluator> evaluator;
    std::vector<std::size_t> ops;
    std::vector<bool> op_recursive;
    std::vector<std::uint32_t> op_layer;
    std::vector<std::uint32_t> recursive_layers;
    std::vector<PredicateKey> inputs;
};

void add_body_predicates(Rule const &rule, std::vector<PredicateKey> &preds, std::vector<Symbol> &aux) {
    auto add = [&](PredicateAtom const &a) {
        if (rewrite::is_aux(a.predicate)) {
            if (std::find(aux.begin(), aux.end(), a.predicate) == aux.end()) { aux.push_back(a.predicate); }
        } else if (std::find(preds.begin(), preds.end(), a.key()) == preds.end()) {
            preds.push_back(a.key());
        }
    };
    for (auto const &lit : rule.body) {
        if (auto const *s = std::get_if<StreamingLiteral>(&lit)) {
            add(s->atom);
        } else if (auto const *agg = std::get_if<AggregateLiteral>(&lit)) {
            for (auto const &e : agg->elements) {
                for (auto const &c : e.condition) {
                    if (auto const *p = std::get_if<PredicateAtom>(&c)) { add(*p); }
                }
            }
        }
    }
}

} // namespace

struct Engine::Impl {
    Program program;
    std::vector<GroundAtom> background;
    Options options;
    analysis::SplitPlan plan;
    rewrite::FlattenResult flat;
    windows::History history;
    std::vector<Sub> subs;
    AtomSet last_persisted;

    std::unordered_set<GroundAtom, GroundAtomHash> current;
    std::unordered_map<PredicateKey, std::vector<Tuple>, PredicateKeyHash> by_pred;

    ground::Options evaluator_options() const { return {options.max_ground_rules}; }

    void init() {
        if (options.ordering) {
            plan = analysis::build_split_plan(program, *options.ordering);
        } else {
            plan = analysis::plan(program, options.ordering_seed);
        }
        flat = rewrite::flatten(program);
        for (auto const &entry : flat.tau.entries) {
            if (entry.signature.max_offset() > 0) {
                history.track(entry.signature.source, entry.signature.max_offset());
            }
        }
        for (auto const &sp : plan.subprograms) {
            Sub sub;
            std::vector<Symbol> aux;
            for (auto r : sp.rules) {
                sub.rules.rules.push_back(flat.flat.rules[r]);
                add_body_predicates(flat.flat.rules[r], sub.inputs, aux);
            }
            // Layer = depth of non-harmless dependencies inside the macro-node.
            std::unordered_map<PredicateKey, std::uint32_t, PredicateKeyHash> layer;
            for (auto const &p : sp.predicates) { layer[p] = 0; }
            bool changed = true;
            while (changed) {
                changed = false;
                for (auto const &arc : plan.sdg.arcs) {
                    auto from = plan.sdg.nodes[arc.from];
                    auto to = plan.sdg.nodes[arc.to];
                    if (!layer.contains(from) || !layer.contains(to) || from == to) { continue; }
                    auto need = layer[from] + (arc.non_harmless ? 1U : 0U);
                    if (layer[to] < need) {
                        layer[to] = need;
                        changed = true;
                    }
                }
            }
            for (auto name : aux) {
                for (std::size_t i = 0; i < flat.tau.entries.size(); ++i) {
                    if (flat.tau.entries[i].name != name) { continue; }
                    auto const &sig = flat.tau.entries[i].signature;
                    sub.ops.push_back(i);
                    bool recursive = sig.reads_current() && layer.contains(sig.source);
                    sub.op_recursive.push_back(recursive);
                    sub.op_layer.push_back(recursive ? layer[sig.source] : 0);
                    if (recursive) { sub.recursive_layers.push_back(layer[sig.source]); }
                }
            }
            std::sort(sub.recursive_layers.begin(), sub.recursive_layers.end());
            sub.recursive_layers.erase(std::unique(sub.recursive_layers.begin(), sub.recursive_layers.end()),
                                       sub.recursive_layers.end());
            if (options.mode == Mode::Incremental) { sub.evaluator.emplace(sub.rules, evaluator_options()); }
            subs.push_back(std::move(sub));
        }
    }

    void add_current(GroundAtom const &atom) {
        if (current.insert(atom).second) { by_pred[atom.key()].push_back(atom.args); }
    }

    std::vector<Tuple> const &tuples(PredicateKey const &key) const {
        static std::vector<Tuple> const empty;
        auto it = by_pred.find(key);
        return it == by_pred.end() ? empty : it->second;
    }

    void evaluate(Sub &sub, TickStats &stats, AtomSet &supported) {
        std::vector<GroundAtom> base;
        for (auto const &key : sub.inputs) {
            for (auto const &t : tuples(key)) { base.emplace_back(key.name, t); }
        }
        std::vector<std::vector<Tuple>> holding(sub.ops.size());
        for (std::size_t i = 0; i < sub.ops.size(); ++i) {
            auto const &sig = flat.tau.entries[sub.ops[i]].signature;
            holding[i] = windows::evaluate(sig, history, tuples(sig.source));
        }
        auto shot = [&] {
            auto facts = base;
            for (std::size_t i = 0; i < sub.ops.size(); ++i) {
                auto aux = rewrite::materialize_aux(flat.tau, sub.ops[i], holding[i]);
                facts.insert(facts.end(), std::make_move_iterator(aux.begin()), std::make_move_iterator(aux.end()));
            }
            auto result = sub.evaluator->shot(facts);
            stats.ground_rules_new += result.stats.ground_rules_new;
            stats.derivations += result.stats.derivations;
            ++stats.shots;
            return result;
        };
        auto answer = shot();
        // Streaming recursion: re-evaluate windows that read this tick's own
        // derivations, one non-harmless layer at a time.
        for (auto layer : sub.recursive_layers) {
            while (true) {
                bool changed = false;
                for (std::size_t i = 0; i < sub.ops.size(); ++i) {
                    if (!sub.op_recursive[i] || sub.op_layer[i] != layer) { continue; }
                    auto const &sig = flat.tau.entries[sub.ops[i]].signature;
                    std::vector<Tuple> source = tuples(sig.source);
                    for (auto it = answer.answer.lower_bound(GroundAtom(sig.source.name, {}));
                         it != answer.answer.end() && it->predicate == sig.source.name; ++it) {
                        if (it->args.size() == sig.source.arity && !current.contains(*it)) { source.push_back(it->args); }
                    }
                    auto next = windows::evaluate(sig, history, source);
                    if (next != holding[i]) {
                        holding[i] = std::move(next);
                        changed = true;
                    }
                }
                if (!changed) { break; }
                answer = shot();
            }
        }
        for (auto const &atom : answer.answer) {
            if (!rewrite::is_aux(atom.predicate)) { add_current(atom); }
        }
        for (auto const &atom : answer.supported) {
            if (!rewrite::is_aux(atom.predicate)) { supported.insert(atom); }
        }
    }

    TickOutput on_tick(std::vector<GroundAtom> const &input) {
        TickOutput out;
        out.tick = history.tick();
        current.clear();
        by_pred.clear();
        for (auto const &a : input) { add_current(a); }
        for (auto const &a : background) { add_current(a); }
        AtomSet persisted(current.begin(), current.end());
        AtomSet supported;
        try {
            for (auto &sub : subs) {
                if (options.mode == Mode::Scratch) { sub.evaluator.emplace(sub.rules, evaluator_options()); }
                evaluate(sub, out.stats, supported);
            }
            persisted.insert(supported.begin(), supported.end());
            out.atoms = AtomSet(current.begin(), current.end());
        } catch (ResourceError const &) {
            throw;
        } catch (EvaluationError const &e) {
            if (!options.skip_failed_ticks) { throw; }
            out.failed = true;
            out.error = e.what();
            out.atoms = persisted;
        }
        for (auto const &sub : subs) {
            if (sub.evaluator) { out.stats.ground_rules_total += sub.evaluator->ground_rules_total(); }
        }
        history.advance(persisted);
        last_persisted = std::move(persisted);
        return out;
    }
};

Engine::Engine(Program program, std::vector<GroundAtom> background, Options options)
    : impl_(std::make_unique<Impl>()) {
    impl_->program = std::move(program);
    impl_->background = std::move(background);
    impl_->options = std::move(options);
    impl_->init();
}

Engine::~Engine() = default;

TickOutput Engine::on_tick(std::vector<GroundAtom> const &input) { return impl_->on_tick(input); }
std::size_t Engine::tick() const { return impl_->history.tick(); }
AtomSet const &Engine::last_persisted() const { return impl_->last_persisted; }
Program const &Engine::program() const { return impl_->program; }
analysis::SplitPlan const &Engine::plan() const { return impl_->plan; }
rewrite::FlattenResult const &Engine::flat() const { return impl_->flat; }
std::size_t Engine::window_operator_count() const { return impl_->flat.tau.entries.size(); }
windows::History const &Engine::history() const { return impl_->history; }

RunSummary run(Engine &engine, TickSource &source, TickCallback const &on_output) {
    std::mutex mutex;
    std::condition_variable ready;
    std::deque<ArrivedTick> queue;
    bool done = false;
    std::exception_ptr source_error;

    auto start = Clock::now();
    std::thread ingestion([&] {
        try {
            while (auto tick = source.next()) {
                std::lock_guard lock(mutex);
                queue.push_back(std::move(*tick));
                ready.notify_one();
            }
        } catch (...) {
            source_error = std::current_exception();
        }
        std::lock_guard lock(mutex);
        done = true;
        ready.notify_one();
    });

    RunSummary summary;
    std::vector<std::int64_t> latencies;
    auto since_start = [&](Clock::time_point t) {
        return std::chrono::duration_cast<std::chrono::nanoseconds>(t - start).count();
    };
    try {
        while (true) {
            ArrivedTick tick;
            std::size_t remaining = 0;
            {
                std::unique_lock lock(mutex);
                ready.wait(lock, [&] { return !queue.empty() || done; });
                if (queue.empty()) { break; }
                tick = std::move(queue.front());
                queue.pop_front();
                remaining = queue.size();
            }
            summary.max_queue_length = std::max(summary.max_queue_length, remaining + 1);
            auto began = Clock::now();
            auto output = engine.on_tick(tick.facts);
            auto emitted = Clock::now();
            summary.eval_seconds += std::chrono::duration<double>(emitted - began).count();
            MetricsRecord record;
            record.tick = output.tick;
            record.arrival_ns = since_start(tick.arrival);
            record.emit_ns = since_start(emitted);
            record.latency_ns = std::max<std::int64_t>(0, record.emit_ns - record.arrival_ns);
            record.queue_length = remaining;
            record.ground_rules_total = output.stats.ground_rules_total;
            record.ground_rules_new = output.stats.ground_rules_new;
            latencies.push_back(record.latency_ns);
            ++summary.accepted;
            if (output.failed) { ++summary.failed; }
            if (on_output) { on_output(output, record); }
        }
    } catch (...) {
        source.cancel();
        ingestion.join();
        throw;
    }
    ingestion.join();
    summary.total_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (!latencies.empty()) {
        double sum = 0;
        for (auto l : latencies) { sum += static_cast<double>(l); }
        summary.latency_mean_ns = sum / static_cast<double>(latencies.size());
        std::sort(latencies.begin(), latencies.end());
        summary.latency_p50_ns = latencies[latencies.size() / 2];
        summary.latency_p95_ns = latencies[std::min(latencies.size() - 1, latencies.size() * 95 / 100)];
        summary.latency_max_ns = latencies.back();
    }
    if (source_error) { std::rethrow_exception(source_error); }
    return summary;
}

} // namespace windlog::engine
