#include <windlog/oracle.hpp>

#include <algorithm>
#include <set>

namespace windlog::oracle {

namespace {

bool bound(Term const &t, Substitution const &s) { return t.is_constant() || s.contains(t.name()); }

Value value_of(Term const &t, Substitution const &s) { return t.is_constant() ? t.value() : s.at(t.name()); }

std::int64_t as_int(Value const &v) {
    if (!v.is_integer()) { throw EvaluationError("arithmetic on non-integer constant"); }
    return v.as_integer();
}

bool expr_bound(Expr const &e, Substitution const &s) { return bound(e.lhs, s) && (!e.op || bound(e.rhs, s)); }

Value eval(Expr const &e, Substitution const &s) {
    Value a = value_of(e.lhs, s);
    if (!e.op) { return a; }
    std::int64_t x = as_int(a);
    std::int64_t y = as_int(value_of(e.rhs, s));
    std::int64_t r = 0;
    bool overflow = false;
    switch (*e.op) {
        case ArithOp::Add: overflow = __builtin_add_overflow(x, y, &r); break;
        case ArithOp::Sub: overflow = __builtin_sub_overflow(x, y, &r); break;
        case ArithOp::Mul: overflow = __builtin_mul_overflow(x, y, &r); break;
        case ArithOp::Div:
            if (y == 0) { throw EvaluationError("division by zero"); }
            if (x == INT64_MIN && y == -1) {
                overflow = true;
            } else {
                r = x / y;
            }
            break;
    }
    if (overflow) { throw EvaluationError("integer overflow"); }
    return Value(r);
}

bool compare(Value const &a, CompareOp op, Value const &b) {
    switch (op) {
        case CompareOp::Eq: return a == b;
        case CompareOp::Ne: return a != b;
        case CompareOp::Lt: return a < b;
        case CompareOp::Le: return a <= b;
        case CompareOp::Gt: return a > b;
        case CompareOp::Ge: return a >= b;
    }
    return false;
}

// Extends `s` so that atom matches `ground`; false on mismatch.
bool match(PredicateAtom const &atom, GroundAtom const &g, Substitution &s) {
    if (atom.predicate != g.predicate || atom.terms.size() != g.args.size()) { return false; }
    for (std::size_t i = 0; i < atom.terms.size(); ++i) {
        auto const &t = atom.terms[i];
        if (t.is_constant()) {
            if (t.value() != g.args[i]) { return false; }
        } else if (auto it = s.find(t.name()); it != s.end()) {
            if (it->second != g.args[i]) { return false; }
        } else {
            s.emplace(t.name(), g.args[i]);
        }
    }
    return true;
}

// Tries to evaluate a builtin under s: nullopt if not yet evaluable,
// otherwise the truth value (an assignment may extend s).
std::optional<bool> builtin(BuiltinAtom const &b, Substitution &s) {
    bool lb = expr_bound(b.lhs, s);
    bool rb = expr_bound(b.rhs, s);
    if (lb && rb) { return compare(eval(b.lhs, s), b.op, eval(b.rhs, s)); }
    if (b.op == CompareOp::Eq) {
        if (!lb && rb && b.lhs.is_term()) {
            s[b.lhs.lhs.name()] = eval(b.rhs, s);
            return true;
        }
        if (lb && !rb && b.rhs.is_term()) {
            s[b.rhs.lhs.name()] = eval(b.lhs, s);
            return true;
        }
    }
    return std::nullopt;
}

std::size_t occurrences(Stream const &stream, WindowSet const &window, GroundAtom const &atom) {
    std::size_t n = stream.size() - 1;
    std::size_t k = 0;
    for (auto d : window.offsets) {
        if (d <= n && stream[n - d].contains(atom)) { ++k; }
    }
    return k;
}

std::size_t observed(Stream const &stream, WindowSet const &window) {
    std::size_t n = stream.size() - 1;
    return static_cast<std::size_t>(std::count_if(window.offsets.begin(), window.offsets.end(),
                                                  [&](auto d) { return d <= n; }));
}

// Enumerates the substitutions satisfying an aggregate element's condition
// over S_n, collecting the element's term tuples.
void element_tuples(AggregateElement const &element, std::vector<bool> done, Substitution s, AtomSet const &current,
                    std::set<Tuple> &out) {
    for (std::size_t i = 0; i < element.condition.size(); ++i) {
        auto const *b = std::get_if<BuiltinAtom>(&element.condition[i]);
        if (done[i] || b == nullptr) { continue; }
        auto r = builtin(*b, s);
        if (!r) { continue; }
        if (!*r) { return; }
        done[i] = true;
        return element_tuples(element, std::move(done), std::move(s), current, out);
    }
    for (std::size_t i = 0; i < element.condition.size(); ++i) {
        auto const *atom = std::get_if<PredicateAtom>(&element.condition[i]);
        if (done[i] || atom == nullptr) { continue; }
        done[i] = true;
        for (auto const &g : current) {
            Substitution ext = s;
            if (match(*atom, g, ext)) { element_tuples(element, done, std::move(ext), current, out); }
        }
        return;
    }
    if (std::find(done.begin(), done.end(), false) != done.end()) { throw EvaluationError("unsafe aggregate element"); }
    Tuple t;
    for (auto const &term : element.terms) { t.push_back(value_of(term, s)); }
    out.insert(std::move(t));
}

struct Search {
    Program const &program;
    Stream const &stream;
    std::size_t rule_index;
    std::vector<Trigger> &out;
    std::vector<std::vector<std::string>> aggregate_globals;

    Rule const &rule() const { return program.rules[rule_index]; }

    void start() {
        auto const &body = rule().body;
        aggregate_globals.resize(body.size());
        for (std::size_t i = 0; i < body.size(); ++i) {
            auto const *agg = std::get_if<AggregateLiteral>(&body[i]);
            if (agg == nullptr) { continue; }
            std::vector<std::string> outside;
            collect_variables(rule().head, outside);
            for (std::size_t j = 0; j < body.size(); ++j) {
                if (j != i) {
                    std::visit([&](auto const &l) { collect_variables(l, outside); }, body[j]);
                }
            }
            std::vector<std::string> inside;
            for (auto const &e : agg->elements) {
                for (auto const &t : e.terms) { collect_variables(t, inside); }
                for (auto const &c : e.condition) {
                    std::visit([&](auto const &x) { collect_variables(x, inside); }, c);
                }
            }
            for (auto const &v : inside) {
                if (std::find(outside.begin(), outside.end(), v) != outside.end()) { aggregate_globals[i].push_back(v); }
            }
        }
        std::vector<bool> done(body.size(), false);
        step(done, {});
    }

    bool all_bound(std::vector<std::string> const &vars, Substitution const &s) const {
        return std::all_of(vars.begin(), vars.end(), [&](auto const &v) { return s.contains(v); });
    }

    StreamingLiteral instantiate(StreamingLiteral const &lit, Substitution const &s) const {
        StreamingLiteral g = lit;
        for (auto &t : g.atom.terms) { t = Term::constant(value_of(t, s)); }
        g.count = Term::constant(value_of(lit.count, s));
        return g;
    }

    // Returns nullopt if literal i cannot be evaluated yet.
    std::optional<bool> check(std::size_t i, Substitution &s) const {
        auto const &lit = rule().body[i];
        if (auto const *b = std::get_if<BuiltinAtom>(&lit)) { return builtin(*b, s); }
        if (auto const *l = std::get_if<StreamingLiteral>(&lit)) {
            std::vector<std::string> vars;
            collect_variables(*l, vars);
            if (!all_bound(vars, s)) { return std::nullopt; }
            return entails(stream, instantiate(*l, s));
        }
        auto const &agg = std::get<AggregateLiteral>(lit);
        if (!all_bound(aggregate_globals[i], s)) { return std::nullopt; }
        std::set<Tuple> tuples;
        for (auto const &e : agg.elements) {
            element_tuples(e, std::vector<bool>(e.condition.size(), false), s, stream.back(), tuples);
        }
        std::int64_t result = 0;
        if (agg.function == AggregateFunction::Count) {
            result = static_cast<std::int64_t>(tuples.size());
        } else {
            for (auto const &t : tuples) {
                if (t.empty() || !t[0].is_integer()) { throw EvaluationError("#sum over a non-integer term"); }
                if (__builtin_add_overflow(result, t[0].as_integer(), &result)) {
                    throw EvaluationError("integer overflow");
                }
            }
        }
        if (!bound(agg.guard, s)) {
            if (agg.op != CompareOp::Eq) { return std::nullopt; }
            s[agg.guard.name()] = Value(result);
            return true;
        }
        return compare(Value(result), agg.op, value_of(agg.guard, s));
    }

    void step(std::vector<bool> &done, Substitution s) {
        auto const &body = rule().body;
        // First evaluate whatever is already decidable.
        bool progress = true;
        while (progress) {
            progress = false;
            for (std::size_t i = 0; i < body.size(); ++i) {
                if (done[i]) { continue; }
                auto const *l = std::get_if<StreamingLiteral>(&body[i]);
                Substitution ext = s;
                std::optional<bool> r;
                if (l != nullptr && !l->negative) {
                    std::vector<std::string> vars;
                    collect_variables(*l, vars);
                    if (!all_bound(vars, s)) { continue; }
                }
                r = check(i, ext);
                if (!r) { continue; }
                if (!*r) { return; }
                done[i] = true;
                s = std::move(ext);
                progress = true;
            }
        }
        // Then branch on the first unresolved positive streaming literal.
        for (std::size_t i = 0; i < body.size(); ++i) {
            if (done[i]) { continue; }
            auto const *l = std::get_if<StreamingLiteral>(&body[i]);
            if (l == nullptr || l->negative) { continue; }
            std::set<GroundAtom> candidates;
            std::size_t n = stream.size() - 1;
            for (auto d : l->window.offsets) {
                if (d > n) { continue; }
                auto const &set = stream[n - d];
                for (auto it = set.lower_bound(GroundAtom(l->atom.predicate, {}));
                     it != set.end() && it->predicate == l->atom.predicate; ++it) {
                    Substitution probe = s;
                    if (match(l->atom, *it, probe)) { candidates.insert(*it); }
                }
            }
            done[i] = true;
            for (auto const &g : candidates) {
                Substitution ext = s;
                match(l->atom, g, ext);
                if (l->count_variable() && !ext.contains(l->count.name())) {
                    ext[l->count.name()] = Value(static_cast<std::int64_t>(occurrences(stream, l->window, g)));
                }
                if (!entails(stream, instantiate(*l, ext))) { continue; }
                std::vector<bool> copy = done;
                step(copy, std::move(ext));
            }
            done[i] = false;
            return;
        }
        if (std::all_of(done.begin(), done.end(), [](bool b) { return b; })) {
            out.push_back({rule_index, s});
            return;
        }
        throw EvaluationError("cannot evaluate rule: " + to_string(rule()));
    }
};

} // namespace

std::vector<std::pair<std::size_t, AtomSet>> backward_observation(Stream const &stream, WindowSet const &window) {
    std::vector<std::pair<std::size_t, AtomSet>> out;
    if (stream.empty()) { return out; }
    std::size_t n = stream.size() - 1;
    for (auto d : window.offsets) {
        if (d <= n) { out.emplace_back(n - d, stream[n - d]); }
    }
    return out;
}

bool entails(Stream const &stream, StreamingLiteral const &literal) {
    GroundAtom atom;
    atom.predicate = literal.atom.predicate;
    for (auto const &t : literal.atom.terms) { atom.args.push_back(t.value()); }
    std::size_t k = occurrences(stream, literal.window, atom);
    bool holds = false;
    switch (literal.modality) {
        case Modality::AtLeast: holds = static_cast<std::int64_t>(k) >= literal.count.value().as_integer(); break;
        case Modality::AtMost: holds = static_cast<std::int64_t>(k) <= literal.count.value().as_integer(); break;
        case Modality::Always: {
            std::size_t m = observed(stream, literal.window);
            holds = m > 0 && k == m;
            break;
        }
        case Modality::Count: holds = literal.count.value() == Value(static_cast<std::int64_t>(k)); break;
    }
    return literal.negative ? !holds : holds;
}

GroundAtom ground(PredicateAtom const &atom, Substitution const &subst) {
    GroundAtom g;
    g.predicate = atom.predicate;
    for (auto const &t : atom.terms) { g.args.push_back(value_of(t, subst)); }
    return g;
}

std::vector<Trigger> applicable_triggers(Program const &program, std::vector<std::size_t> const &rules,
                                         Stream const &stream) {
    std::vector<Trigger> out;
    for (auto r : rules) {
        Search search{program, stream, r, out, {}};
        search.start();
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Stream apply_trigger(Stream stream, Program const &program, Trigger const &trigger) {
    stream.back().insert(ground(program.rules[trigger.rule].head, trigger.subst));
    return stream;
}

Stream stratum_outcome(Program const &program, std::vector<std::size_t> const &stratum, Stream stream) {
    while (true) {
        std::size_t before = stream.back().size();
        for (auto const &t : applicable_triggers(program, stratum, stream)) {
            stream.back().insert(ground(program.rules[t.rule].head, t.subst));
        }
        if (stream.back().size() == before) { return stream; }
    }
}

Stream stratum_outcome_random(Program const &program, std::vector<std::size_t> const &stratum, Stream stream,
                              std::mt19937_64 &rng) {
    std::set<Trigger> applied;
    while (true) {
        std::vector<Trigger> fresh;
        for (auto &t : applicable_triggers(program, stratum, stream)) {
            if (!applied.contains(t)) { fresh.push_back(std::move(t)); }
        }
        if (fresh.empty()) { return stream; }
        std::uniform_int_distribution<std::size_t> pick(0, fresh.size() - 1);
        auto const &t = fresh[pick(rng)];
        stream = apply_trigger(std::move(stream), program, t);
        applied.insert(t);
    }
}

Stream strata_stream(Program const &program, Stratification const &strata, Stream stream) {
    for (auto const &s : strata) { stream = stratum_outcome(program, s, std::move(stream)); }
    return stream;
}

AtomSet outcome_over_strata(Program const &program, Stratification const &strata, Stream const &stream) {
    return strata_stream(program, strata, stream).back();
}

namespace {

AtomSet persistent_from_final(Program const &program, AtomSet const &input, Stream const &final) {
    std::vector<std::size_t> non_temp;
    for (std::size_t i = 0; i < program.rules.size(); ++i) {
        if (!program.rules[i].temp) { non_temp.push_back(i); }
    }
    AtomSet out = input;
    for (auto const &t : applicable_triggers(program, non_temp, final)) {
        auto head = ground(program.rules[t.rule].head, t.subst);
        if (final.back().contains(head)) { out.insert(std::move(head)); }
    }
    return out;
}

} // namespace

AtomSet persistent_outcome(Program const &program, Stratification const &strata, Stream const &stream) {
    return persistent_from_final(program, stream.back(), strata_stream(program, strata, stream));
}

AtomSet streaming_model(Program const &program, Stratification const &strata, Stream const &stream) {
    ModelBuilder builder(program, strata);
    AtomSet model;
    for (auto const &s : stream) { model = builder.push(s); }
    return model;
}

ModelBuilder::ModelBuilder(Program program, Stratification strata)
    : program_(std::move(program)), strata_(std::move(strata)) { }

AtomSet ModelBuilder::push(AtomSet input) {
    Stream stream = persisted_;
    stream.push_back(input);
    auto final = strata_stream(program_, strata_, std::move(stream));
    persisted_.push_back(persistent_from_final(program_, input, final));
    return final.back();
}

} // namespace windlog::oracle
