#include <windlog/analysis.hpp>
#include <windlog/ground.hpp>

#include <algorithm>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace windlog::ground {

namespace {

constexpr std::uint32_t none = UINT32_MAX;

struct CTerm {
    bool var = false;
    std::uint32_t slot = 0;
    Value constant;
};

struct CExpr {
    CTerm lhs;
    std::optional<ArithOp> op;
    CTerm rhs;
};

struct CBuiltin {
    CExpr lhs;
    CompareOp op = CompareOp::Eq;
    CExpr rhs;
};

struct CAtom {
    std::uint32_t pred = 0;
    std::vector<CTerm> terms;
};

struct CElement {
    std::vector<CTerm> terms;
    std::vector<CAtom> atoms;
    std::vector<CBuiltin> builtins;
};

struct CAggregate {
    AggregateFunction function = AggregateFunction::Count;
    std::vector<CElement> elements;
    CompareOp op = CompareOp::Eq;
    CTerm guard;
    std::vector<std::uint32_t> globals;
};

using Values = std::vector<Value>;
using Flags = std::vector<char>;

std::int64_t as_int(Value const &v) {
    if (!v.is_integer()) { throw EvaluationError("arithmetic on non-integer constant " + v.as_symbol().string()); }
    return v.as_integer();
}

Value term_value(CTerm const &t, Values const &vals) { return t.var ? vals[t.slot] : t.constant; }

Value eval_expr(CExpr const &e, Values const &vals) {
    Value a = term_value(e.lhs, vals);
    if (!e.op) { return a; }
    std::int64_t x = as_int(a);
    std::int64_t y = as_int(term_value(e.rhs, vals));
    std::int64_t r = 0;
    bool overflow = false;
    switch (*e.op) {
        case ArithOp::Add: overflow = __builtin_add_overflow(x, y, &r); break;
        case ArithOp::Sub: overflow = __builtin_sub_overflow(x, y, &r); break;
        case ArithOp::Mul: overflow = __builtin_mul_overflow(x, y, &r); break;
        case ArithOp::Div:
            if (y == 0) { throw EvaluationError("division by zero"); }
            overflow = x == INT64_MIN && y == -1;
            if (!overflow) { r = x / y; }
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

bool term_bound(CTerm const &t, Flags const &bound) { return !t.var || bound[t.slot]; }
bool expr_bound(CExpr const &e, Flags const &bound) {
    return term_bound(e.lhs, bound) && (!e.op || term_bound(e.rhs, bound));
}

enum class Mode : std::uint8_t { Check, AssignLeft, AssignRight };

// How a builtin can be evaluated given the bound variables, if at all.
std::optional<Mode> builtin_mode(CBuiltin const &b, Flags const &bound) {
    bool lb = expr_bound(b.lhs, bound);
    bool rb = expr_bound(b.rhs, bound);
    if (lb && rb) { return Mode::Check; }
    if (b.op != CompareOp::Eq) { return std::nullopt; }
    if (!lb && rb && !b.lhs.op && b.lhs.lhs.var) { return Mode::AssignLeft; }
    if (lb && !rb && !b.rhs.op && b.rhs.lhs.var) { return Mode::AssignRight; }
    return std::nullopt;
}

// Applies a builtin in the given mode; false when a check fails.
bool apply_builtin(CBuiltin const &b, Mode mode, Values &vals) {
    switch (mode) {
        case Mode::Check: return compare(eval_expr(b.lhs, vals), b.op, eval_expr(b.rhs, vals));
        case Mode::AssignLeft: vals[b.lhs.lhs.slot] = eval_expr(b.rhs, vals); return true;
        case Mode::AssignRight: vals[b.rhs.lhs.slot] = eval_expr(b.lhs, vals); return true;
    }
    return false;
}

void mark_bound(CBuiltin const &b, Mode mode, Flags &bound) {
    if (mode == Mode::AssignLeft) { bound[b.lhs.lhs.slot] = 1; }
    if (mode == Mode::AssignRight) { bound[b.rhs.lhs.slot] = 1; }
}

struct BuiltinAction {
    std::uint32_t builtin = 0;
    Mode mode = Mode::Check;
};

struct TermOp {
    enum Kind : std::uint8_t { Const, Check, Bind } kind = Const;
    std::uint32_t slot = 0;
    // Check against a variable bound earlier in the same atom: not usable
    // for the index lookup.
    bool same_atom = false;
    Value constant;
};

struct JoinStep {
    std::uint32_t position = 0;
    std::uint32_t pred = 0;
    std::vector<TermOp> ops;
    std::vector<BuiltinAction> after;
};

struct JoinPlan {
    std::vector<BuiltinAction> before;
    std::vector<JoinStep> steps;
};

struct CRule {
    bool temp = false;
    CAtom head;
    std::vector<CAtom> pos;
    std::vector<CAtom> neg;
    std::vector<CBuiltin> builtins;
    std::vector<CAggregate> aggregates;
    std::uint32_t vars = 0;
    std::uint32_t stratum = 0;
    Flags ground_bound;
    std::vector<bool> neg_at_ground;
    std::vector<bool> builtin_at_ground;
    std::vector<JoinPlan> plans;
    std::uint32_t watermark = 0;
    bool grounded_once = false;
    bool before_error = false;

    bool deferred() const { return !aggregates.empty(); }
};

struct Instance {
    std::uint32_t rule = 0;
    std::uint32_t head = none;
    std::uint32_t pos_off = 0;
    std::uint32_t pos_n = 0;
    std::uint32_t neg_off = 0;
    std::uint32_t neg_n = 0;
    std::uint32_t bind_off = none;
    // Index into Impl::errors: an arithmetic error met while grounding,
    // raised if the instance ever fires.
    std::uint32_t error = none;
    std::uint32_t counter = 0;
    std::uint32_t epoch = 0;
};

struct AtomInfo {
    std::uint32_t pred = 0;
    std::uint32_t seq = none;
    std::uint32_t true_epoch = 0;
    std::uint32_t supported_epoch = 0;
    bool queued = false;
    std::vector<std::uint32_t> occurrences;
};

struct Pred {
    PredicateKey key;
    std::uint32_t stratum = 0;
    std::vector<std::uint32_t> possible;
    std::vector<std::unordered_map<Value, std::vector<std::uint32_t>>> index;
    std::vector<std::uint32_t> true_atoms;
    std::uint32_t true_epoch = 0;
};

class Compiler {
public:
    std::uint32_t slot(std::string const &name) {
        auto [it, inserted] = slots_.emplace(name, static_cast<std::uint32_t>(slots_.size()));
        return it->second;
    }
    std::uint32_t size() const { return static_cast<std::uint32_t>(slots_.size()); }

    CTerm term(Term const &t) {
        CTerm c;
        if (t.is_variable()) {
            c.var = true;
            c.slot = slot(t.name());
        } else {
            c.constant = t.value();
        }
        return c;
    }
    CExpr expr(Expr const &e) { return {term(e.lhs), e.op, e.op ? term(e.rhs) : CTerm{}}; }
    CBuiltin builtin(BuiltinAtom const &b) { return {expr(b.lhs), b.op, expr(b.rhs)}; }

private:
    std::map<std::string, std::uint32_t> slots_;
};

void term_slots(CTerm const &t, std::vector<std::uint32_t> &out) {
    if (t.var && std::find(out.begin(), out.end(), t.slot) == out.end()) { out.push_back(t.slot); }
}
void expr_slots(CExpr const &e, std::vector<std::uint32_t> &out) {
    term_slots(e.lhs, out);
    if (e.op) { term_slots(e.rhs, out); }
}
std::vector<std::uint32_t> atom_slots(CAtom const &a) {
    std::vector<std::uint32_t> out;
    for (auto const &t : a.terms) { term_slots(t, out); }
    return out;
}
bool all_bound(std::vector<std::uint32_t> const &slots, Flags const &bound) {
    return std::all_of(slots.begin(), slots.end(), [&](auto s) { return bound[s] != 0; });
}

// Distinct element tuples of an aggregate whose conditions hold over the
// current true atoms (`true_atoms(pred)`).
template <class TrueAtoms, class AtomOf>
void element_tuples(CElement const &element, std::size_t next_atom, std::vector<bool> builtin_done, Values vals,
                    Flags bound, TrueAtoms const &true_atoms, AtomOf const &atom_of, std::set<Tuple> &out) {
    bool progress = true;
    while (progress) {
        progress = false;
        for (std::size_t b = 0; b < element.builtins.size(); ++b) {
            if (builtin_done[b]) { continue; }
            auto mode = builtin_mode(element.builtins[b], bound);
            if (!mode) { continue; }
            if (!apply_builtin(element.builtins[b], *mode, vals)) { return; }
            mark_bound(element.builtins[b], *mode, bound);
            builtin_done[b] = true;
            progress = true;
        }
    }
    if (next_atom == element.atoms.size()) {
        if (std::find(builtin_done.begin(), builtin_done.end(), false) != builtin_done.end()) {
            throw EvaluationError("unsafe aggregate element");
        }
        Tuple t;
        for (auto const &term : element.terms) { t.push_back(term_value(term, vals)); }
        out.insert(std::move(t));
        return;
    }
    auto const &atom = element.atoms[next_atom];
    for (auto id : true_atoms(atom.pred)) {
        GroundAtom const &g = atom_of(id);
        Values v = vals;
        Flags f = bound;
        bool ok = true;
        for (std::size_t i = 0; i < atom.terms.size() && ok; ++i) {
            auto const &t = atom.terms[i];
            if (!t.var) {
                ok = t.constant == g.args[i];
            } else if (f[t.slot]) {
                ok = v[t.slot] == g.args[i];
            } else {
                v[t.slot] = g.args[i];
                f[t.slot] = 1;
            }
        }
        if (ok) {
            element_tuples(element, next_atom + 1, builtin_done, std::move(v), std::move(f), true_atoms, atom_of, out);
        }
    }
}

template <class TrueAtoms, class AtomOf>
std::int64_t aggregate_value(CAggregate const &agg, Values const &vals, Flags const &bound, TrueAtoms const &true_atoms,
                             AtomOf const &atom_of) {
    std::set<Tuple> tuples;
    for (auto const &e : agg.elements) {
        element_tuples(e, 0, std::vector<bool>(e.builtins.size(), false), vals, bound, true_atoms, atom_of, tuples);
    }
    if (agg.function == AggregateFunction::Count) { return static_cast<std::int64_t>(tuples.size()); }
    std::int64_t sum = 0;
    for (auto const &t : tuples) {
        if (t.empty() || !t[0].is_integer()) { throw EvaluationError("#sum over a non-integer term"); }
        if (__builtin_add_overflow(sum, t[0].as_integer(), &sum)) { throw EvaluationError("integer overflow"); }
    }
    return sum;
}

} // namespace

struct Evaluator::Impl {
    Options options;
    std::vector<CRule> rules;
    std::vector<Pred> preds;
    std::unordered_map<PredicateKey, std::uint32_t, PredicateKeyHash> pred_ids;
    std::uint32_t strata = 1;

    std::vector<GroundAtom> atom_values;
    std::vector<AtomInfo> atoms;
    std::unordered_map<GroundAtom, std::uint32_t, GroundAtomHash> lookup;
    std::uint32_t next_seq = 0;
    std::vector<std::uint32_t> queued;

    std::vector<Instance> instances;
    std::vector<std::uint32_t> refs;
    std::vector<Value> bindings;
    std::vector<std::uint32_t> zero_positive;
    std::vector<std::string> errors;

    // Per-shot state.
    std::uint32_t epoch = 0;
    std::vector<std::vector<std::uint32_t>> pending;
    std::vector<std::uint32_t> true_list;
    std::vector<std::uint32_t> supported_list;
    ShotStats stats;

    std::uint32_t pred_id(PredicateKey const &key) {
        auto [it, inserted] = pred_ids.emplace(key, static_cast<std::uint32_t>(preds.size()));
        if (inserted) {
            Pred p;
            p.key = key;
            p.index.resize(key.arity);
            preds.push_back(std::move(p));
        }
        return it->second;
    }

    CAtom compile_atom(PredicateAtom const &a, Compiler &c) {
        CAtom out;
        out.pred = pred_id(a.key());
        for (auto const &t : a.terms) { out.terms.push_back(c.term(t)); }
        return out;
    }

    void compile(Program const &flat) {
        for (auto const &rule : flat.rules) {
            Compiler c;
            CRule r;
            r.temp = rule.temp;
            for (auto const &lit : rule.body) {
                if (auto const *s = std::get_if<StreamingLiteral>(&lit)) {
                    if (!s->degenerate()) {
                        throw std::invalid_argument("evaluator requires a flat program: " + to_string(rule));
                    }
                    (s->negative ? r.neg : r.pos).push_back(compile_atom(s->atom, c));
                } else if (auto const *b = std::get_if<BuiltinAtom>(&lit)) {
                    r.builtins.push_back(c.builtin(*b));
                } else {
                    auto const &a = std::get<AggregateLiteral>(lit);
                    CAggregate agg;
                    agg.function = a.function;
                    agg.op = a.op;
                    agg.guard = c.term(a.guard);
                    for (auto const &e : a.elements) {
                        CElement ce;
                        for (auto const &t : e.terms) { ce.terms.push_back(c.term(t)); }
                        for (auto const &cond : e.condition) {
                            if (auto const *p = std::get_if<PredicateAtom>(&cond)) {
                                ce.atoms.push_back(compile_atom(*p, c));
                            } else {
                                ce.builtins.push_back(c.builtin(std::get<BuiltinAtom>(cond)));
                            }
                        }
                        agg.elements.push_back(std::move(ce));
                    }
                    r.aggregates.push_back(std::move(agg));
                }
            }
            r.head = compile_atom(rule.head, c);
            r.vars = c.size();
            rules.push_back(std::move(r));
        }
        // Aggregate globals: element variables that occur outside the aggregate.
        for (std::size_t ri = 0; ri < rules.size(); ++ri) {
            auto &r = rules[ri];
            for (std::size_t ai = 0; ai < r.aggregates.size(); ++ai) {
                std::vector<std::uint32_t> outside = atom_slots(r.head);
                for (auto const &a : r.pos) {
                    for (auto s : atom_slots(a)) { term_slots({true, s, {}}, outside); }
                }
                for (auto const &a : r.neg) {
                    for (auto s : atom_slots(a)) { term_slots({true, s, {}}, outside); }
                }
                for (auto const &b : r.builtins) {
                    expr_slots(b.lhs, outside);
                    expr_slots(b.rhs, outside);
                }
                for (std::size_t other = 0; other < r.aggregates.size(); ++other) {
                    if (other == ai) { continue; }
                    term_slots(r.aggregates[other].guard, outside);
                    for (auto const &e : r.aggregates[other].elements) {
                        for (auto const &t : e.terms) { term_slots(t, outside); }
                        for (auto const &a : e.atoms) {
                            for (auto s : atom_slots(a)) { term_slots({true, s, {}}, outside); }
                        }
                    }
                }
                std::vector<std::uint32_t> inside;
                for (auto const &e : r.aggregates[ai].elements) {
                    for (auto const &t : e.terms) { term_slots(t, inside); }
                    for (auto const &a : e.atoms) {
                        for (auto s : atom_slots(a)) { term_slots({true, s, {}}, inside); }
                    }
                    for (auto const &b : e.builtins) {
                        expr_slots(b.lhs, inside);
                        expr_slots(b.rhs, inside);
                    }
                }
                for (auto s : inside) {
                    if (std::find(outside.begin(), outside.end(), s) != outside.end()) {
                        r.aggregates[ai].globals.push_back(s);
                    }
                }
            }
            plan_rule(r);
        }
    }

    void plan_rule(CRule &r) {
        // Variables available at grounding time: positive atoms plus
        // assignments that do not depend on aggregate results.
        Flags bound(r.vars, 0);
        for (auto const &a : r.pos) {
            for (auto s : atom_slots(a)) { bound[s] = 1; }
        }
        r.builtin_at_ground.assign(r.builtins.size(), false);
        bool progress = true;
        while (progress) {
            progress = false;
            for (std::size_t b = 0; b < r.builtins.size(); ++b) {
                if (r.builtin_at_ground[b]) { continue; }
                if (auto mode = builtin_mode(r.builtins[b], bound)) {
                    mark_bound(r.builtins[b], *mode, bound);
                    r.builtin_at_ground[b] = true;
                    progress = true;
                }
            }
        }
        r.ground_bound = bound;
        for (auto const &a : r.neg) { r.neg_at_ground.push_back(all_bound(atom_slots(a), bound)); }
        if (!r.deferred() &&
            (std::find(r.builtin_at_ground.begin(), r.builtin_at_ground.end(), false) != r.builtin_at_ground.end() ||
             std::find(r.neg_at_ground.begin(), r.neg_at_ground.end(), false) != r.neg_at_ground.end() ||
             !all_bound(atom_slots(r.head), bound))) {
            throw std::invalid_argument("unsafe rule in flat program");
        }

        std::size_t k = r.pos.size();
        for (std::size_t delta = 0; delta < std::max<std::size_t>(k, 1); ++delta) {
            JoinPlan plan;
            Flags b(r.vars, 0);
            std::vector<bool> scheduled(r.builtins.size(), false);
            auto schedule = [&](std::vector<BuiltinAction> &into) {
                bool more = true;
                while (more) {
                    more = false;
                    for (std::size_t i = 0; i < r.builtins.size(); ++i) {
                        if (scheduled[i] || !r.builtin_at_ground[i]) { continue; }
                        if (auto mode = builtin_mode(r.builtins[i], b)) {
                            into.push_back({static_cast<std::uint32_t>(i), *mode});
                            mark_bound(r.builtins[i], *mode, b);
                            scheduled[i] = true;
                            more = true;
                        }
                    }
                }
            };
            schedule(plan.before);
            std::vector<bool> used(k, false);
            for (std::size_t step = 0; step < k; ++step) {
                std::size_t pick = delta;
                if (step > 0) {
                    int best = -1;
                    for (std::size_t p = 0; p < k; ++p) {
                        if (used[p]) { continue; }
                        int score = 0;
                        for (auto const &t : r.pos[p].terms) { score += (!t.var || b[t.slot]) ? 1 : 0; }
                        if (score > best) {
                            best = score;
                            pick = p;
                        }
                    }
                }
                used[pick] = true;
                JoinStep js;
                js.position = static_cast<std::uint32_t>(pick);
                js.pred = r.pos[pick].pred;
                Flags before = b;
                for (auto const &t : r.pos[pick].terms) {
                    TermOp op;
                    if (!t.var) {
                        op.kind = TermOp::Const;
                        op.constant = t.constant;
                    } else if (b[t.slot]) {
                        op.kind = TermOp::Check;
                        op.slot = t.slot;
                        op.same_atom = before[t.slot] == 0;
                    } else {
                        op.kind = TermOp::Bind;
                        op.slot = t.slot;
                        b[t.slot] = 1;
                    }
                    js.ops.push_back(op);
                }
                schedule(js.after);
                plan.steps.push_back(std::move(js));
            }
            r.plans.push_back(std::move(plan));
        }
    }

    void compute_strata(Program const &flat) {
        analysis::check_stratifiable(flat);
        auto sdg = analysis::build_sdg(flat);
        auto scg = analysis::build_scg(sdg);
        std::vector<std::uint32_t> level(scg.components.size(), 0);
        bool changed = true;
        while (changed) {
            changed = false;
            for (auto const &arc : sdg.arcs) {
                auto a = scg.component_of[arc.from];
                auto b = scg.component_of[arc.to];
                if (a == b) { continue; }
                auto need = level[a] + (arc.non_harmless ? 1U : 0U);
                if (level[b] < need) {
                    level[b] = need;
                    changed = true;
                }
            }
        }
        strata = 1;
        for (std::size_t v = 0; v < sdg.nodes.size(); ++v) {
            auto s = level[scg.component_of[v]];
            preds[pred_id(sdg.nodes[v])].stratum = s;
            strata = std::max(strata, s + 1);
        }
        for (auto &r : rules) { r.stratum = preds[r.head.pred].stratum; }
    }

    std::uint32_t intern(GroundAtom atom) {
        auto it = lookup.find(atom);
        if (it != lookup.end()) { return it->second; }
        auto id = static_cast<std::uint32_t>(atoms.size());
        AtomInfo info;
        info.pred = pred_id(atom.key());
        atoms.push_back(std::move(info));
        lookup.emplace(atom, id);
        atom_values.push_back(std::move(atom));
        return id;
    }

    void queue_possible(std::uint32_t id) {
        auto &a = atoms[id];
        if (a.seq != none || a.queued) { return; }
        a.queued = true;
        queued.push_back(id);
    }

    void flush_possible() {
        for (auto id : queued) {
            auto &a = atoms[id];
            a.queued = false;
            a.seq = next_seq++;
            auto &p = preds[a.pred];
            p.possible.push_back(id);
            auto const &args = atom_values[id].args;
            for (std::size_t i = 0; i < args.size(); ++i) { p.index[i][args[i]].push_back(id); }
        }
        queued.clear();
    }

    bool is_true(std::uint32_t id) const { return atoms[id].true_epoch == epoch; }

    GroundAtom build(CAtom const &a, Values const &vals) const {
        GroundAtom g;
        g.predicate = preds[a.pred].key.name;
        g.args.reserve(a.terms.size());
        for (auto const &t : a.terms) { g.args.push_back(term_value(t, vals)); }
        return g;
    }

    void check_cap() const {
        if (options.max_ground_rules != 0 && instances.size() >= options.max_ground_rules) {
            throw ResourceError("ground rule cap of " + std::to_string(options.max_ground_rules) + " exceeded");
        }
    }

    void add_instance(Instance inst, std::vector<std::uint32_t> const &chosen) {
        auto id = static_cast<std::uint32_t>(instances.size());
        inst.epoch = epoch;
        for (auto a : chosen) {
            atoms[a].occurrences.push_back(id);
            if (!is_true(a)) { ++inst.counter; }
        }
        auto stratum = rules[inst.rule].stratum;
        instances.push_back(inst);
        ++stats.ground_rules_new;
        if (chosen.empty()) { zero_positive.push_back(id); }
        if (inst.counter == 0) { pending[stratum].push_back(id); }
    }

    void emit_error(std::uint32_t rule_index, std::vector<std::uint32_t> const &chosen, std::string message) {
        check_cap();
        Instance inst;
        inst.rule = rule_index;
        inst.pos_off = static_cast<std::uint32_t>(refs.size());
        inst.pos_n = static_cast<std::uint32_t>(chosen.size());
        refs.insert(refs.end(), chosen.begin(), chosen.end());
        inst.neg_off = static_cast<std::uint32_t>(refs.size());
        inst.error = static_cast<std::uint32_t>(errors.size());
        errors.push_back(std::move(message));
        add_instance(inst, chosen);
    }

    void emit(std::uint32_t rule_index, Values const &vals, std::vector<std::uint32_t> const &chosen) {
        auto &r = rules[rule_index];
        check_cap();
        Instance inst;
        inst.rule = rule_index;
        inst.pos_off = static_cast<std::uint32_t>(refs.size());
        inst.pos_n = static_cast<std::uint32_t>(chosen.size());
        refs.insert(refs.end(), chosen.begin(), chosen.end());
        inst.neg_off = static_cast<std::uint32_t>(refs.size());
        for (std::size_t i = 0; i < r.neg.size(); ++i) {
            if (r.neg_at_ground[i]) {
                auto id = intern(build(r.neg[i], vals));
                refs.push_back(id);
                ++inst.neg_n;
            }
        }
        if (r.deferred()) {
            inst.bind_off = static_cast<std::uint32_t>(bindings.size());
            bindings.insert(bindings.end(), vals.begin(), vals.end());
        } else {
            inst.head = intern(build(r.head, vals));
            queue_possible(inst.head);
        }
        add_instance(inst, chosen);
    }

    void join(std::uint32_t rule_index, JoinPlan const &plan, std::size_t step, std::uint32_t delta,
              std::uint32_t watermark, std::uint32_t now, Values &vals, std::vector<std::uint32_t> &chosen) {
        auto &r = rules[rule_index];
        if (step == plan.steps.size()) {
            emit(rule_index, vals, chosen);
            return;
        }
        auto const &js = plan.steps[step];
        std::uint32_t lo = 0;
        std::uint32_t hi = now;
        if (js.position == delta) {
            lo = watermark;
        } else if (js.position < delta) {
            hi = watermark;
        }
        if (lo >= hi) { return; }
        auto const &pred = preds[js.pred];
        std::vector<std::uint32_t> const *list = &pred.possible;
        for (std::size_t i = 0; i < js.ops.size(); ++i) {
            auto const &op = js.ops[i];
            if (op.kind == TermOp::Bind || op.same_atom) { continue; }
            Value const &v = op.kind == TermOp::Const ? op.constant : vals[op.slot];
            auto it = pred.index[i].find(v);
            if (it == pred.index[i].end()) { return; }
            if (it->second.size() < list->size()) { list = &it->second; }
        }
        auto begin = std::lower_bound(list->begin(), list->end(), lo,
                                      [&](std::uint32_t id, std::uint32_t seq) { return atoms[id].seq < seq; });
        for (auto it = begin; it != list->end(); ++it) {
            auto id = *it;
            if (atoms[id].seq >= hi) { break; }
            auto const &args = atom_values[id].args;
            bool ok = true;
            for (std::size_t i = 0; i < js.ops.size() && ok; ++i) {
                auto const &op = js.ops[i];
                switch (op.kind) {
                    case TermOp::Const: ok = op.constant == args[i]; break;
                    case TermOp::Check: ok = vals[op.slot] == args[i]; break;
                    case TermOp::Bind: vals[op.slot] = args[i]; break;
                }
            }
            if (!ok) { continue; }
            chosen[js.position] = id;
            try {
                for (auto const &action : js.after) {
                    if (!apply_builtin(r.builtins[action.builtin], action.mode, vals)) {
                        ok = false;
                        break;
                    }
                }
            } catch (EvaluationError const &e) {
                std::vector<std::uint32_t> prefix;
                for (std::size_t s = 0; s <= step; ++s) { prefix.push_back(chosen[plan.steps[s].position]); }
                emit_error(rule_index, prefix, e.what());
                continue;
            }
            if (!ok) { continue; }
            join(rule_index, plan, step + 1, delta, watermark, now, vals, chosen);
        }
    }

    void ground_rule(std::uint32_t rule_index, std::uint32_t now) {
        auto &r = rules[rule_index];
        Values vals(r.vars);
        std::vector<std::uint32_t> chosen(r.pos.size(), none);
        auto run = [&](std::size_t delta) {
            auto const &plan = r.plans[delta];
            try {
                for (auto const &action : plan.before) {
                    if (!apply_builtin(r.builtins[action.builtin], action.mode, vals)) { return; }
                }
            } catch (EvaluationError const &e) {
                if (!r.before_error) {
                    r.before_error = true;
                    emit_error(rule_index, {}, e.what());
                }
                return;
            }
            join(rule_index, plan, 0, static_cast<std::uint32_t>(delta), r.watermark, now, vals, chosen);
        };
        if (r.pos.empty()) {
            if (!r.grounded_once) {
                r.grounded_once = true;
                run(0);
            }
            return;
        }
        if (r.watermark >= now) { return; }
        for (std::size_t delta = 0; delta < r.pos.size(); ++delta) { run(delta); }
        r.watermark = now;
    }

    void ground_all() {
        flush_possible();
        while (true) {
            auto now = next_seq;
            for (std::uint32_t i = 0; i < rules.size(); ++i) {
                ground_rule(i, now);
                flush_possible();
            }
            if (next_seq == now) { break; }
        }
    }

    void set_true(std::uint32_t id) {
        auto &a = atoms[id];
        if (a.true_epoch == epoch) { return; }
        a.true_epoch = epoch;
        true_list.push_back(id);
        auto &p = preds[a.pred];
        if (p.true_epoch != epoch) {
            p.true_epoch = epoch;
            p.true_atoms.clear();
        }
        p.true_atoms.push_back(id);
        for (auto inst_id : a.occurrences) {
            auto &inst = instances[inst_id];
            if (inst.epoch != epoch) {
                inst.epoch = epoch;
                inst.counter = inst.pos_n;
            }
            if (--inst.counter == 0) { pending[rules[inst.rule].stratum].push_back(inst_id); }
        }
    }

    std::vector<std::uint32_t> const &true_atoms_of(std::uint32_t pred) const {
        static std::vector<std::uint32_t> const empty;
        auto const &p = preds[pred];
        return p.true_epoch == epoch ? p.true_atoms : empty;
    }

    void fire(std::uint32_t inst_id) {
        Instance const inst = instances[inst_id];
        auto const &r = rules[inst.rule];
        if (inst.error != none) { throw EvaluationError(errors[inst.error]); }
        for (std::uint32_t i = 0; i < inst.neg_n; ++i) {
            if (is_true(refs[inst.neg_off + i])) { return; }
        }
        std::uint32_t head = inst.head;
        if (r.deferred()) {
            Values vals(bindings.begin() + inst.bind_off, bindings.begin() + inst.bind_off + r.vars);
            Flags bound = r.ground_bound;
            std::vector<bool> builtin_done = r.builtin_at_ground;
            std::vector<bool> agg_done(r.aggregates.size(), false);
            auto true_atoms = [&](std::uint32_t pred) -> std::vector<std::uint32_t> const & { return true_atoms_of(pred); };
            auto atom_of = [&](std::uint32_t id) -> GroundAtom const & { return atom_values[id]; };
            bool progress = true;
            while (progress) {
                progress = false;
                for (std::size_t b = 0; b < r.builtins.size(); ++b) {
                    if (builtin_done[b]) { continue; }
                    auto mode = builtin_mode(r.builtins[b], bound);
                    if (!mode) { continue; }
                    if (!apply_builtin(r.builtins[b], *mode, vals)) { return; }
                    mark_bound(r.builtins[b], *mode, bound);
                    builtin_done[b] = true;
                    progress = true;
                }
                for (std::size_t a = 0; a < r.aggregates.size(); ++a) {
                    auto const &agg = r.aggregates[a];
                    if (agg_done[a] || !all_bound(agg.globals, bound)) { continue; }
                    Value result(aggregate_value(agg, vals, bound, true_atoms, atom_of));
                    if (term_bound(agg.guard, bound)) {
                        if (!compare(result, agg.op, term_value(agg.guard, vals))) { return; }
                    } else if (agg.op == CompareOp::Eq) {
                        vals[agg.guard.slot] = result;
                        bound[agg.guard.slot] = 1;
                    } else {
                        continue;
                    }
                    agg_done[a] = true;
                    progress = true;
                }
            }
            if (std::find(builtin_done.begin(), builtin_done.end(), false) != builtin_done.end() ||
                std::find(agg_done.begin(), agg_done.end(), false) != agg_done.end()) {
                throw EvaluationError("cannot evaluate aggregate rule: unbound variables");
            }
            for (std::size_t i = 0; i < r.neg.size(); ++i) {
                if (r.neg_at_ground[i]) { continue; }
                auto it = lookup.find(build(r.neg[i], vals));
                if (it != lookup.end() && is_true(it->second)) { return; }
            }
            head = intern(build(r.head, vals));
            if (atoms[head].seq == none) { queue_possible(head); }
        }
        ++stats.derivations;
        if (!r.temp && atoms[head].supported_epoch != epoch) {
            atoms[head].supported_epoch = epoch;
            supported_list.push_back(head);
        }
        set_true(head);
    }

    ShotResult shot(std::vector<GroundAtom> const &facts) {
        ++epoch;
        stats = {};
        pending.assign(strata, {});
        true_list.clear();
        supported_list.clear();
        queued.clear();
        for (auto id : zero_positive) {
            instances[id].epoch = epoch;
            instances[id].counter = 0;
            pending[rules[instances[id].rule].stratum].push_back(id);
        }
        std::vector<std::uint32_t> fact_ids;
        fact_ids.reserve(facts.size());
        for (auto const &f : facts) {
            auto id = intern(f);
            queue_possible(id);
            fact_ids.push_back(id);
        }
        ground_all();
        for (auto id : fact_ids) { set_true(id); }
        for (std::uint32_t s = 0; s < strata; ++s) {
            while (true) {
                for (std::size_t i = 0; i < pending[s].size(); ++i) { fire(pending[s][i]); }
                pending[s].clear();
                if (queued.empty()) { break; }
                ground_all();
                for (std::uint32_t lower = 0; lower < s; ++lower) {
                    if (!pending[lower].empty()) { throw std::logic_error("new instance below the current stratum"); }
                }
                if (pending[s].empty()) { break; }
            }
        }
        ShotResult result;
        for (auto id : true_list) { result.answer.insert(atom_values[id]); }
        for (auto id : supported_list) { result.supported.insert(atom_values[id]); }
        stats.ground_rules_total = instances.size();
        result.stats = stats;
        return result;
    }
};

Evaluator::Evaluator(Program const &flat, Options options) : impl_(std::make_unique<Impl>()) {
    impl_->options = options;
    impl_->compile(flat);
    impl_->compute_strata(flat);
}

Evaluator::~Evaluator() = default;
Evaluator::Evaluator(Evaluator &&) noexcept = default;
Evaluator &Evaluator::operator=(Evaluator &&) noexcept = default;

ShotResult Evaluator::shot(std::vector<GroundAtom> const &facts) {
    try {
        return impl_->shot(facts);
    } catch (...) {
        // Leave the store consistent: drop half-processed per-shot state.
        for (auto id : impl_->queued) { impl_->atoms[id].queued = false; }
        impl_->queued.clear();
        throw;
    }
}

std::size_t Evaluator::strata_count() const { return impl_->strata; }
std::size_t Evaluator::ground_rules_total() const { return impl_->instances.size(); }

namespace {

Compiler binding_compiler(Binding const &binding, Values &vals, Flags &bound) {
    Compiler c;
    for (auto const &[name, value] : binding) {
        auto s = c.slot(name);
        vals.resize(s + 1);
        bound.resize(s + 1, 0);
        vals[s] = value;
        bound[s] = 1;
    }
    return c;
}

void export_binding(Compiler &c, std::vector<std::string> const &names, Values const &vals, Flags const &bound,
                    Binding &binding) {
    for (auto const &n : names) {
        auto s = c.slot(n);
        if (s < bound.size() && bound[s]) { binding[n] = vals[s]; }
    }
}

} // namespace

std::optional<bool> eval_builtin(BuiltinAtom const &builtin, Binding &binding) {
    Values vals;
    Flags bound;
    auto c = binding_compiler(binding, vals, bound);
    auto b = c.builtin(builtin);
    vals.resize(c.size());
    bound.resize(c.size(), 0);
    auto mode = builtin_mode(b, bound);
    if (!mode) { return std::nullopt; }
    bool ok = apply_builtin(b, *mode, vals);
    mark_bound(b, *mode, bound);
    std::vector<std::string> names;
    collect_variables(builtin, names);
    export_binding(c, names, vals, bound, binding);
    return ok;
}

std::optional<bool> eval_aggregate(AggregateLiteral const &aggregate, Binding &binding, AtomSet const &interpretation) {
    Values vals;
    Flags bound;
    auto c = binding_compiler(binding, vals, bound);
    CAggregate agg;
    agg.function = aggregate.function;
    agg.op = aggregate.op;
    agg.guard = c.term(aggregate.guard);
    std::vector<GroundAtom> atoms(interpretation.begin(), interpretation.end());
    std::unordered_map<PredicateKey, std::uint32_t, PredicateKeyHash> ids;
    std::vector<std::vector<std::uint32_t>> by_pred;
    auto pred = [&](PredicateKey const &k) {
        auto [it, inserted] = ids.emplace(k, static_cast<std::uint32_t>(by_pred.size()));
        if (inserted) { by_pred.emplace_back(); }
        return it->second;
    };
    for (std::uint32_t i = 0; i < atoms.size(); ++i) { by_pred[pred(atoms[i].key())].push_back(i); }
    for (auto const &e : aggregate.elements) {
        CElement ce;
        for (auto const &t : e.terms) { ce.terms.push_back(c.term(t)); }
        for (auto const &cond : e.condition) {
            if (auto const *p = std::get_if<PredicateAtom>(&cond)) {
                CAtom a;
                a.pred = pred(p->key());
                for (auto const &t : p->terms) { a.terms.push_back(c.term(t)); }
                ce.atoms.push_back(std::move(a));
            } else {
                ce.builtins.push_back(c.builtin(std::get<BuiltinAtom>(cond)));
            }
        }
        agg.elements.push_back(std::move(ce));
    }
    vals.resize(c.size());
    bound.resize(c.size(), 0);
    auto true_atoms = [&](std::uint32_t p) -> std::vector<std::uint32_t> const & { return by_pred[p]; };
    auto atom_of = [&](std::uint32_t id) -> GroundAtom const & { return atoms[id]; };
    Value result(aggregate_value(agg, vals, bound, true_atoms, atom_of));
    if (term_bound(agg.guard, bound)) { return compare(result, agg.op, term_value(agg.guard, vals)); }
    if (agg.op != CompareOp::Eq) { return std::nullopt; }
    binding[aggregate.guard.name()] = result;
    return true;
}

} // namespace windlog::ground
