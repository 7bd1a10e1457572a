#include <windlog/lang.hpp>

#include <algorithm>
#include <limits>

namespace windlog::lang {

namespace {

bool contains(std::vector<std::string> const &vars, std::string const &name) {
    return std::find(vars.begin(), vars.end(), name) != vars.end();
}

bool all_bound(std::vector<std::string> const &vars, std::vector<std::string> const &bound) {
    return std::all_of(vars.begin(), vars.end(), [&](auto const &v) { return contains(bound, v); });
}

template <class T>
std::vector<std::string> vars_of(T const &x) {
    std::vector<std::string> out;
    collect_variables(x, out);
    return out;
}

// `V = expr` (either orientation) with expr bound binds V.
std::optional<std::string> assigned_variable(BuiltinAtom const &b, std::vector<std::string> const &bound) {
    if (b.op != CompareOp::Eq) { return std::nullopt; }
    auto try_side = [&](Expr const &lhs, Expr const &rhs) -> std::optional<std::string> {
        if (lhs.is_term() && lhs.lhs.is_variable() && !contains(bound, lhs.lhs.name()) && all_bound(vars_of(rhs), bound)) {
            return lhs.lhs.name();
        }
        return std::nullopt;
    };
    if (auto v = try_side(b.lhs, b.rhs)) { return v; }
    return try_side(b.rhs, b.lhs);
}

// Variables of an aggregate that are not local to its elements: those also
// occurring elsewhere in the rule.
std::vector<std::string> rule_variables_outside(Rule const &rule, std::size_t skip) {
    std::vector<std::string> out;
    collect_variables(rule.head, out);
    for (std::size_t i = 0; i < rule.body.size(); ++i) {
        if (i == skip) { continue; }
        std::visit([&](auto const &lit) { collect_variables(lit, out); }, rule.body[i]);
    }
    return out;
}

void check_rule(Rule const &rule, std::size_t index, std::vector<SafetyViolation> &out) {
    std::vector<std::string> bound;
    for (auto const &lit : rule.body) {
        if (auto const *s = std::get_if<StreamingLiteral>(&lit); s && !s->negative) { collect_variables(*s, bound); }
    }
    // Assignments and `= V` aggregate guards bind further variables.
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < rule.body.size(); ++i) {
            auto const &lit = rule.body[i];
            if (auto const *b = std::get_if<BuiltinAtom>(&lit)) {
                if (auto v = assigned_variable(*b, bound)) {
                    bound.push_back(*v);
                    changed = true;
                }
            } else if (auto const *a = std::get_if<AggregateLiteral>(&lit)) {
                if (a->op == CompareOp::Eq && a->guard.is_variable() && !contains(bound, a->guard.name())) {
                    auto outside = rule_variables_outside(rule, i);
                    std::vector<std::string> global;
                    for (auto const &element : a->elements) {
                        for (auto const &t : element.terms) { collect_variables(t, global); }
                        for (auto const &c : element.condition) {
                            std::visit([&](auto const &x) { collect_variables(x, global); }, c);
                        }
                    }
                    std::erase_if(global, [&](auto const &v) { return !contains(outside, v) || v == a->guard.name(); });
                    if (all_bound(global, bound)) {
                        bound.push_back(a->guard.name());
                        changed = true;
                    }
                }
            }
        }
    }

    auto report = [&](std::string const &var, Location loc) {
        for (auto const &v : out) {
            if (v.rule == index && v.variable == var) { return; }
        }
        out.push_back({index, var, loc});
    };
    auto require = [&](std::vector<std::string> const &vars, Location loc) {
        for (auto const &v : vars) {
            if (!contains(bound, v)) { report(v, loc); }
        }
    };

    require(vars_of(rule.head), rule.head.loc);
    for (std::size_t i = 0; i < rule.body.size(); ++i) {
        auto const &lit = rule.body[i];
        if (auto const *s = std::get_if<StreamingLiteral>(&lit)) {
            if (s->negative) { require(vars_of(*s), s->atom.loc); }
        } else if (auto const *b = std::get_if<BuiltinAtom>(&lit)) {
            require(vars_of(*b), b->loc);
        } else if (auto const *a = std::get_if<AggregateLiteral>(&lit)) {
            require(vars_of(a->guard), a->loc);
            // Element variables: global ones must be bound in the rule, local
            // ones by a predicate atom of the element's own condition.
            auto outside = rule_variables_outside(rule, i);
            for (auto const &element : a->elements) {
                std::vector<std::string> local_bound = bound;
                for (auto const &c : element.condition) {
                    if (auto const *p = std::get_if<PredicateAtom>(&c)) { collect_variables(*p, local_bound); }
                }
                bool grew = true;
                while (grew) {
                    grew = false;
                    for (auto const &c : element.condition) {
                        if (auto const *b = std::get_if<BuiltinAtom>(&c)) {
                            if (auto v = assigned_variable(*b, local_bound)) {
                                local_bound.push_back(*v);
                                grew = true;
                            }
                        }
                    }
                }
                std::vector<std::string> needed;
                for (auto const &t : element.terms) { collect_variables(t, needed); }
                for (auto const &c : element.condition) {
                    if (auto const *b = std::get_if<BuiltinAtom>(&c)) { collect_variables(*b, needed); }
                }
                for (auto const &v : needed) {
                    if (contains(outside, v) ? !contains(bound, v) : !contains(local_bound, v)) { report(v, a->loc); }
                }
            }
        }
    }
}

} // namespace

Program desugar(Program const &program) {
    Program out = program;
    for (auto &rule : out.rules) {
        for (auto &lit : rule.body) {
            auto *s = std::get_if<StreamingLiteral>(&lit);
            if (s == nullptr) { continue; }
            if (s->modality == Modality::AtMost) {
                auto c = s->count.value().as_integer();
                s->modality = Modality::AtLeast;
                s->count = Term::integer(c + 1);
                s->negative = !s->negative;
            }
            s->shorthand = Shorthand::None;
            s->window.interval = false;
        }
    }
    return out;
}

std::vector<SafetyViolation> safety_violations(Program const &program) {
    std::vector<SafetyViolation> out;
    for (std::size_t i = 0; i < program.rules.size(); ++i) { check_rule(program.rules[i], i, out); }
    return out;
}

void check_safety(Program const &program) {
    auto violations = safety_violations(program);
    if (!violations.empty()) { throw SafetyError(std::move(violations)); }
}

Program load_program(std::string_view source) {
    auto program = desugar(parse_program(source));
    check_safety(program);
    return program;
}

} // namespace windlog::lang
