#include <windlog/ast.hpp>

#include <algorithm>
#include <sstream>

namespace windlog {

namespace {

void add_unique(std::string const &name, std::vector<std::string> &out) {
    if (std::find(out.begin(), out.end(), name) == out.end()) { out.push_back(name); }
}

} // namespace

ParseError::ParseError(std::vector<Diagnostic> diagnostics)
    : Error(ExitCode::Parse,
            [&] {
                std::ostringstream msg;
                for (std::size_t i = 0; i < diagnostics.size(); ++i) {
                    if (i > 0) { msg << '\n'; }
                    msg << diagnostics[i].loc.line << ':' << diagnostics[i].loc.column << ": error: "
                        << diagnostics[i].message;
                }
                return msg.str();
            }()),
      diagnostics_(std::move(diagnostics)) { }

SafetyError::SafetyError(std::vector<SafetyViolation> violations)
    : Error(ExitCode::Safety,
            [&] {
                std::ostringstream msg;
                for (std::size_t i = 0; i < violations.size(); ++i) {
                    if (i > 0) { msg << '\n'; }
                    msg << violations[i].loc.line << ':' << violations[i].loc.column << ": error: unsafe variable '"
                        << violations[i].variable << "' in rule " << violations[i].rule;
                }
                return msg.str();
            }()),
      violations_(std::move(violations)) { }

StratificationError::StratificationError(std::vector<std::string> cycle)
    : Error(ExitCode::Stratification,
            [&] {
                std::ostringstream msg;
                msg << "program is not stratified: cycle through a non-harmless literal:";
                for (auto const &p : cycle) { msg << ' ' << p; }
                return msg.str();
            }()),
      cycle_(std::move(cycle)) { }

WindowSet WindowSet::explicit_set(std::vector<std::uint32_t> offsets) {
    std::sort(offsets.begin(), offsets.end());
    offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());
    return WindowSet{std::move(offsets), false};
}

WindowSet WindowSet::upto(std::uint32_t w) {
    WindowSet set;
    set.interval = true;
    for (std::uint32_t d = 0; d <= w; ++d) { set.offsets.push_back(d); }
    return set;
}

void collect_variables(Term const &term, std::vector<std::string> &out) {
    if (term.is_variable()) { add_unique(term.name(), out); }
}

void collect_variables(Expr const &expr, std::vector<std::string> &out) {
    collect_variables(expr.lhs, out);
    if (expr.op) { collect_variables(expr.rhs, out); }
}

void collect_variables(PredicateAtom const &atom, std::vector<std::string> &out) {
    for (auto const &t : atom.terms) { collect_variables(t, out); }
}

void collect_variables(BuiltinAtom const &atom, std::vector<std::string> &out) {
    collect_variables(atom.lhs, out);
    collect_variables(atom.rhs, out);
}

void collect_variables(AggregateLiteral const &agg, std::vector<std::string> &out) {
    for (auto const &element : agg.elements) {
        for (auto const &t : element.terms) { collect_variables(t, out); }
        for (auto const &c : element.condition) {
            std::visit([&](auto const &x) { collect_variables(x, out); }, c);
        }
    }
    collect_variables(agg.guard, out);
}

void collect_variables(StreamingLiteral const &lit, std::vector<std::string> &out) {
    collect_variables(lit.atom, out);
    if (lit.modality == Modality::Count) { collect_variables(lit.count, out); }
}

std::string to_string(Term const &term) {
    if (term.is_variable()) { return term.name(); }
    std::ostringstream out;
    out << term.value();
    return out.str();
}

std::string to_string(Expr const &expr) {
    if (!expr.op) { return to_string(expr.lhs); }
    char const *ops[] = {"+", "-", "*", "/"};
    return to_string(expr.lhs) + ops[static_cast<int>(*expr.op)] + to_string(expr.rhs);
}

std::string to_string(CompareOp op) {
    switch (op) {
        case CompareOp::Eq: return "=";
        case CompareOp::Ne: return "!=";
        case CompareOp::Lt: return "<";
        case CompareOp::Le: return "<=";
        case CompareOp::Gt: return ">";
        case CompareOp::Ge: return ">=";
    }
    return "?";
}

std::string to_string(PredicateAtom const &atom) {
    std::string out(atom.predicate.str());
    if (!atom.terms.empty()) {
        out += '(';
        for (std::size_t i = 0; i < atom.terms.size(); ++i) {
            if (i > 0) { out += ','; }
            out += to_string(atom.terms[i]);
        }
        out += ')';
    }
    return out;
}

std::string to_string(WindowSet const &window) {
    if (window.interval) { return "[" + std::to_string(window.max()) + "]"; }
    std::string out = "{";
    for (std::size_t i = 0; i < window.offsets.size(); ++i) {
        if (i > 0) { out += ','; }
        out += std::to_string(window.offsets[i]);
    }
    return out + "}";
}

std::string to_string(StreamingLiteral const &lit) {
    std::string out = lit.negative ? "not " : "";
    out += to_string(lit.atom);
    switch (lit.modality) {
        case Modality::AtLeast:
            if (lit.shorthand == Shorthand::Bare) { return out; }
            if (lit.shorthand == Shorthand::In) { return out + " in " + to_string(lit.window); }
            return out + " at least " + to_string(lit.count) + " in " + to_string(lit.window);
        case Modality::AtMost: return out + " at most " + to_string(lit.count) + " in " + to_string(lit.window);
        case Modality::Always: return out + " always in " + to_string(lit.window);
        case Modality::Count: return out + " count " + to_string(lit.count) + " in " + to_string(lit.window);
    }
    return out;
}

std::string to_string(BuiltinAtom const &atom) {
    return to_string(atom.lhs) + to_string(atom.op) + to_string(atom.rhs);
}

std::string to_string(AggregateLiteral const &agg) {
    std::string out = agg.function == AggregateFunction::Count ? "#count{" : "#sum{";
    for (std::size_t e = 0; e < agg.elements.size(); ++e) {
        if (e > 0) { out += "; "; }
        auto const &element = agg.elements[e];
        for (std::size_t i = 0; i < element.terms.size(); ++i) {
            if (i > 0) { out += ','; }
            out += to_string(element.terms[i]);
        }
        if (!element.condition.empty()) {
            out += ": ";
            for (std::size_t i = 0; i < element.condition.size(); ++i) {
                if (i > 0) { out += ", "; }
                out += std::visit([](auto const &x) { return to_string(x); }, element.condition[i]);
            }
        }
    }
    return out + "}" + to_string(agg.op) + to_string(agg.guard);
}

std::string to_string(BodyLiteral const &lit) {
    return std::visit([](auto const &x) { return to_string(x); }, lit);
}

std::string to_string(Rule const &rule) {
    std::string out = rule.temp ? "#temp " : "";
    out += to_string(rule.head);
    if (!rule.body.empty()) {
        out += " :- ";
        for (std::size_t i = 0; i < rule.body.size(); ++i) {
            if (i > 0) { out += ", "; }
            out += to_string(rule.body[i]);
        }
    }
    return out + ".";
}

std::string to_string(Program const &program) {
    std::string out;
    for (auto const &rule : program.rules) { out += to_string(rule) + "\n"; }
    return out;
}

} // namespace windlog
