#include <windlog/lang.hpp>

#include <cctype>
#include <charconv>
#include <limits>
#include <optional>

namespace windlog::lang {

namespace {

enum class Tok {
    Ident,    // lowercase-initial name
    Var,      // uppercase-initial name
    Int,      // unsigned integer literal
    LParen, RParen, LBrace, RBrace, LBrack, RBrack,
    Comma, Dot, Semi, Colon, If,
    Eq, Ne, Lt, Le, Gt, Ge,
    Plus, Minus, Star, Slash,
    Temp, CountAgg, SumAgg, End,
    Eof,
};

struct Token {
    Tok kind = Tok::Eof;
    std::string_view text;
    std::int64_t number = 0;
    Location loc;
};

struct SyntaxError {
    Location loc;
    std::string message;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) { }

    Token next() {
        skip_space();
        Token t;
        t.loc = {line_, col_};
        if (pos_ >= src_.size()) { return t; }
        std::size_t start = pos_;
        char c = src_[pos_];
        auto ident_char = [](char ch) { return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_'; };
        if (std::islower(static_cast<unsigned char>(c))) {
            while (pos_ < src_.size() && ident_char(src_[pos_])) { advance(); }
            t.kind = Tok::Ident;
        } else if (std::isupper(static_cast<unsigned char>(c))) {
            while (pos_ < src_.size() && ident_char(src_[pos_])) { advance(); }
            t.kind = Tok::Var;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) { advance(); }
            t.kind = Tok::Int;
            auto digits = src_.substr(start, pos_ - start);
            auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), t.number);
            if (ec != std::errc()) { throw SyntaxError{t.loc, "integer constant out of 64-bit range"}; }
        } else if (c == '#') {
            advance();
            while (pos_ < src_.size() && ident_char(src_[pos_])) { advance(); }
            auto word = src_.substr(start, pos_ - start);
            if (word == "#temp") { t.kind = Tok::Temp; }
            else if (word == "#count") { t.kind = Tok::CountAgg; }
            else if (word == "#sum") { t.kind = Tok::SumAgg; }
            else if (word == "#end") { t.kind = Tok::End; }
            else { throw SyntaxError{t.loc, "unknown directive '" + std::string(word) + "'"}; }
        } else {
            advance();
            auto peek = [&](char ch) {
                if (pos_ < src_.size() && src_[pos_] == ch) {
                    advance();
                    return true;
                }
                return false;
            };
            switch (c) {
                case '(': t.kind = Tok::LParen; break;
                case ')': t.kind = Tok::RParen; break;
                case '{': t.kind = Tok::LBrace; break;
                case '}': t.kind = Tok::RBrace; break;
                case '[': t.kind = Tok::LBrack; break;
                case ']': t.kind = Tok::RBrack; break;
                case ',': t.kind = Tok::Comma; break;
                case '.': t.kind = Tok::Dot; break;
                case ';': t.kind = Tok::Semi; break;
                case ':': t.kind = peek('-') ? Tok::If : Tok::Colon; break;
                case '=': peek('='); t.kind = Tok::Eq; break;
                case '!':
                    if (!peek('=')) { throw SyntaxError{t.loc, "unexpected character '!'"}; }
                    t.kind = Tok::Ne;
                    break;
                case '<': t.kind = peek('=') ? Tok::Le : (peek('>') ? Tok::Ne : Tok::Lt); break;
                case '>': t.kind = peek('=') ? Tok::Ge : Tok::Gt; break;
                case '+': t.kind = Tok::Plus; break;
                case '-': t.kind = Tok::Minus; break;
                case '*': t.kind = Tok::Star; break;
                case '/': t.kind = Tok::Slash; break;
                default:
                    throw SyntaxError{t.loc, std::string("unexpected character '") + c + "'"};
            }
        }
        t.text = src_.substr(start, pos_ - start);
        return t;
    }

private:
    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '%') {
                while (pos_ < src_.size() && src_[pos_] != '\n') { advance(); }
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::uint32_t line_ = 1;
    std::uint32_t col_ = 1;
};

class Parser {
public:
    explicit Parser(std::string_view src) : lexer_(src) { }

    Program program() {
        Program prog;
        std::vector<Diagnostic> errors;
        while (true) {
            try {
                fill();
                if (cur_.kind == Tok::Eof) { break; }
                prog.rules.push_back(rule());
            } catch (SyntaxError const &e) {
                errors.push_back({e.loc, e.message});
                recover();
            }
        }
        if (!errors.empty()) { throw ParseError(std::move(errors)); }
        return prog;
    }

    FactLine fact_line() {
        fill();
        if (cur_.kind == Tok::Eof) { return NoFact{}; }
        if (cur_.kind == Tok::End) {
            take();
            expect(Tok::Dot, "expected '.' after '#end'");
            expect_eof();
            return TickMarker{};
        }
        auto atom = predicate_atom("fact");
        expect(Tok::Dot, "expected '.' after fact");
        expect_eof();
        GroundAtom ground;
        ground.predicate = atom.predicate;
        for (auto const &t : atom.terms) {
            if (t.is_variable()) { throw SyntaxError{atom.loc, "fact is not ground: variable " + t.name()}; }
            ground.args.push_back(t.value());
        }
        return ground;
    }

    void run_fact_line(FactLine &out, std::vector<Diagnostic> &errors) {
        try {
            out = fact_line();
        } catch (SyntaxError const &e) {
            errors.push_back({e.loc, e.message});
        }
    }

private:
    void fill() {
        if (!have_) {
            cur_ = lexer_.next();
            have_ = true;
        }
    }
    Token const &peek() {
        fill();
        return cur_;
    }
    Token const &peek2() {
        fill();
        if (!have2_) {
            next_ = lexer_.next();
            have2_ = true;
        }
        return next_;
    }
    Token take() {
        fill();
        Token t = cur_;
        if (have2_) {
            cur_ = next_;
            have2_ = false;
        } else {
            have_ = false;
        }
        return t;
    }
    Token expect(Tok kind, char const *message) {
        if (peek().kind != kind) {
            if (peek().kind == Tok::Eof && kind == Tok::Dot) { throw SyntaxError{cur_.loc, "unterminated rule: missing '.'"}; }
            throw SyntaxError{peek().loc, message};
        }
        return take();
    }
    void expect_eof() {
        if (peek().kind != Tok::Eof) { throw SyntaxError{peek().loc, "unexpected trailing input"}; }
    }
    bool accept(Tok kind) {
        if (peek().kind == kind) {
            take();
            return true;
        }
        return false;
    }
    bool accept_word(std::string_view word) {
        if (peek().kind == Tok::Ident && peek().text == word) {
            take();
            return true;
        }
        return false;
    }
    void expect_word(std::string_view word) {
        if (!accept_word(word)) { throw SyntaxError{peek().loc, "expected '" + std::string(word) + "'"}; }
    }

    // Skips to just after the next '.' (or end of input).
    void recover() {
        while (true) {
            try {
                Token t = take();
                if (t.kind == Tok::Eof || t.kind == Tok::Dot) {
                    if (t.kind == Tok::Eof) {
                        have_ = true;
                        cur_ = t;
                    }
                    return;
                }
            } catch (SyntaxError const &) {
                have_ = false;
                have2_ = false;
            }
        }
    }

    Rule rule() {
        Rule r;
        r.loc = peek().loc;
        r.temp = accept(Tok::Temp);
        r.head = predicate_atom("head");
        if (accept(Tok::If)) {
            r.body.push_back(body_literal());
            while (accept(Tok::Comma)) { r.body.push_back(body_literal()); }
        }
        expect(Tok::Dot, "expected '.' at end of rule");
        return r;
    }

    PredicateAtom predicate_atom(char const *what) {
        Token const &t = peek();
        if (t.kind == Tok::Var) {
            throw SyntaxError{t.loc, "predicate name must start with a lowercase letter: '" + std::string(t.text) + "'"};
        }
        if (t.kind != Tok::Ident) { throw SyntaxError{t.loc, std::string("expected ") + what + " atom"}; }
        if (t.text.starts_with(reserved_prefix)) {
            throw SyntaxError{t.loc, "predicate names starting with '" + std::string(reserved_prefix) + "' are reserved"};
        }
        if (t.text == "not") { throw SyntaxError{t.loc, "'not' is not a predicate name"}; }
        PredicateAtom atom;
        atom.loc = t.loc;
        atom.predicate = Symbol::intern(take().text);
        if (accept(Tok::LParen)) {
            atom.terms.push_back(term());
            while (accept(Tok::Comma)) { atom.terms.push_back(term()); }
            expect(Tok::RParen, "expected ')' after arguments");
        }
        return atom;
    }

    Term term() {
        Token const &t = peek();
        switch (t.kind) {
            case Tok::Var: return Term::variable(std::string(take().text));
            case Tok::Ident: return Term::symbol(take().text);
            case Tok::Int: return Term::integer(take().number);
            case Tok::Minus: {
                take();
                Token n = expect(Tok::Int, "expected integer after '-'");
                return Term::integer(-n.number);
            }
            default: throw SyntaxError{t.loc, "expected term"};
        }
    }

    std::optional<CompareOp> compare_op(Tok kind) {
        switch (kind) {
            case Tok::Eq: return CompareOp::Eq;
            case Tok::Ne: return CompareOp::Ne;
            case Tok::Lt: return CompareOp::Lt;
            case Tok::Le: return CompareOp::Le;
            case Tok::Gt: return CompareOp::Gt;
            case Tok::Ge: return CompareOp::Ge;
            default: return std::nullopt;
        }
    }

    Expr expr() {
        Expr e = Expr::of(term());
        std::optional<ArithOp> op;
        switch (peek().kind) {
            case Tok::Plus: op = ArithOp::Add; break;
            case Tok::Minus: op = ArithOp::Sub; break;
            case Tok::Star: op = ArithOp::Mul; break;
            case Tok::Slash: op = ArithOp::Div; break;
            default: break;
        }
        if (op) {
            take();
            e.op = op;
            e.rhs = term();
        }
        return e;
    }

    BuiltinAtom builtin() {
        BuiltinAtom b;
        b.loc = peek().loc;
        b.lhs = expr();
        auto op = compare_op(peek().kind);
        if (!op) { throw SyntaxError{peek().loc, "expected comparison operator"}; }
        take();
        b.op = *op;
        b.rhs = expr();
        return b;
    }

    bool starts_builtin() {
        auto k = peek().kind;
        if (k == Tok::Var || k == Tok::Int || k == Tok::Minus) {
            if (k == Tok::Var && peek2().kind == Tok::LParen) {
                throw SyntaxError{peek().loc,
                                  "predicate name must start with a lowercase letter: '" + std::string(peek().text) + "'"};
            }
            return true;
        }
        if (k == Tok::Ident) {
            auto k2 = peek2().kind;
            return compare_op(k2).has_value() || k2 == Tok::Plus || k2 == Tok::Minus || k2 == Tok::Star ||
                   k2 == Tok::Slash;
        }
        return false;
    }

    BodyLiteral body_literal() {
        if (peek().kind == Tok::CountAgg || peek().kind == Tok::SumAgg) { return aggregate(); }
        if (peek().kind == Tok::Ident && peek().text == "not") {
            Location loc = take().loc;
            auto lit = streaming_literal(true);
            if (lit.count_variable()) {
                throw SyntaxError{loc, "count with a variable term is only allowed in positive literals"};
            }
            return lit;
        }
        if (starts_builtin()) { return builtin(); }
        return streaming_literal(false);
    }

    std::uint32_t window_offset() {
        Token t = expect(Tok::Int, "malformed window set: expected natural number");
        if (t.number > std::numeric_limits<std::uint32_t>::max()) {
            throw SyntaxError{t.loc, "malformed window set: offset too large"};
        }
        return static_cast<std::uint32_t>(t.number);
    }

    WindowSet window() {
        Location loc = peek().loc;
        if (accept(Tok::LBrack)) {
            std::uint32_t w = window_offset();
            expect(Tok::RBrack, "malformed window set: expected ']'");
            if (w == 0) { throw SyntaxError{loc, "malformed window set: [w] requires w > 0"}; }
            return WindowSet::upto(w);
        }
        if (accept(Tok::LBrace)) {
            if (peek().kind == Tok::RBrace) { throw SyntaxError{loc, "malformed window set: empty set"}; }
            std::vector<std::uint32_t> offsets{window_offset()};
            while (accept(Tok::Comma)) { offsets.push_back(window_offset()); }
            expect(Tok::RBrace, "malformed window set: expected '}'");
            return WindowSet::explicit_set(std::move(offsets));
        }
        throw SyntaxError{loc, "malformed window set: expected '{' or '['"};
    }

    Term positive_constant(char const *what, std::int64_t minimum) {
        Token t = peek();
        if (t.kind != Tok::Int) { throw SyntaxError{t.loc, std::string("expected integer after '") + what + "'"}; }
        take();
        if (t.number < minimum) {
            throw SyntaxError{t.loc, std::string("'") + what + "' requires a constant >= " + std::to_string(minimum)};
        }
        return Term::integer(t.number);
    }

    StreamingLiteral streaming_literal(bool negative) {
        StreamingLiteral lit;
        lit.negative = negative;
        lit.atom = predicate_atom("body");
        if (accept_word("at")) {
            if (accept_word("least")) {
                lit.modality = Modality::AtLeast;
                lit.count = positive_constant("at least", 1);
            } else if (accept_word("most")) {
                lit.modality = Modality::AtMost;
                Location at = peek().loc;
                lit.count = positive_constant("at most", 0);
                if (lit.count.value().as_integer() == std::numeric_limits<std::int64_t>::max()) {
                    throw SyntaxError{at, "'at most' constant too large"};
                }
            } else {
                throw SyntaxError{peek().loc, "expected 'least' or 'most' after 'at'"};
            }
            expect_word("in");
            lit.window = window();
        } else if (accept_word("always")) {
            lit.modality = Modality::Always;
            expect_word("in");
            lit.window = window();
        } else if (accept_word("count")) {
            lit.modality = Modality::Count;
            Token t = peek();
            if (t.kind == Tok::Var) {
                lit.count = Term::variable(std::string(take().text));
            } else {
                lit.count = positive_constant("count", 1);
            }
            expect_word("in");
            lit.window = window();
        } else if (accept_word("in")) {
            lit.shorthand = Shorthand::In;
            lit.window = window();
        } else {
            lit.shorthand = Shorthand::Bare;
        }
        return lit;
    }

    AggregateLiteral aggregate() {
        AggregateLiteral agg;
        agg.loc = peek().loc;
        agg.function = take().kind == Tok::CountAgg ? AggregateFunction::Count : AggregateFunction::Sum;
        expect(Tok::LBrace, "expected '{' after aggregate function");
        if (peek().kind != Tok::RBrace) {
            agg.elements.push_back(aggregate_element());
            while (accept(Tok::Semi)) { agg.elements.push_back(aggregate_element()); }
        }
        expect(Tok::RBrace, "expected '}' to close aggregate");
        auto op = compare_op(peek().kind);
        if (!op) { throw SyntaxError{peek().loc, "expected aggregate guard (e.g. '= T')"}; }
        take();
        agg.op = *op;
        agg.guard = term();
        return agg;
    }

    AggregateElement aggregate_element() {
        AggregateElement element;
        element.terms.push_back(term());
        while (accept(Tok::Comma)) { element.terms.push_back(term()); }
        if (accept(Tok::Colon)) {
            element.condition.push_back(condition());
            while (accept(Tok::Comma)) { element.condition.push_back(condition()); }
        }
        return element;
    }

    Condition condition() {
        if (peek().kind == Tok::Ident && peek().text == "not") {
            throw SyntaxError{peek().loc, "negation is not supported inside aggregate elements"};
        }
        if (starts_builtin()) { return builtin(); }
        auto atom = predicate_atom("condition");
        auto k = peek();
        if (k.kind == Tok::Ident && (k.text == "at" || k.text == "always" || k.text == "count" || k.text == "in")) {
            throw SyntaxError{k.loc, "aggregate elements cannot contain streaming literals"};
        }
        return atom;
    }

    Lexer lexer_;
    Token cur_;
    Token next_;
    bool have_ = false;
    bool have2_ = false;
};

} // namespace

Program parse_program(std::string_view source) {
    try {
        return Parser(source).program();
    } catch (SyntaxError const &e) {
        throw ParseError({{e.loc, e.message}});
    }
}

FactLine parse_fact_line(std::string_view line) {
    FactLine out = NoFact{};
    std::vector<Diagnostic> errors;
    try {
        Parser(line).run_fact_line(out, errors);
    } catch (SyntaxError const &e) {
        errors.push_back({e.loc, e.message});
    }
    if (!errors.empty()) { throw ParseError(std::move(errors)); }
    return out;
}

std::vector<GroundAtom> parse_facts(std::string_view text) {
    std::vector<GroundAtom> facts;
    std::vector<Diagnostic> errors;
    std::uint32_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        try {
            auto parsed = parse_fact_line(line);
            if (auto *atom = std::get_if<GroundAtom>(&parsed)) { facts.push_back(std::move(*atom)); }
            else if (std::holds_alternative<TickMarker>(parsed)) {
                errors.push_back({{line_no, 1}, "unexpected '#end.' in a fact file"});
            }
        } catch (ParseError const &e) {
            for (auto d : e.diagnostics()) {
                d.loc.line = line_no;
                errors.push_back(d);
            }
        }
    }
    if (!errors.empty()) { throw ParseError(std::move(errors)); }
    return facts;
}

} // namespace windlog::lang
