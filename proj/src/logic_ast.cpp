#include "predicated/logic_ast.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

#include "predicated/errors.hpp"

namespace predicated {

namespace {

std::string join_expected(const std::set<std::string>& expected) {
    std::string out;
    for (const auto& e : expected) {
        if (!out.empty()) out += ", ";
        out += e;
    }
    return out;
}

}  // namespace

SyntaxError::SyntaxError(std::size_t offset, std::set<std::string> expected, const std::string& found)
    : Error("SyntaxError", "at byte " + std::to_string(offset) + ": expected one of {" +
                               join_expected(expected) + "} but found " + found),
      offset_(offset),
      expected_(std::move(expected)) {}

std::string_view kind_name(Kind kind) {
    switch (kind) {
        case Kind::True: return "True";
        case Kind::False: return "False";
        case Kind::Atom: return "Atom";
        case Kind::Not: return "Not";
        case Kind::And: return "And";
        case Kind::Or: return "Or";
        case Kind::Implies: return "Implies";
        case Kind::Iff: return "Iff";
        case Kind::Forall: return "Forall";
        case Kind::Exists: return "Exists";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Construction

Proposition Proposition::truth() {
    Proposition p;
    p.kind_ = Kind::True;
    return p;
}

Proposition Proposition::falsity() {
    Proposition p;
    p.kind_ = Kind::False;
    return p;
}

Proposition Proposition::atom(std::string predicate, std::string variable) {
    Proposition p;
    p.kind_ = Kind::Atom;
    p.predicate_ = std::move(predicate);
    p.variable_ = std::move(variable);
    return p;
}

Proposition Proposition::negation(Proposition operand) {
    Proposition p;
    p.kind_ = Kind::Not;
    p.lhs_ = std::make_shared<const Proposition>(std::move(operand));
    return p;
}

Proposition Proposition::binary(Kind kind, Proposition lhs, Proposition rhs) {
    Proposition p;
    p.kind_ = kind;
    p.lhs_ = std::make_shared<const Proposition>(std::move(lhs));
    p.rhs_ = std::make_shared<const Proposition>(std::move(rhs));
    return p;
}

Proposition Proposition::conjunction(Proposition lhs, Proposition rhs) {
    return binary(Kind::And, std::move(lhs), std::move(rhs));
}
Proposition Proposition::disjunction(Proposition lhs, Proposition rhs) {
    return binary(Kind::Or, std::move(lhs), std::move(rhs));
}
Proposition Proposition::implication(Proposition lhs, Proposition rhs) {
    return binary(Kind::Implies, std::move(lhs), std::move(rhs));
}
Proposition Proposition::biimplication(Proposition lhs, Proposition rhs) {
    return binary(Kind::Iff, std::move(lhs), std::move(rhs));
}

Proposition Proposition::forall(std::string variable, Proposition body) {
    Proposition p;
    p.kind_ = Kind::Forall;
    p.variable_ = std::move(variable);
    p.lhs_ = std::make_shared<const Proposition>(std::move(body));
    return p;
}

Proposition Proposition::exists(std::string variable, Proposition body) {
    Proposition p = forall(std::move(variable), std::move(body));
    p.kind_ = Kind::Exists;
    return p;
}

bool Proposition::is_binary() const noexcept {
    return kind_ == Kind::And || kind_ == Kind::Or || kind_ == Kind::Implies || kind_ == Kind::Iff;
}

const Proposition& Proposition::lhs() const {
    if (!lhs_) throw InvalidArgument(std::string(kind_name(kind_)) + " has no child");
    return *lhs_;
}

const Proposition& Proposition::rhs() const {
    if (!rhs_) throw InvalidArgument(std::string(kind_name(kind_)) + " has no right child");
    return *rhs_;
}

bool operator==(const Proposition& a, const Proposition& b) {
    if (a.kind_ != b.kind_ || a.predicate_ != b.predicate_ || a.variable_ != b.variable_) return false;
    if (static_cast<bool>(a.lhs_) != static_cast<bool>(b.lhs_)) return false;
    if (static_cast<bool>(a.rhs_) != static_cast<bool>(b.rhs_)) return false;
    if (a.lhs_ && a.lhs_ != b.lhs_ && !(*a.lhs_ == *b.lhs_)) return false;
    if (a.rhs_ && a.rhs_ != b.rhs_ && !(*a.rhs_ == *b.rhs_)) return false;
    return true;
}

bool is_identifier(std::string_view text) {
    if (text.empty() || !std::isalpha(static_cast<unsigned char>(text.front()))) return false;
    for (char c : text) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

enum class Tok { Ident, Forall, Exists, True, False, LParen, RParen, Dot, Bang, Amp, Pipe, Arrow, DArrow, End };

std::string describe(Tok t) {
    switch (t) {
        case Tok::Ident: return "identifier";
        case Tok::Forall: return "'forall'";
        case Tok::Exists: return "'exists'";
        case Tok::True: return "'true'";
        case Tok::False: return "'false'";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::Dot: return "'.'";
        case Tok::Bang: return "'!'";
        case Tok::Amp: return "'&'";
        case Tok::Pipe: return "'|'";
        case Tok::Arrow: return "'->'";
        case Tok::DArrow: return "'<->'";
        case Tok::End: return "end of input";
    }
    return "?";
}

struct Token {
    Tok type;
    std::string text;
    std::size_t offset;
};

std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < src.size()) {
        const char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (std::isalpha(static_cast<unsigned char>(c))) {
            while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
            std::string word(src.substr(start, i - start));
            Tok t = Tok::Ident;
            if (word == "forall") t = Tok::Forall;
            else if (word == "exists") t = Tok::Exists;
            else if (word == "true") t = Tok::True;
            else if (word == "false") t = Tok::False;
            out.push_back({t, std::move(word), start});
            continue;
        }
        auto single = [&](Tok t) {
            out.push_back({t, std::string(1, c), start});
            ++i;
        };
        switch (c) {
            case '(': single(Tok::LParen); continue;
            case ')': single(Tok::RParen); continue;
            case '.': single(Tok::Dot); continue;
            case '!': single(Tok::Bang); continue;
            case '&': single(Tok::Amp); continue;
            case '|': single(Tok::Pipe); continue;
            default: break;
        }
        if (src.substr(i, 2) == "->") {
            out.push_back({Tok::Arrow, "->", start});
            i += 2;
            continue;
        }
        if (src.substr(i, 3) == "<->") {
            out.push_back({Tok::DArrow, "<->", start});
            i += 3;
            continue;
        }
        throw SyntaxError(start,
                          {"identifier", "'forall'", "'exists'", "'true'", "'false'", "'('", "')'",
                           "'.'", "'!'", "'&'", "'|'", "'->'", "'<->'"},
                          "character '" + std::string(1, c) + "'");
    }
    out.push_back({Tok::End, "", src.size()});
    return out;
}

class Parser {
public:
    explicit Parser(std::string_view src) : tokens_(tokenize(src)) {}

    Proposition parse() {
        Proposition p = prop();
        expect_one(Tok::End, {describe(Tok::End), "'&'", "'|'", "'->'", "'<->'"});
        return p;
    }

private:
    const Token& peek() const { return tokens_[pos_]; }

    const Token& expect_one(Tok t, std::set<std::string> expected) {
        const Token& tok = peek();
        if (tok.type != t) fail(std::move(expected));
        ++pos_;
        return tok;
    }

    [[noreturn]] void fail(std::set<std::string> expected) const {
        const Token& tok = peek();
        std::string found = tok.type == Tok::End ? "end of input" : "'" + tok.text + "'";
        throw SyntaxError(tok.offset, std::move(expected), found);
    }

    Proposition prop() {
        if (peek().type == Tok::Forall || peek().type == Tok::Exists) {
            const bool universal = peek().type == Tok::Forall;
            ++pos_;
            std::string var = expect_one(Tok::Ident, {"identifier"}).text;
            expect_one(Tok::Dot, {"'.'"});
            bound_.push_back(var);
            Proposition body = prop();
            bound_.pop_back();
            return universal ? Proposition::forall(std::move(var), std::move(body))
                             : Proposition::exists(std::move(var), std::move(body));
        }
        return iff();
    }

    Proposition iff() {
        Proposition lhs = imp();
        while (peek().type == Tok::DArrow) {
            ++pos_;
            lhs = Proposition::biimplication(std::move(lhs), imp());
        }
        return lhs;
    }

    Proposition imp() {
        Proposition lhs = disj();
        if (peek().type == Tok::Arrow) {
            ++pos_;
            return Proposition::implication(std::move(lhs), imp());
        }
        return lhs;
    }

    Proposition disj() {
        Proposition lhs = conj();
        while (peek().type == Tok::Pipe) {
            ++pos_;
            lhs = Proposition::disjunction(std::move(lhs), conj());
        }
        return lhs;
    }

    Proposition conj() {
        Proposition lhs = unary();
        while (peek().type == Tok::Amp) {
            ++pos_;
            lhs = Proposition::conjunction(std::move(lhs), unary());
        }
        return lhs;
    }

    Proposition unary() {
        if (peek().type == Tok::Bang) {
            ++pos_;
            return Proposition::negation(unary());
        }
        return atom();
    }

    Proposition atom() {
        const Token& tok = peek();
        switch (tok.type) {
            case Tok::True: ++pos_; return Proposition::truth();
            case Tok::False: ++pos_; return Proposition::falsity();
            case Tok::LParen: {
                ++pos_;
                Proposition inner = prop();
                expect_one(Tok::RParen, {"')'", "'&'", "'|'", "'->'", "'<->'"});
                return inner;
            }
            case Tok::Ident: {
                ++pos_;
                std::string pred = tok.text;
                expect_one(Tok::LParen, {"'('"});
                const Token& var = expect_one(Tok::Ident, {"identifier"});
                expect_one(Tok::RParen, {"')'"});
                if (std::find(bound_.begin(), bound_.end(), var.text) == bound_.end()) {
                    throw UnboundVariable(var.text, var.offset);
                }
                return Proposition::atom(std::move(pred), var.text);
            }
            default:
                fail({"'!'", "'('", "'true'", "'false'", "identifier"});
        }
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    std::vector<std::string> bound_;
};

}  // namespace

Proposition parse_dsl(std::string_view text) {
    return Parser(text).parse();
}

// ---------------------------------------------------------------------------
// Printer

namespace {

// Binding strength; higher binds tighter.
int precedence(Kind k) {
    switch (k) {
        case Kind::Forall:
        case Kind::Exists: return 0;
        case Kind::Iff: return 1;
        case Kind::Implies: return 2;
        case Kind::Or: return 3;
        case Kind::And: return 4;
        case Kind::Not: return 5;
        default: return 6;
    }
}

std::string_view symbol(Kind k) {
    switch (k) {
        case Kind::Iff: return " <-> ";
        case Kind::Implies: return " -> ";
        case Kind::Or: return " | ";
        case Kind::And: return " & ";
        default: return "";
    }
}

void print_into(const Proposition& p, std::string& out);

void print_child(const Proposition& child, bool parens, std::string& out) {
    if (parens) out += '(';
    print_into(child, out);
    if (parens) out += ')';
}

void print_into(const Proposition& p, std::string& out) {
    switch (p.kind()) {
        case Kind::True: out += "true"; return;
        case Kind::False: out += "false"; return;
        case Kind::Atom:
            out += p.predicate();
            out += '(';
            out += p.variable();
            out += ')';
            return;
        case Kind::Not:
            out += '!';
            print_child(p.operand(), precedence(p.operand().kind()) < precedence(Kind::Not), out);
            return;
        case Kind::Forall:
        case Kind::Exists:
            out += p.kind() == Kind::Forall ? "forall " : "exists ";
            out += p.variable();
            out += ". ";
            print_into(p.body(), out);
            return;
        default: break;
    }
    const int prec = precedence(p.kind());
    const bool right_assoc = p.kind() == Kind::Implies;
    const int lp = precedence(p.lhs().kind());
    const int rp = precedence(p.rhs().kind());
    // Quantifiers are never operands without parentheses in this grammar.
    const bool left_parens = lp == 0 || lp < prec || (lp == prec && right_assoc);
    const bool right_parens = rp == 0 || rp < prec || (rp == prec && !right_assoc);
    print_child(p.lhs(), left_parens, out);
    out += symbol(p.kind());
    print_child(p.rhs(), right_parens, out);
}

}  // namespace

std::string print_dsl(const Proposition& p) {
    std::string out;
    print_into(p, out);
    return out;
}

// ---------------------------------------------------------------------------
// Rewriting and queries

Proposition normalize(const Proposition& p) {
    switch (p.kind()) {
        case Kind::True:
        case Kind::False:
        case Kind::Atom: return p;
        case Kind::Not: return Proposition::negation(normalize(p.operand()));
        case Kind::And: return Proposition::conjunction(normalize(p.lhs()), normalize(p.rhs()));
        case Kind::Or: return Proposition::disjunction(normalize(p.lhs()), normalize(p.rhs()));
        case Kind::Implies: return Proposition::implication(normalize(p.lhs()), normalize(p.rhs()));
        case Kind::Iff: {
            Proposition a = normalize(p.lhs());
            Proposition b = normalize(p.rhs());
            return Proposition::conjunction(Proposition::implication(a, b), Proposition::implication(b, a));
        }
        case Kind::Forall: return Proposition::forall(p.variable(), normalize(p.body()));
        case Kind::Exists: return Proposition::exists(p.variable(), normalize(p.body()));
    }
    return p;
}

std::set<std::string> free_variables(const Proposition& p) {
    switch (p.kind()) {
        case Kind::True:
        case Kind::False: return {};
        case Kind::Atom: return {p.variable()};
        case Kind::Not: return free_variables(p.operand());
        case Kind::Forall:
        case Kind::Exists: {
            auto vars = free_variables(p.body());
            vars.erase(p.variable());
            return vars;
        }
        default: {
            auto vars = free_variables(p.lhs());
            vars.merge(free_variables(p.rhs()));
            return vars;
        }
    }
}

std::set<std::string> predicates(const Proposition& p) {
    switch (p.kind()) {
        case Kind::True:
        case Kind::False: return {};
        case Kind::Atom: return {p.predicate()};
        case Kind::Not:
        case Kind::Forall:
        case Kind::Exists: return predicates(p.lhs());
        default: {
            auto names = predicates(p.lhs());
            names.merge(predicates(p.rhs()));
            return names;
        }
    }
}

bool is_closed(const Proposition& p) {
    return free_variables(p).empty();
}

std::size_t node_count(const Proposition& p) {
    switch (p.kind()) {
        case Kind::True:
        case Kind::False:
        case Kind::Atom: return 1;
        case Kind::Not:
        case Kind::Forall:
        case Kind::Exists: return 1 + node_count(p.lhs());
        default: return 1 + node_count(p.lhs()) + node_count(p.rhs());
    }
}

}  // namespace predicated
