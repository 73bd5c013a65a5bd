#pragma once

#include <memory>
#include <set>
#include <string>
#include <string_view>

namespace predicated {

enum class Kind { True, False, Atom, Not, And, Or, Implies, Iff, Forall, Exists };

std::string_view kind_name(Kind kind);

/// Immutable first-order formula over 1-ary predicates.
///
/// Children are shared, so copies are cheap and a Proposition can be read
/// from several threads at once. Equality is structural.
class Proposition {
public:
    static Proposition truth();
    static Proposition falsity();
    static Proposition atom(std::string predicate, std::string variable);
    static Proposition negation(Proposition operand);
    static Proposition conjunction(Proposition lhs, Proposition rhs);
    static Proposition disjunction(Proposition lhs, Proposition rhs);
    static Proposition implication(Proposition lhs, Proposition rhs);
    static Proposition biimplication(Proposition lhs, Proposition rhs);
    static Proposition forall(std::string variable, Proposition body);
    static Proposition exists(std::string variable, Proposition body);

    Kind kind() const noexcept { return kind_; }
    bool is_binary() const noexcept;
    bool is_quantifier() const noexcept { return kind_ == Kind::Forall || kind_ == Kind::Exists; }

    // Atom: predicate name. Empty otherwise.
    const std::string& predicate() const noexcept { return predicate_; }
    // Atom: the argument. Quantifiers: the bound variable.
    const std::string& variable() const noexcept { return variable_; }

    // Not and quantifiers use lhs() as their single child.
    const Proposition& lhs() const;
    const Proposition& rhs() const;
    const Proposition& body() const { return lhs(); }
    const Proposition& operand() const { return lhs(); }

    friend bool operator==(const Proposition& a, const Proposition& b);

private:
    Proposition() = default;
    static Proposition binary(Kind kind, Proposition lhs, Proposition rhs);

    Kind kind_ = Kind::True;
    std::string predicate_;
    std::string variable_;
    std::shared_ptr<const Proposition> lhs_;
    std::shared_ptr<const Proposition> rhs_;
};

bool is_identifier(std::string_view text);

/// Parses the ASCII formula syntax (see GRAMMAR.md). Only closed formulas
/// are accepted. Throws SyntaxError or UnboundVariable.
Proposition parse_dsl(std::string_view text);

/// Canonical text with the fewest parentheses that reparse to the same tree.
std::string print_dsl(const Proposition& p);

/// Expands every biimplication into a conjunction of both implications.
/// No other rewriting happens.
Proposition normalize(const Proposition& p);

std::set<std::string> free_variables(const Proposition& p);
std::set<std::string> predicates(const Proposition& p);
bool is_closed(const Proposition& p);

// Tree size, used by generators and reports.
std::size_t node_count(const Proposition& p);

}  // namespace predicated
