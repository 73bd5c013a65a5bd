#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "predicated/fuzzy_compiler.hpp"
#include "predicated/logic_ast.hpp"

namespace predicated {

enum class TemplateClass { Existence, ConcurrentExistence, Adjective, OneToOne, Possession, MultiColor, Negation };

enum class SlotRole { ObjectA, ObjectB, AdjA, AdjB, Subject, Verb, NegatedObject };

std::string_view to_string(TemplateClass c);
std::string_view to_string(SlotRole r);
// Accepts the enum spelling ("OneToOne") or kebab/snake case ("one-to-one").
TemplateClass parse_template_class(std::string_view text);

struct Slot {
    SlotRole role;
    std::string word;
};

struct PromptTemplate {
    TemplateClass template_class;
    std::vector<Slot> slots;

    const std::string& word(SlotRole role) const;
};

// Roles a class must fill.
std::vector<SlotRole> required_roles(TemplateClass c);

struct Extraction {
    PromptTemplate matched;
    Proposition proposition;
    TokenBinding binding;
    // "<sot>" followed by the predicate of every bound channel, in channel order.
    std::vector<std::string> token_labels;
};

/// Maps a prompt of one of the supported statement classes to its
/// proposition. Predicates are the capitalised content words; channels are
/// numbered 1.. in order of first appearance in the prompt.
/// Throws PatternMismatch, or AmbiguousClass when `c` is omitted and more
/// than one class matches.
Extraction extract(std::string_view prompt, std::optional<TemplateClass> c = std::nullopt);

// Stems recognised as possession verbs.
const std::set<std::string>& possession_verbs();

// "wearing" -> "wear", "having" -> "have"; nullopt when not a possession verb.
std::optional<std::string> match_possession_verb(std::string_view word);

// "dog" -> "Dog"; hyphens become underscores.
std::string predicate_name(std::string_view word);

}  // namespace predicated
