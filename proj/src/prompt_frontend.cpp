#include "predicated/prompt_frontend.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "predicated/errors.hpp"

namespace predicated {

std::string_view to_string(TemplateClass c) {
    switch (c) {
        case TemplateClass::Existence: return "Existence";
        case TemplateClass::ConcurrentExistence: return "ConcurrentExistence";
        case TemplateClass::Adjective: return "Adjective";
        case TemplateClass::OneToOne: return "OneToOne";
        case TemplateClass::Possession: return "Possession";
        case TemplateClass::MultiColor: return "MultiColor";
        case TemplateClass::Negation: return "Negation";
    }
    return "?";
}

std::string_view to_string(SlotRole r) {
    switch (r) {
        case SlotRole::ObjectA: return "ObjectA";
        case SlotRole::ObjectB: return "ObjectB";
        case SlotRole::AdjA: return "AdjA";
        case SlotRole::AdjB: return "AdjB";
        case SlotRole::Subject: return "Subject";
        case SlotRole::Verb: return "Verb";
        case SlotRole::NegatedObject: return "NegatedObject";
    }
    return "?";
}

namespace {

constexpr TemplateClass kAllClasses[] = {
    TemplateClass::Existence,  TemplateClass::ConcurrentExistence, TemplateClass::Adjective,
    TemplateClass::OneToOne,   TemplateClass::Possession,          TemplateClass::MultiColor,
    TemplateClass::Negation,
};

std::string lowercase(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string squash(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c != '-' && c != '_' && c != ' ') out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

}  // namespace

TemplateClass parse_template_class(std::string_view text) {
    const std::string wanted = squash(text);
    for (auto c : kAllClasses) {
        if (squash(to_string(c)) == wanted) return c;
    }
    if (wanted == "concurrent") return TemplateClass::ConcurrentExistence;
    if (wanted == "multicolour") return TemplateClass::MultiColor;
    throw InvalidArgument("unknown statement class '" + std::string(text) + "'");
}

const std::string& PromptTemplate::word(SlotRole role) const {
    for (const auto& s : slots) {
        if (s.role == role) return s.word;
    }
    throw InvalidArgument(std::string(to_string(template_class)) + " template has no " +
                          std::string(to_string(role)) + " slot");
}

std::vector<SlotRole> required_roles(TemplateClass c) {
    using R = SlotRole;
    switch (c) {
        case TemplateClass::Existence: return {R::ObjectA};
        case TemplateClass::ConcurrentExistence: return {R::ObjectA, R::ObjectB};
        case TemplateClass::Adjective: return {R::AdjA, R::ObjectA};
        case TemplateClass::OneToOne: return {R::AdjA, R::ObjectA, R::AdjB, R::ObjectB};
        case TemplateClass::Possession: return {R::Subject, R::Verb, R::ObjectA};
        case TemplateClass::MultiColor: return {R::AdjA, R::AdjB, R::ObjectA};
        case TemplateClass::Negation: return {R::NegatedObject};
    }
    return {};
}

const std::set<std::string>& possession_verbs() {
    static const std::set<std::string> verbs = {"hold", "have", "grasp", "wear", "carry", "own", "grip", "clutch"};
    return verbs;
}

std::optional<std::string> match_possession_verb(std::string_view word) {
    const std::string w = lowercase(word);
    if (w.size() <= 3 || !w.ends_with("ing")) return std::nullopt;
    const std::string stem = w.substr(0, w.size() - 3);
    const auto& verbs = possession_verbs();
    if (verbs.contains(stem)) return stem;
    if (verbs.contains(stem + "e")) return stem + "e";  // having
    if (stem.size() >= 2 && stem[stem.size() - 1] == stem[stem.size() - 2]) {
        std::string single = stem.substr(0, stem.size() - 1);  // gripping
        if (verbs.contains(single)) return single;
    }
    return std::nullopt;
}

std::string predicate_name(std::string_view word) {
    std::string out;
    for (char c : word) out += c == '-' ? '_' : c;
    if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out;
}

namespace {

bool is_article(std::string_view w) { return w == "a" || w == "an" || w == "the"; }

bool is_content_word(std::string_view w) {
    return !w.empty() && !is_article(w) && w != "and" && w != "without" && is_identifier(predicate_name(w));
}

enum class Element { Article, Word, And, Without, Verb };

struct PatternItem {
    Element element;
    SlotRole role = SlotRole::ObjectA;
};

std::vector<PatternItem> pattern_of(TemplateClass c) {
    using E = Element;
    using R = SlotRole;
    switch (c) {
        case TemplateClass::Existence: return {{E::Article}, {E::Word, R::ObjectA}};
        case TemplateClass::ConcurrentExistence:
            return {{E::Article}, {E::Word, R::ObjectA}, {E::And}, {E::Article}, {E::Word, R::ObjectB}};
        case TemplateClass::Adjective: return {{E::Article}, {E::Word, R::AdjA}, {E::Word, R::ObjectA}};
        case TemplateClass::OneToOne:
            return {{E::Article}, {E::Word, R::AdjA}, {E::Word, R::ObjectA}, {E::And},
                    {E::Article}, {E::Word, R::AdjB}, {E::Word, R::ObjectB}};
        case TemplateClass::Possession:
            return {{E::Article}, {E::Word, R::Subject}, {E::Verb, R::Verb}, {E::Article}, {E::Word, R::ObjectA}};
        case TemplateClass::MultiColor:
            return {{E::Article}, {E::Word, R::AdjA}, {E::And}, {E::Word, R::AdjB}, {E::Word, R::ObjectA}};
        case TemplateClass::Negation: return {{E::Without}, {E::Article}, {E::Word, R::NegatedObject}};
    }
    return {};
}

// Articles are optional wherever the pattern allows one.
bool match_from(const std::vector<PatternItem>& pattern, std::size_t pi, const std::vector<std::string>& words,
                std::size_t wi, std::vector<Slot>& slots) {
    if (pi == pattern.size()) return wi == words.size();
    const PatternItem& item = pattern[pi];
    if (item.element == Element::Article) {
        if (wi < words.size() && is_article(words[wi]) && match_from(pattern, pi + 1, words, wi + 1, slots)) {
            return true;
        }
        return match_from(pattern, pi + 1, words, wi, slots);
    }
    if (wi == words.size()) return false;
    const std::string& w = words[wi];
    bool ok = false;
    switch (item.element) {
        case Element::And: ok = w == "and"; break;
        case Element::Without: ok = w == "without"; break;
        case Element::Word: ok = is_content_word(w); break;
        case Element::Verb: ok = match_possession_verb(w).has_value(); break;
        case Element::Article: break;
    }
    if (!ok) return false;
    const bool records = item.element == Element::Word || item.element == Element::Verb;
    if (records) slots.push_back({item.role, w});
    if (match_from(pattern, pi + 1, words, wi + 1, slots)) return true;
    if (records) slots.pop_back();
    return false;
}

std::vector<std::string> split_words(std::string_view prompt) {
    std::vector<std::string> words;
    std::istringstream in{lowercase(prompt)};
    std::string w;
    while (in >> w) {
        while (!w.empty() && (w.back() == '.' || w.back() == ',' || w.back() == '!' || w.back() == '?')) w.pop_back();
        if (!w.empty()) words.push_back(w);
    }
    if (words.size() >= 2 && words[0] == "there" && (words[1] == "is" || words[1] == "are")) {
        words.erase(words.begin(), words.begin() + 2);
    }
    return words;
}

std::optional<PromptTemplate> match(TemplateClass c, const std::vector<std::string>& words) {
    std::vector<Slot> slots;
    if (!match_from(pattern_of(c), 0, words, 0, slots)) return std::nullopt;
    return PromptTemplate{c, std::move(slots)};
}

Proposition exists_x(const std::string& p) { return Proposition::exists("x", Proposition::atom(p, "x")); }

Proposition forall_implies(const std::string& a, Proposition consequent) {
    return Proposition::forall("x", Proposition::implication(Proposition::atom(a, "x"), std::move(consequent)));
}

Proposition conjoin(std::vector<Proposition> parts) {
    Proposition out = parts.front();
    for (std::size_t i = 1; i < parts.size(); ++i) out = Proposition::conjunction(std::move(out), parts[i]);
    return out;
}

Proposition proposition_for(const PromptTemplate& t) {
    using R = SlotRole;
    auto pred = [&](R role) { return predicate_name(t.word(role)); };
    auto atom = [](const std::string& p) { return Proposition::atom(p, "x"); };
    switch (t.template_class) {
        case TemplateClass::Existence: return exists_x(pred(R::ObjectA));
        case TemplateClass::ConcurrentExistence:
            return conjoin({exists_x(pred(R::ObjectA)), exists_x(pred(R::ObjectB))});
        case TemplateClass::Adjective:
            return conjoin({exists_x(pred(R::ObjectA)), forall_implies(pred(R::ObjectA), atom(pred(R::AdjA)))});
        case TemplateClass::OneToOne: {
            const auto x = pred(R::ObjectA), a = pred(R::AdjA), y = pred(R::ObjectB), b = pred(R::AdjB);
            auto iff = [&](const std::string& noun, const std::string& adj) {
                return Proposition::forall("x", Proposition::biimplication(atom(noun), atom(adj)));
            };
            return conjoin({exists_x(x), exists_x(y), iff(x, a), iff(y, b),
                            forall_implies(x, Proposition::negation(atom(b))),
                            forall_implies(y, Proposition::negation(atom(a)))});
        }
        case TemplateClass::Possession: {
            const auto s = pred(R::Subject), o = pred(R::ObjectA);
            return conjoin({exists_x(s), exists_x(o), forall_implies(o, atom(s))});
        }
        case TemplateClass::MultiColor: {
            const auto x = pred(R::ObjectA);
            return conjoin({exists_x(x), forall_implies(x, Proposition::disjunction(atom(pred(R::AdjA)),
                                                                                   atom(pred(R::AdjB))))});
        }
        case TemplateClass::Negation:
            return Proposition::negation(exists_x(pred(R::NegatedObject)));
    }
    throw PatternMismatch("unhandled statement class");
}

}  // namespace

Extraction extract(std::string_view prompt, std::optional<TemplateClass> c) {
    const auto words = split_words(prompt);
    std::optional<PromptTemplate> matched;
    if (c) {
        matched = match(*c, words);
        if (!matched) {
            throw PatternMismatch("prompt '" + std::string(prompt) + "' does not fit the " +
                                  std::string(to_string(*c)) + " pattern");
        }
    } else {
        std::vector<PromptTemplate> candidates;
        for (auto candidate : kAllClasses) {
            if (auto m = match(candidate, words)) candidates.push_back(std::move(*m));
        }
        if (candidates.empty()) throw PatternMismatch("prompt '" + std::string(prompt) + "' fits no statement class");
        if (candidates.size() > 1) {
            std::string names;
            for (const auto& m : candidates) names += (names.empty() ? "" : ", ") + std::string(to_string(m.template_class));
            throw AmbiguousClass("prompt '" + std::string(prompt) + "' fits several classes: " + names);
        }
        matched = std::move(candidates.front());
    }

    Extraction out{*matched, proposition_for(*matched), {}, {std::string(kStartOfText)}};
    for (const auto& slot : matched->slots) {
        if (slot.role == SlotRole::Verb) continue;
        const std::string name = predicate_name(slot.word);
        if (out.binding.contains(name)) continue;
        out.binding[name] = out.token_labels.size();
        out.token_labels.push_back(name);
    }
    return out;
}

}  // namespace predicated
