#pragma once

// Shared fixtures for the unit and acceptance tests: the proposition corpus,
// random generators, and direct loss formulas that never touch the compiler.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "predicated/attention.hpp"
#include "predicated/fuzzy_compiler.hpp"
#include "predicated/logic_ast.hpp"

namespace testsupport {

using predicated::AttentionStack;
using predicated::Proposition;

// Three predicates on channels 1..3.
inline std::vector<std::string> pqr_labels() { return {"<sot>", "P", "Q", "R"}; }
inline predicated::TokenBinding pqr_binding() { return {{"P", 1}, {"Q", 2}, {"R", 3}}; }

// Closed formulas over P, Q, R touching every connective, quantifier nesting
// and mixed scalar/field operands.
inline const std::vector<std::string>& corpus() {
    static const std::vector<std::string> c = {
        "exists x. P(x)",
        "forall x. P(x)",
        "!(exists x. P(x))",
        "forall x. !P(x)",
        "exists x. P(x) & Q(x)",
        "exists x. P(x) | Q(x)",
        "forall x. P(x) -> Q(x)",
        "forall x. P(x) <-> Q(x)",
        "forall x. P(x) -> Q(x) | R(x)",
        "forall x. P(x) -> !Q(x)",
        "(exists x. P(x)) & (exists x. Q(x))",
        "(exists x. P(x)) | (forall x. Q(x))",
        "(exists x. P(x)) -> (exists x. Q(x))",
        "(forall x. P(x)) <-> (exists x. R(x))",
        "exists x. P(x) & !Q(x) & R(x)",
        "forall x. P(x) & Q(x) -> R(x)",
        "exists x. (P(x) <-> Q(x)) & !R(x)",
        "!(forall x. P(x) | Q(x))",
        "exists x. P(x) & (forall y. Q(y) -> R(y))",
        "(exists x. P(x)) & (forall x. P(x) -> Q(x)) & (forall x. Q(x) -> !R(x))",
        "forall x. !(P(x) & Q(x)) | R(x)",
        "true & (exists x. R(x))",
        "false | (forall x. P(x) <-> !R(x))",
        "!!(exists x. Q(x))",
        "(forall x. P(x) -> Q(x)) -> (forall x. P(x) -> R(x))",
        "exists x. P(x) -> (exists y. Q(y))",
        "forall x. (P(x) | Q(x)) & (Q(x) | R(x))",
        "exists x. P(x) <-> (Q(x) -> R(x))",
    };
    return c;
}

inline AttentionStack random_stack(std::mt19937_64& rng, std::vector<std::string> labels, std::size_t width,
                                   std::size_t height, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> values(labels.size() * width * height);
    for (double& v : values) v = u(rng);
    return AttentionStack(std::move(labels), width, height, std::move(values));
}

// Single-variable formula over P, Q, R with x free (unless wrapped).
inline Proposition random_open(std::mt19937_64& rng, int depth, const std::string& var) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
    static const char* names[] = {"P", "Q", "R"};
    const int k = pick(rng);
    auto sub = [&] { return random_open(rng, depth - 1, var); };
    switch (k) {
        case 0:
        case 1: return Proposition::atom(names[std::uniform_int_distribution<int>(0, 2)(rng)], var);
        case 2: return Proposition::negation(sub());
        case 3: return Proposition::conjunction(sub(), sub());
        case 4: return Proposition::disjunction(sub(), sub());
        case 5: return Proposition::implication(sub(), sub());
        case 6: return Proposition::biimplication(sub(), sub());
        case 7: return std::uniform_int_distribution<int>(0, 1)(rng) ? Proposition::truth() : Proposition::falsity();
        case 8: return Proposition::forall(var, sub());
        default: return Proposition::exists(var, sub());
    }
}

// Closed formula whose quantifier bodies mention only their own variable.
inline Proposition random_closed(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 6);
    auto sub = [&] { return random_closed(rng, depth - 1); };
    const std::string var = std::uniform_int_distribution<int>(0, 1)(rng) ? "x" : "y";
    switch (pick(rng)) {
        case 0: return Proposition::exists(var, random_open(rng, depth - 1, var));
        case 1: return Proposition::forall(var, random_open(rng, depth - 1, var));
        case 2: return Proposition::negation(sub());
        case 3: return Proposition::conjunction(sub(), sub());
        case 4: return Proposition::disjunction(sub(), sub());
        case 5: return Proposition::implication(sub(), sub());
        default: return Proposition::biimplication(sub(), sub());
    }
}

// ---------------------------------------------------------------------------
// Direct loss formulas. Same conventions as the library: degrees entering a
// logarithm are clamped to [eps, 1], implication maps are min-max normalised
// (constant maps become zeros), the scaled variant replaces sums over pixels
// with means and the existence product with a geometric mean.

namespace ref {

constexpr double kEps = 1e-8;

inline double clamp_log(double v) { return std::log(std::clamp(v, kEps, 1.0)); }

inline std::vector<double> minmax(std::span<const double> m) {
    const auto [lo, hi] = std::minmax_element(m.begin(), m.end());
    std::vector<double> out(m.size(), 0.0);
    if (*hi > *lo) {
        for (std::size_t i = 0; i < m.size(); ++i) out[i] = (m[i] - *lo) / (*hi - *lo);
    }
    return out;
}

// -log(1 - prod(1 - a)) or, scaled, -log(1 - exp(mean log(1 - a))).
inline double existence(std::span<const double> a, bool scaled) {
    if (!scaled) {
        double miss = 1.0;
        for (double v : a) miss *= 1.0 - v;
        return -clamp_log(1.0 - miss);
    }
    double acc = 0.0;
    for (double v : a) acc += clamp_log(1.0 - v);
    return -clamp_log(1.0 - std::exp(acc / static_cast<double>(a.size())));
}

// Per-pixel -log terms, summed (paper) or averaged (scaled).
inline double pixel_loss(const std::vector<double>& degrees, bool scaled) {
    double acc = 0.0;
    for (double d : degrees) acc -= clamp_log(d);
    return scaled ? acc / static_cast<double>(degrees.size()) : acc;
}

// forall x. A(x) -> B(x) on normalised maps.
inline double implication(std::span<const double> a, std::span<const double> b, bool scaled) {
    const auto na = minmax(a);
    const auto nb = minmax(b);
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = 1.0 - na[i] * (1.0 - nb[i]);
    return pixel_loss(d, scaled);
}

// forall x. A(x) -> !B(x) on normalised maps.
inline double negative_implication(std::span<const double> a, std::span<const double> b, bool scaled) {
    const auto na = minmax(a);
    const auto nb = minmax(b);
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = 1.0 - na[i] * nb[i];
    return pixel_loss(d, scaled);
}

inline double biimplication(std::span<const double> a, std::span<const double> b, bool scaled) {
    return implication(a, b, scaled) + implication(b, a, scaled);
}

// forall x. X(x) -> A(x) | B(x) on normalised maps.
inline double multicolor(std::span<const double> x, std::span<const double> a, std::span<const double> b,
                         bool scaled) {
    const auto nx = minmax(x);
    const auto na = minmax(a);
    const auto nb = minmax(b);
    std::vector<double> d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = 1.0 - nx[i] * (1.0 - na[i]) * (1.0 - nb[i]);
    return pixel_loss(d, scaled);
}

// !(exists x. S(x)), raw map.
inline double absence(std::span<const double> s, bool scaled) {
    std::vector<double> d(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) d[i] = 1.0 - s[i];
    return pixel_loss(d, scaled);
}

}  // namespace ref

}  // namespace testsupport
