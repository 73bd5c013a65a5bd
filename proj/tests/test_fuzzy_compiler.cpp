#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <thread>

#include "predicated/errors.hpp"
#include "predicated/fuzzy_compiler.hpp"
#include "support.hpp"

using namespace predicated;
namespace ref = testsupport::ref;

namespace {

AttentionStack one_map(std::vector<double> p) {
    std::vector<double> values(p.size(), 0.0);
    values.insert(values.end(), p.begin(), p.end());
    const std::size_t n = p.size();
    return AttentionStack({"<sot>", "P"}, n, 1, std::move(values));
}

AttentionStack two_maps(const std::string& a, std::vector<double> va, const std::string& b, std::vector<double> vb) {
    const std::size_t n = va.size();
    std::vector<double> values(n, 0.0);
    values.insert(values.end(), va.begin(), va.end());
    values.insert(values.end(), vb.begin(), vb.end());
    return AttentionStack({"<sot>", a, b}, n, 1, std::move(values));
}

CompileOptions scaled() {
    CompileOptions o;
    o.reduction = ReductionMode::Scaled;
    return o;
}

CompileOptions goedel() {
    CompileOptions o;
    o.backend = LogicBackend::Goedel;
    return o;
}

Evaluation eval(const std::string& dsl, const AttentionStack& s, const CompileOptions& o = {}) {
    const auto p = parse_dsl(dsl);
    return evaluate(compile(p, bind_by_label(p, s), o), s);
}

}  // namespace

// Values below were computed once with 30-digit arithmetic and frozen here.

TEST(Evaluate, ExistencePaper) {
    auto e = eval("exists x. P(x)", one_map({0.5, 0.25}));
    EXPECT_NEAR(e.degree, 0.625, 1e-15);
    EXPECT_NEAR(e.loss, 0.470003629245736, 1e-12);
}

TEST(Evaluate, ExistenceScaled) {
    auto e = eval("exists x. P(x)", one_map({0.5, 0.25}), scaled());
    EXPECT_NEAR(e.degree, 0.387627564304205, 1e-12);
    EXPECT_NEAR(e.loss, 0.947710286158174, 1e-12);
}

TEST(Evaluate, ImplicationOnNormalisedMaps) {
    // Pixels 1 and 2 pin the range to [0,1] and contribute no loss, so pixel 0
    // reads 0.8 and 0.5 after normalisation.
    auto s = two_maps("Dog", {0.8, 1.0, 0.0}, "Black", {0.5, 1.0, 0.0});
    auto e = eval("forall x. Dog(x) -> Black(x)", s);
    EXPECT_NEAR(e.loss, 0.510825623765991, 1e-12);
}

TEST(Evaluate, ImplicationWithoutNormalisation) {
    CompileOptions o;
    o.normalize_implications = false;
    auto e = eval("forall x. Dog(x) -> Black(x)", two_maps("Dog", {0.8}, "Black", {0.5}), o);
    EXPECT_NEAR(e.loss, 0.510825623765991, 1e-12);
    EXPECT_NEAR(e.degree, 0.6, 1e-15);
}

TEST(Evaluate, GoedelConcurrentExistence) {
    auto s = two_maps("Dog", {0.1, 0.7, 0.3}, "Cat", {0.2, 0.4, 0.05});
    auto e = eval("(exists x. Dog(x)) & (exists x. Cat(x))", s, goedel());
    EXPECT_EQ(e.loss, std::max(1.0 - 0.7, 1.0 - 0.4));
    EXPECT_EQ(e.degree, 0.4);
}

TEST(Evaluate, DegreeIsProductOfConjuncts) {
    std::mt19937_64 rng(5);
    auto s = testsupport::random_stack(rng, testsupport::pqr_labels(), 3, 3);
    auto e = eval("(exists x. P(x)) & (forall x. Q(x) -> R(x)) & (exists x. R(x))", s);
    ASSERT_EQ(e.conjuncts.size(), 3u);
    EXPECT_NEAR(e.degree, e.conjuncts[0].degree * e.conjuncts[1].degree * e.conjuncts[2].degree, 1e-15);
    EXPECT_NEAR(e.loss, e.conjuncts[0].loss + e.conjuncts[1].loss + e.conjuncts[2].loss, 1e-12);
}

TEST(Evaluate, ClampKeepsLossFinite) {
    auto e = eval("exists x. P(x)", one_map({0.0, 0.0}));
    EXPECT_EQ(e.degree, 0.0);
    EXPECT_NEAR(e.loss, -std::log(1e-8), 1e-9);
    auto f = eval("forall x. P(x) -> !P(x)", one_map({0.0, 1.0}));
    EXPECT_TRUE(std::isfinite(f.loss));
}

TEST(Evaluate, ExactZeroLossIsPositiveZero) {
    auto e = eval("exists x. P(x)", one_map({1.0, 0.0}));
    EXPECT_EQ(e.loss, 0.0);
    EXPECT_FALSE(std::signbit(e.loss));
}

TEST(Evaluate, MatchesDirectFormulas) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        auto s = testsupport::random_stack(rng, testsupport::pqr_labels(), 3, 2);
        for (bool sc : {false, true}) {
            const auto o = sc ? scaled() : CompileOptions{};
            EXPECT_NEAR(eval("exists x. P(x)", s, o).loss, ref::existence(s.channel(1), sc), 1e-10);
            EXPECT_NEAR(eval("forall x. P(x) -> Q(x)", s, o).loss, ref::implication(s.channel(1), s.channel(2), sc),
                        1e-10);
            EXPECT_NEAR(eval("forall x. P(x) -> Q(x) | R(x)", s, o).loss,
                        ref::multicolor(s.channel(1), s.channel(2), s.channel(3), sc), 1e-10);
            EXPECT_NEAR(eval("!(exists x. R(x))", s, o).loss, ref::absence(s.channel(3), sc), 1e-10);
        }
    }
}

TEST(Evaluate, ShapeMismatch) {
    auto p = parse_dsl("exists x. Q(x)");
    auto g = compile(p, {{"Q", 2}});
    EXPECT_THROW(evaluate(g, one_map({0.1, 0.2})), ShapeMismatch);
}

TEST(Compile, Errors) {
    EXPECT_THROW(compile(parse_dsl("exists x. P(x)"), {}), UnboundPredicate);
    EXPECT_THROW(compile(Proposition::atom("P", "x"), {{"P", 1}}), UnsupportedForm);
    auto cross = Proposition::forall(
        "x", Proposition::exists("y", Proposition::conjunction(Proposition::atom("P", "x"), Proposition::atom("Q", "y"))));
    EXPECT_THROW(compile(cross, {{"P", 1}, {"Q", 2}}), UnsupportedForm);
    EXPECT_THROW(compile(parse_dsl("exists x. P(x)"), {{"P", 0}}), InvalidArgument);
    EXPECT_THROW(compile(parse_dsl("exists x. P(x) & Q(x)"), {{"P", 1}, {"Q", 1}}), InvalidArgument);
    CompileOptions bad;
    bad.alpha = 1.5;
    EXPECT_THROW(compile(parse_dsl("exists x. P(x)"), {{"P", 1}}, bad), InvalidArgument);
}

TEST(Compile, NormalizationSet) {
    auto p = parse_dsl("(exists x. Dog(x)) & (forall x. Dog(x) -> Black(x)) & (exists x. Cat(x))");
    auto g = compile(p, {{"Dog", 1}, {"Black", 2}, {"Cat", 3}});
    EXPECT_EQ(g.normalization_set(), (std::set<std::size_t>{1, 2}));
    EXPECT_EQ(g.referenced_tokens(), (std::set<std::size_t>{1, 2, 3}));
    auto h = compile(parse_dsl("exists x. Dog(x)"), {{"Dog", 1}});
    EXPECT_TRUE(h.normalization_set().empty());
}

TEST(Compile, GraphIsTopologicalAndAvoidsStartOfText) {
    for (const auto& text : testsupport::corpus()) {
        for (auto o : {CompileOptions{}, scaled(), goedel()}) {
            auto g = compile(parse_dsl(text), testsupport::pqr_binding(), o);
            for (std::size_t id = 0; id < g.nodes().size(); ++id) {
                for (auto in : g.node(id).inputs) ASSERT_LT(in, id) << text;
                if (g.node(id).op == Op::Leaf) {
                    ASSERT_NE(g.node(id).token, 0u);
                }
            }
            ASSERT_LT(g.loss_root(), g.nodes().size());
        }
    }
}

TEST(Compile, ConjunctSplitting) {
    auto g = compile(parse_dsl("forall x. (P(x) <-> Q(x)) & R(x)"), testsupport::pqr_binding());
    EXPECT_EQ(g.conjuncts().size(), 3u);
    auto h = compile(parse_dsl("forall x. P(x) -> !Q(x)"), testsupport::pqr_binding());
    ASSERT_EQ(h.conjuncts().size(), 1u);
    EXPECT_TRUE(h.conjuncts()[0].implicit_negative);
    EXPECT_EQ(h.conjuncts()[0].weight, 0.3);
}

TEST(NormalizeMap, Examples) {
    auto a = normalize_map(std::vector<double>{0.2, 0.6, 1.0});
    EXPECT_NEAR(a[0], 0.0, 1e-15);
    EXPECT_NEAR(a[1], 0.5, 1e-15);
    EXPECT_NEAR(a[2], 1.0, 1e-15);
    EXPECT_EQ(normalize_map(std::vector<double>{0.7, 0.7}), (std::vector<double>{0.0, 0.0}));
    EXPECT_EQ(normalize_map(std::vector<double>{0.0, 1.0}), (std::vector<double>{0.0, 1.0}));
}

TEST(Oracle, Examples) {
    EXPECT_TRUE(crisp_oracle(parse_dsl("exists x. P(x)"), one_map({1, 0})));
    EXPECT_FALSE(crisp_oracle(parse_dsl("forall x. P(x) -> Q(x)"), two_maps("P", {1, 0}, "Q", {0, 0})));
    EXPECT_TRUE(crisp_oracle(parse_dsl("!(exists x. P(x))"), one_map({0, 0, 0})));
    EXPECT_THROW(crisp_oracle(parse_dsl("exists x. P(x)"), one_map({0.5, 0})), NonCrispInput);
}

TEST(Oracle, AgreesWithProductDegreeOnSmallStacks) {
    CompileOptions o;
    o.normalize_implications = false;
    const auto binding = testsupport::pqr_binding();
    for (const auto& text : testsupport::corpus()) {
        const auto p = parse_dsl(text);
        const auto g = compile(p, binding, o);
        // 2 pixels x 3 predicates; the acceptance run covers up to 4 pixels.
        for (unsigned bits = 0; bits < 64; ++bits) {
            std::vector<double> v(8, 0.0);
            for (int k = 0; k < 6; ++k) v[2 + k] = (bits >> k) & 1u;
            AttentionStack s(testsupport::pqr_labels(), 2, 1, v);
            ASSERT_EQ(evaluate(g, s).degree, crisp_oracle(p, binding, s) ? 1.0 : 0.0) << text << " bits=" << bits;
        }
    }
}

TEST(Laws, DeMorganPixelwise) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
        auto s = testsupport::random_stack(rng, testsupport::pqr_labels(), 1, 1);
        EXPECT_NEAR(eval("forall x. !(P(x) & Q(x))", s).degree, eval("forall x. !P(x) | !Q(x)", s).degree, 1e-12);
    }
}

TEST(Laws, QuantifierDuality) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
        auto s = testsupport::random_stack(rng, testsupport::pqr_labels(), 4, 4);
        EXPECT_NEAR(eval("exists x. P(x)", s).degree, eval("!(forall x. !P(x))", s).degree, 1e-12);
    }
}

TEST(Laws, LossAdditivity) {
    std::mt19937_64 rng(3);
    const auto& c = testsupport::corpus();
    std::uniform_int_distribution<std::size_t> pick(0, c.size() - 1);
    for (int i = 0; i < 200; ++i) {
        auto r1 = parse_dsl(c[pick(rng)]);
        auto r2 = parse_dsl(c[pick(rng)]);
        auto s = testsupport::random_stack(rng, testsupport::pqr_labels(), 3, 3);
        auto b = testsupport::pqr_binding();
        for (auto o : {CompileOptions{}, scaled()}) {
            const double both = evaluate(compile(Proposition::conjunction(r1, r2), b, o), s).loss;
            const double sum = evaluate(compile(r1, b, o), s).loss + evaluate(compile(r2, b, o), s).loss;
            EXPECT_NEAR(both, sum, 1e-10);
        }
    }
}

TEST(Laws, VacuousImplication) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        auto s = testsupport::random_stack(rng, testsupport::pqr_labels(), 3, 3);
        const double level = u(rng);
        for (std::size_t px = 0; px < 9; ++px) s = s.with_value(1, px, level);
        EXPECT_EQ(eval("forall x. P(x) -> Q(x)", s).loss, 0.0);
        EXPECT_EQ(eval("forall x. P(x) -> !R(x)", s, scaled()).loss, 0.0);
    }
}

TEST(Laws, ExistenceMonotone) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> px(0, 8);
    for (int i = 0; i < 200; ++i) {
        auto s = testsupport::random_stack(rng, testsupport::pqr_labels(), 3, 3);
        const auto k = px(rng);
        const double v = s.at(1, k);
        auto t = s.with_value(1, k, v + (1.0 - v) * u(rng));
        for (auto o : {CompileOptions{}, scaled(), goedel()}) {
            EXPECT_LE(eval("exists x. P(x)", t, o).loss, eval("exists x. P(x)", s, o).loss);
        }
    }
}

TEST(Laws, GoedelReproducesAttendAndExcite) {
    std::mt19937_64 rng(6);
    for (int i = 0; i < 200; ++i) {
        auto s = testsupport::random_stack(rng, {"<sot>", "Dog", "Cat"}, 4, 4);
        auto d = s.channel(1);
        auto c = s.channel(2);
        const double expect = std::max(1.0 - *std::max_element(d.begin(), d.end()),
                                       1.0 - *std::max_element(c.begin(), c.end()));
        EXPECT_EQ(eval("(exists x. Dog(x)) & (exists x. Cat(x))", s, goedel()).loss, expect);
    }
}

TEST(Laws, ZeroAlphaDropsNegativeImplications) {
    std::mt19937_64 rng(7);
    const std::vector<std::string> labels{"<sot>", "Black", "Dog", "White", "Cat"};
    const auto full = parse_dsl(
        "(exists x. Dog(x)) & (exists x. Cat(x)) & (forall x. Dog(x) <-> Black(x)) & (forall x. Cat(x) <-> White(x)) "
        "& (forall x. Dog(x) -> !White(x)) & (forall x. Cat(x) -> !Black(x))");
    const auto kept = parse_dsl(
        "(exists x. Dog(x)) & (exists x. Cat(x)) & (forall x. Dog(x) <-> Black(x)) & (forall x. Cat(x) <-> White(x))");
    for (int i = 0; i < 100; ++i) {
        auto s = testsupport::random_stack(rng, labels, 3, 3);
        for (auto o : {CompileOptions{}, scaled()}) {
            o.alpha = 0.0;
            EXPECT_NEAR(evaluate(compile(full, bind_by_label(full, s), o), s).loss,
                        evaluate(compile(kept, bind_by_label(kept, s), o), s).loss, 1e-12);
        }
    }
}

TEST(Determinism, RepeatedAndConcurrentEvaluation) {
    std::mt19937_64 rng(8);
    auto s = testsupport::random_stack(rng, testsupport::pqr_labels(), 8, 8);
    auto g = compile(parse_dsl(testsupport::corpus()[19]), testsupport::pqr_binding());
    const double expected = evaluate(g, s).loss;
    std::vector<double> seen(8);
    std::vector<std::thread> pool;
    for (int t = 0; t < 8; ++t) pool.emplace_back([&, t] { seen[t] = evaluate(g, s).loss; });
    for (auto& th : pool) th.join();
    for (double v : seen) EXPECT_EQ(v, expected);
}

TEST(Names, BackendAndReduction) {
    EXPECT_EQ(parse_backend("goedel"), LogicBackend::Goedel);
    EXPECT_EQ(parse_reduction("scaled"), ReductionMode::Scaled);
    EXPECT_EQ(to_string(parse_reduction("paper")), "paper");
    EXPECT_THROW(parse_backend("lukasiewicz"), InvalidArgument);
}
