#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "predicated/errors.hpp"
#include "predicated/guidance.hpp"
#include "support.hpp"

using namespace predicated;

namespace {

const std::vector<std::string> kDogCat{"<sot>", "Dog", "Cat"};

LossGraph dog_and_cat(CompileOptions o = {}) {
    return compile(parse_dsl("(exists x. Dog(x)) & (exists x. Cat(x))"), {{"Dog", 1}, {"Cat", 2}}, o);
}

}  // namespace

TEST(InitLogits, Deterministic) {
    GuidanceConfig cfg;
    cfg.seed = 42;
    EXPECT_EQ(init_logits(cfg, kDogCat, 8, 8), init_logits(cfg, kDogCat, 8, 8));
    GuidanceConfig other = cfg;
    other.seed = 43;
    EXPECT_NE(init_logits(cfg, kDogCat, 8, 8), init_logits(other, kDogCat, 8, 8));
}

TEST(InitLogits, ZeroScaleGivesUniformStack) {
    GuidanceConfig cfg;
    cfg.init_scale = 0.0;
    auto s = init_logits(cfg, kDogCat, 4, 4).softmax();
    for (double v : s.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
    EXPECT_TRUE(s.softmax_constrained());
}

TEST(InitLogits, BadShape) {
    GuidanceConfig cfg;
    EXPECT_THROW(init_logits(cfg, {"<sot>"}, 4, 4), BadShape);
    EXPECT_THROW(init_logits(cfg, {"Dog", "Cat"}, 4, 4), BadShape);
    EXPECT_THROW(init_logits(cfg, kDogCat, 0, 4), BadShape);
}

TEST(GuidanceStep, ZeroLearningRateIsIdentity) {
    GuidanceConfig cfg;
    auto z = init_logits(cfg, kDogCat, 4, 4);
    EXPECT_EQ(guidance_step(z, dog_and_cat(), 0.0), z);
}

TEST(GuidanceStep, OneStepDescends) {
    LogitField z({"<sot>", "P"}, 2, 2, std::vector<double>(8, 0.0));
    auto g = compile(parse_dsl("exists x. P(x)"), {{"P", 1}});
    const double before = evaluate(g, z.softmax()).loss;
    const double after = evaluate(g, guidance_step(z, g, 0.1).softmax()).loss;
    EXPECT_GT(before, 0.0);
    EXPECT_LT(after, before);
}

TEST(GuidanceStep, LogitGradientMatchesFiniteDifferences) {
    GuidanceConfig cfg;
    cfg.seed = 9;
    const std::vector<std::string> labels{"<sot>", "Bird", "Green", "Grey"};
    auto z = init_logits(cfg, labels, 6, 6);
    for (auto mode : {ReductionMode::PaperFaithful, ReductionMode::Scaled}) {
        CompileOptions o;
        o.reduction = mode;
        auto p = parse_dsl("(exists x. Bird(x)) & (forall x. Bird(x) -> Green(x) | Grey(x))");
        auto g = compile(p, {{"Bird", 1}, {"Green", 2}, {"Grey", 3}}, o);
        auto report = check_logit_gradient(g, z, 1e-5, 1e-4);
        EXPECT_TRUE(report.passed) << report.max_relative_error;
    }
}

TEST(GuidanceStep, StartOfTextLogitsStillMoveThroughSoftmax) {
    // The <sot> channel is never read, yet its logits receive gradient via the
    // per-pixel normalisation.
    GuidanceConfig cfg;
    auto z = init_logits(cfg, kDogCat, 3, 3);
    auto grad = logit_gradient(dog_and_cat(), z);
    double sot = 0.0;
    for (std::size_t i = 0; i < 9; ++i) sot += std::abs(grad[i]);
    EXPECT_GT(sot, 0.0);
    for (std::size_t i = 0; i < 9; ++i) {
        EXPECT_NEAR(grad[i] + grad[9 + i] + grad[18 + i], 0.0, 1e-12);
    }
}

TEST(Run, RecordCountAndNumbering) {
    GuidanceConfig cfg;
    cfg.total_steps = 7;
    cfg.guided_steps = 3;
    cfg.refinement_rounds = 2;
    auto t = run(cfg, dog_and_cat(), kDogCat, 4, 4);
    ASSERT_EQ(t.records.size(), 9u);
    EXPECT_EQ(t.records.front().step, -1);
    EXPECT_EQ(t.records[1].step, 0);
    EXPECT_EQ(t.records[2].step, 1);
    EXPECT_TRUE(t.records[4].guided);
    EXPECT_FALSE(t.records[5].guided);
    EXPECT_EQ(t.records.back().step, 7);
    EXPECT_EQ(t.records.back().conjunct_losses.size(), 2u);
}

TEST(Run, NoGuidanceNoNoiseKeepsInitialStack) {
    GuidanceConfig cfg;
    cfg.guided_steps = 0;
    cfg.noise_scale = 0.0;
    auto t = run(cfg, dog_and_cat(), kDogCat, 8, 8);
    EXPECT_EQ(t.final_stack, t.initial_stack);
    EXPECT_EQ(t.final_logits, t.initial_logits);
}

TEST(Run, NoiseOnlyOnUnguidedSteps) {
    GuidanceConfig cfg;
    cfg.total_steps = 5;
    cfg.guided_steps = 5;
    cfg.refinement_rounds = 0;
    cfg.learning_rate = 0.0;
    cfg.noise_scale = 1.0;
    auto t = run(cfg, dog_and_cat(), kDogCat, 4, 4);
    EXPECT_EQ(t.final_logits, t.initial_logits);
    cfg.guided_steps = 4;
    auto u = run(cfg, dog_and_cat(), kDogCat, 4, 4);
    EXPECT_NE(u.final_logits, u.initial_logits);
}

TEST(Run, Deterministic) {
    GuidanceConfig cfg;
    cfg.seed = 5;
    cfg.noise_scale = 0.3;
    cfg.learning_rate = 0.5;
    auto a = run(cfg, dog_and_cat(), kDogCat, 8, 8);
    auto b = run(cfg, dog_and_cat(), kDogCat, 8, 8);
    EXPECT_EQ(a.final_logits, b.final_logits);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_EQ(a.records[i].loss, b.records[i].loss);
        EXPECT_EQ(a.records[i].conjunct_losses, b.records[i].conjunct_losses);
    }
}

TEST(Run, InvalidConfig) {
    GuidanceConfig cfg;
    cfg.guided_steps = cfg.total_steps + 1;
    EXPECT_THROW(run(cfg, dog_and_cat(), kDogCat, 4, 4), InvalidArgument);
    cfg = GuidanceConfig{};
    cfg.learning_rate = -1.0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(Run, DescentAndChannelConservationOnCorpus) {
    // Min-max normalisation makes the loss only piecewise smooth and a fixed
    // step can then overshoot a kink, so descent is asserted on raw maps.
    const auto labels = testsupport::pqr_labels();
    CompileOptions o;
    o.normalize_implications = false;
    for (const auto& text : testsupport::corpus()) {
        auto g = compile(parse_dsl(text), testsupport::pqr_binding(), o);
        GuidanceConfig cfg;
        cfg.seed = 3;
        auto z = init_logits(cfg, labels, 8, 8);
        double prev = evaluate(g, z.softmax()).loss;
        for (int step = 0; step < 29; ++step) {
            z = guidance_step(z, g, 0.1);
            const auto s = z.softmax();
            ASSERT_LE(s.max_channel_sum_error(), 1e-9);
            const double loss = evaluate(g, s).loss;
            ASSERT_LE(loss, prev + 1e-12) << text << " step " << step;
            prev = loss;
        }
    }
}

TEST(Run, ConcurrentExistenceConvergesAndCompetes) {
    GuidanceConfig cfg;
    cfg.learning_rate = 0.5;
    auto t = run(cfg, dog_and_cat(), kDogCat, 16, 16);
    const auto e = evaluate(dog_and_cat(), t.final_stack);
    for (const auto& c : e.conjuncts) EXPECT_GE(c.degree, 0.9);
    EXPECT_GE(argmax_pixel_count(t.final_stack, 1), 1u);
    EXPECT_GE(argmax_pixel_count(t.final_stack, 2), 1u);
}

TEST(Run, SuppressedChannelRecovers) {
    // Cat starts far below Dog everywhere; guidance has to lift it.
    GuidanceConfig cfg;
    auto z = init_logits(cfg, kDogCat, 4, 4);
    std::vector<double> v(z.values().begin(), z.values().end());
    for (std::size_t i = 0; i < 16; ++i) v[32 + i] -= 8.0;
    z = LogitField(kDogCat, 4, 4, v);
    const auto g = dog_and_cat();
    const double start = evaluate(g, z.softmax()).conjuncts[1].degree;
    ASSERT_LT(start, 0.05);
    for (int step = 0; step < 29; ++step) z = guidance_step(z, g, 0.5);
    const auto s = z.softmax();
    EXPECT_GE(evaluate(g, s).conjuncts[1].degree, 0.9);
    EXPECT_GE(argmax_pixel_count(s, 2), 1u);
}

TEST(Run, PossessionContainment) {
    GuidanceConfig cfg;
    cfg.learning_rate = 2.0;
    auto p = ablate_implication_direction("Bag", "Man", ImplicationDirection::ObjToSubj);
    auto g = compile(p, {{"Bag", 1}, {"Man", 2}});
    auto t = run(cfg, g, {"<sot>", "Bag", "Man"}, 16, 16);
    EXPECT_LE(containment(t.final_stack, 1, 2), 0.05);
}

TEST(Ablation, Variants) {
    EXPECT_EQ(print_dsl(ablate_implication_direction("Bag", "Man", ImplicationDirection::ObjToSubj)),
              "forall x. Bag(x) -> Man(x)");
    EXPECT_EQ(print_dsl(ablate_implication_direction("Dog", "Black", ImplicationDirection::Biimplication)),
              "forall x. Dog(x) <-> Black(x)");
    EXPECT_EQ(print_dsl(ablate_implication_direction("Bag", "Man", ImplicationDirection::SubjToObj)),
              "forall x. Man(x) -> Bag(x)");
    EXPECT_EQ(print_dsl(ablate_implication_direction("Dog", "Black", ImplicationDirection::AdjToNoun)),
              "forall x. Black(x) -> Dog(x)");
    EXPECT_EQ(parse_implication_direction("NounToAdj"), ImplicationDirection::NounToAdj);
    EXPECT_THROW(parse_implication_direction("Sideways"), InvalidArgument);
}

TEST(Metrics, Containment) {
    // A's support {0} lies inside B's support {0,1}.
    AttentionStack s({"<sot>", "A", "B"}, 3, 1, {0, 0, 0, 1, 0, 0, 1, 1, 0});
    EXPECT_EQ(containment(s, 1, 2), 0.0);
    EXPECT_NEAR(containment(s, 2, 1), 1.0 / 3.0, 1e-15);
    EXPECT_EQ(argmax_pixel_count(s, 1), 2u);  // ties go to the lower channel
    EXPECT_EQ(argmax_pixel_count(s, 2), 1u);
}
