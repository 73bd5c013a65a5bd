#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "predicated/attention.hpp"
#include "predicated/autodiff.hpp"
#include "predicated/fuzzy_compiler.hpp"
#include "predicated/logic_ast.hpp"

namespace predicated {

struct GuidanceConfig {
    std::size_t total_steps = 50;
    std::size_t guided_steps = 25;
    std::size_t refinement_rounds = 4;
    double learning_rate = 0.1;
    double noise_scale = 0.0;  // std of the logit perturbation on unguided steps
    double init_scale = 1.0;   // std of the initial logits
    std::uint64_t seed = 0;
    CompileOptions compile;

    // Throws InvalidArgument.
    void validate() const;
};

/// Per-pixel logits over the token axis; softmax() turns them into an
/// AttentionStack whose channels sum to one at every pixel.
class LogitField {
public:
    LogitField(std::vector<std::string> labels, std::size_t width, std::size_t height, std::vector<double> values);

    std::size_t token_count() const noexcept { return labels_.size(); }
    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return width_ * height_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    std::span<const double> values() const noexcept { return values_; }
    double at(std::size_t token, std::size_t pixel) const { return values_[token * pixel_count() + pixel]; }

    AttentionStack softmax() const;

    friend bool operator==(const LogitField&, const LogitField&) = default;

private:
    std::vector<std::string> labels_;
    std::size_t width_;
    std::size_t height_;
    std::vector<double> values_;
};

/// Standard normal logits scaled by cfg.init_scale, drawn from cfg.seed.
/// `labels` must start with "<sot>" and name at least one word (BadShape).
LogitField init_logits(const GuidanceConfig& cfg, std::vector<std::string> labels, std::size_t width,
                       std::size_t height);

// d loss / d logits, chained through the per-pixel channel softmax.
std::vector<double> logit_gradient(const LossGraph& graph, const LogitField& logits);

/// logits - lr * d loss / d logits.
LogitField guidance_step(const LogitField& logits, const LossGraph& graph, double lr);

GradientReport check_logit_gradient(const LossGraph& graph, const LogitField& logits, double h = 1e-5,
                                    double tol = 1e-4);

struct StepRecord {
    long step = 0;  // refinement rounds are numbered -R+1..0, reverse steps 1..T
    bool guided = false;
    double loss = 0.0;
    double degree = 0.0;
    std::vector<double> conjunct_losses;
    std::vector<double> conjunct_degrees;
};

struct Trajectory {
    std::vector<StepRecord> records;  // state after each step
    Evaluation initial;
    LogitField initial_logits;
    LogitField final_logits;
    AttentionStack initial_stack;
    AttentionStack final_stack;
};

/// Runs refinement_rounds guided updates, then total_steps reverse steps of
/// which the first guided_steps are guided and the rest only perturb the
/// logits with seeded noise. Refinement is skipped when guided_steps == 0.
Trajectory run(const GuidanceConfig& cfg, const LossGraph& graph, std::vector<std::string> labels,
               std::size_t width, std::size_t height);

enum class ImplicationDirection { NounToAdj, AdjToNoun, ObjToSubj, SubjToObj, Biimplication };

std::string_view to_string(ImplicationDirection d);
ImplicationDirection parse_implication_direction(std::string_view text);

/// Implication variants for the direction ablation. The pair is given as
/// (noun, adjective) or (object, subject): NounToAdj and ObjToSubj produce
/// forall x. first(x) -> second(x), the reversed directions swap the
/// operands, and Biimplication yields forall x. first(x) <-> second(x).
Proposition ablate_implication_direction(const std::string& first, const std::string& second,
                                         ImplicationDirection direction);

/// mean_i norm(A_antecedent)[i] * (1 - norm(A_consequent)[i]); zero when the
/// antecedent's normalised support lies inside the consequent's.
double containment(const AttentionStack& stack, std::size_t antecedent, std::size_t consequent);

// Number of pixels whose largest non-<sot> channel is `token`.
std::size_t argmax_pixel_count(const AttentionStack& stack, std::size_t token);

}  // namespace predicated
