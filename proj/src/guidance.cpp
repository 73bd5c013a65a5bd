#include "predicated/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "predicated/errors.hpp"

namespace predicated {

void GuidanceConfig::validate() const {
    if (guided_steps > total_steps) throw InvalidArgument("guided_steps must not exceed total_steps");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("learning_rate must be >= 0");
    if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) throw InvalidArgument("noise_scale must be >= 0");
    if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) throw InvalidArgument("init_scale must be >= 0");
}

LogitField::LogitField(std::vector<std::string> labels, std::size_t width, std::size_t height,
                       std::vector<double> values)
    : labels_(std::move(labels)), width_(width), height_(height), values_(std::move(values)) {
    if (labels_.size() < 2 || labels_.front() != kStartOfText) {
        throw BadShape("logits need a <sot> channel followed by at least one word channel");
    }
    if (width_ == 0 || height_ == 0) throw BadShape("logit maps need at least one pixel");
    if (values_.size() != labels_.size() * pixel_count()) throw BadShape("logit value count does not match shape");
}

AttentionStack LogitField::softmax() const {
    const std::size_t n = pixel_count();
    const std::size_t k = token_count();
    std::vector<double> out(values_.size());
    for (std::size_t i = 0; i < n; ++i) {
        double top = at(0, i);
        for (std::size_t t = 1; t < k; ++t) top = std::max(top, at(t, i));
        double sum = 0.0;
        for (std::size_t t = 0; t < k; ++t) {
            const double e = std::exp(at(t, i) - top);
            out[t * n + i] = e;
            sum += e;
        }
        for (std::size_t t = 0; t < k; ++t) out[t * n + i] /= sum;
    }
    return AttentionStack(labels_, width_, height_, std::move(out), true);
}

LogitField init_logits(const GuidanceConfig& cfg, std::vector<std::string> labels, std::size_t width,
                       std::size_t height) {
    if (labels.size() < 2) throw BadShape("need <sot> plus at least one word channel");
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> values(labels.size() * width * height);
    for (double& v : values) v = cfg.init_scale * normal(rng);
    return LogitField(std::move(labels), width, height, std::move(values));
}

std::vector<double> logit_gradient(const LossGraph& graph, const LogitField& logits) {
    const AttentionStack probs = logits.softmax();
    const GradientField g = gradient(graph, probs);
    const std::size_t n = logits.pixel_count();
    const std::size_t k = logits.token_count();
    std::vector<double> out(k * n, 0.0);
    // d/dz_t = a_t (g_t - sum_j a_j g_j)
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        for (std::size_t t = 0; t < k; ++t) mean += probs.at(t, i) * g.at(t, i);
        for (std::size_t t = 0; t < k; ++t) out[t * n + i] = probs.at(t, i) * (g.at(t, i) - mean);
    }
    return out;
}

LogitField guidance_step(const LogitField& logits, const LossGraph& graph, double lr) {
    if (lr == 0.0) return logits;
    const auto grad = logit_gradient(graph, logits);
    std::vector<double> next(logits.values().begin(), logits.values().end());
    for (std::size_t i = 0; i < next.size(); ++i) next[i] -= lr * grad[i];
    return LogitField(logits.labels(), logits.width(), logits.height(), std::move(next));
}

GradientReport check_logit_gradient(const LossGraph& graph, const LogitField& logits, double h, double tol) {
    if (!(h >= 1e-7 && h <= 1e-3)) throw InvalidArgument("finite-difference step must lie in [1e-7, 1e-3]");
    const AttentionStack probs = logits.softmax();
    const Tape tape = forward(graph, probs);
    require_smooth_neighbourhood(tape, h);
    const auto analytic = logit_gradient(graph, logits);

    std::vector<double> scratch(logits.values().begin(), logits.values().end());
    auto loss_at = [&](std::size_t idx, double delta) {
        const double saved = scratch[idx];
        scratch[idx] = saved + delta;
        const LogitField perturbed(logits.labels(), logits.width(), logits.height(), scratch);
        scratch[idx] = saved;
        return loss_terms(graph, forward(graph, perturbed.softmax()));
    };
    return compare_with_central_differences(analytic, logits.pixel_count(), h, tol, loss_at);
}

namespace {

StepRecord record(long step, bool guided, const Evaluation& e) {
    StepRecord r;
    r.step = step;
    r.guided = guided;
    r.loss = e.loss;
    r.degree = e.degree;
    for (const auto& c : e.conjuncts) {
        r.conjunct_losses.push_back(c.loss);
        r.conjunct_degrees.push_back(c.degree);
    }
    return r;
}

}  // namespace

Trajectory run(const GuidanceConfig& cfg, const LossGraph& graph, std::vector<std::string> labels,
               std::size_t width, std::size_t height) {
    cfg.validate();
    LogitField logits = init_logits(cfg, std::move(labels), width, height);
    const AttentionStack initial_stack = logits.softmax();
    Trajectory traj{{}, evaluate(graph, initial_stack), logits, logits, initial_stack, initial_stack};

    std::seed_seq noise_seed{cfg.seed, std::uint64_t{0x6e6f697365}};
    std::mt19937_64 noise_rng(noise_seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    const bool guidance_enabled = cfg.guided_steps > 0;
    const long rounds = static_cast<long>(cfg.refinement_rounds);
    for (long r = 0; r < rounds; ++r) {
        if (guidance_enabled) logits = guidance_step(logits, graph, cfg.learning_rate);
        traj.records.push_back(record(r - rounds + 1, guidance_enabled, evaluate(graph, logits.softmax())));
    }
    for (std::size_t t = 1; t <= cfg.total_steps; ++t) {
        const bool guided = t <= cfg.guided_steps;
        if (guided) {
            logits = guidance_step(logits, graph, cfg.learning_rate);
        } else if (cfg.noise_scale > 0.0) {
            std::vector<double> next(logits.values().begin(), logits.values().end());
            for (double& v : next) v += cfg.noise_scale * normal(noise_rng);
            logits = LogitField(logits.labels(), width, height, std::move(next));
        }
        traj.records.push_back(record(static_cast<long>(t), guided, evaluate(graph, logits.softmax())));
    }
    traj.final_logits = logits;
    traj.final_stack = logits.softmax();
    return traj;
}

std::string_view to_string(ImplicationDirection d) {
    switch (d) {
        case ImplicationDirection::NounToAdj: return "NounToAdj";
        case ImplicationDirection::AdjToNoun: return "AdjToNoun";
        case ImplicationDirection::ObjToSubj: return "ObjToSubj";
        case ImplicationDirection::SubjToObj: return "SubjToObj";
        case ImplicationDirection::Biimplication: return "Biimplication";
    }
    return "?";
}

ImplicationDirection parse_implication_direction(std::string_view text) {
    for (auto d : {ImplicationDirection::NounToAdj, ImplicationDirection::AdjToNoun, ImplicationDirection::ObjToSubj,
                   ImplicationDirection::SubjToObj, ImplicationDirection::Biimplication}) {
        if (to_string(d) == text) return d;
    }
    throw InvalidArgument("unknown implication direction '" + std::string(text) + "'");
}

Proposition ablate_implication_direction(const std::string& first, const std::string& second,
                                         ImplicationDirection direction) {
    auto a = Proposition::atom(first, "x");
    auto b = Proposition::atom(second, "x");
    switch (direction) {
        case ImplicationDirection::NounToAdj:
        case ImplicationDirection::ObjToSubj: return Proposition::forall("x", Proposition::implication(a, b));
        case ImplicationDirection::AdjToNoun:
        case ImplicationDirection::SubjToObj: return Proposition::forall("x", Proposition::implication(b, a));
        case ImplicationDirection::Biimplication: return Proposition::forall("x", Proposition::biimplication(a, b));
    }
    throw InvalidArgument("unknown implication direction");
}

double containment(const AttentionStack& stack, std::size_t antecedent, std::size_t consequent) {
    const auto a = normalize_map(stack.channel(antecedent));
    const auto c = normalize_map(stack.channel(consequent));
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * (1.0 - c[i]);
    return sum / static_cast<double>(a.size());
}

std::size_t argmax_pixel_count(const AttentionStack& stack, std::size_t token) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < stack.pixel_count(); ++i) {
        std::size_t best = 1;
        for (std::size_t t = 2; t < stack.token_count(); ++t) {
            if (stack.at(t, i) > stack.at(best, i)) best = t;
        }
        if (best == token) ++count;
    }
    return count;
}

}  // namespace predicated
