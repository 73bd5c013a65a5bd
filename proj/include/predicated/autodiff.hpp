#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "predicated/attention.hpp"
#include "predicated/fuzzy_compiler.hpp"

namespace predicated {

/// d loss / d A_token[pixel], laid out like the AttentionStack it came from.
class GradientField {
public:
    GradientField(std::vector<std::string> labels, std::size_t width, std::size_t height);

    std::size_t token_count() const noexcept { return labels_.size(); }
    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return width_ * height_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    std::span<const double> channel(std::size_t token) const;
    double at(std::size_t token, std::size_t pixel) const { return values_[token * pixel_count() + pixel]; }
    double& at(std::size_t token, std::size_t pixel) { return values_[token * pixel_count() + pixel]; }

private:
    std::vector<std::string> labels_;
    std::size_t width_;
    std::size_t height_;
    std::vector<double> values_;
};

/// Exact reverse-mode derivatives of the graph's loss with respect to every
/// intensity of `stack`. Min/max selections route to the lowest index among
/// ties, clamped logarithms contribute zero.
GradientField gradient(const LossGraph& graph, const AttentionStack& stack);

/// Same as gradient(), reusing a tape produced by forward().
GradientField gradient(const LossGraph& graph, const AttentionStack& stack, const Tape& tape);

struct GradientEntryError {
    std::size_t token = 0;
    std::size_t pixel = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double relative_error = 0.0;
};

struct GradientReport {
    bool passed = false;
    double step = 0.0;
    double tolerance = 0.0;
    std::size_t checked = 0;
    double max_relative_error = 0.0;
    std::optional<GradientEntryError> worst;
    std::vector<GradientEntryError> offending;  // entries above tolerance
};

// |a - n| / max(1e-8, |a| + |n|)
double relative_error(double analytic, double numeric);

/// Compares gradient() against central differences with step `h`.
///
/// Throws BoundaryInput when an entry lies within `h` of 0 or 1, or when the
/// stack sits so close to a clamp threshold or a min/max tie inside the graph
/// that a step of `h` would cross it.
GradientReport check_gradient(const LossGraph& graph, const AttentionStack& stack, double h = 1e-5,
                              double tol = 1e-4);

// Shared by the logit-space check in guidance.hpp.
GradientReport compare_with_central_differences(std::span<const double> analytic, std::size_t pixels,
                                                double h, double tol,
                                                const std::function<std::vector<double>(std::size_t, double)>& loss_at);

// Loss as the weighted conjunct terms whose sum it is (a single term for the Goedel root).
std::vector<double> loss_terms(const LossGraph& graph, const Tape& tape);

// Refuses inputs whose tape is within reach of a non-differentiable point.
void require_smooth_neighbourhood(const Tape& tape, double h);

}  // namespace predicated
