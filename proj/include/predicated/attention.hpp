#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace predicated {

inline constexpr std::string_view kStartOfText = "<sot>";

/// K token-labelled maps of width x height intensities in [0,1].
///
/// Channel 0 is the start-of-text token and must be labelled "<sot>".
/// Pixels are stored row-major (index = y * width + x) and every reduction
/// in the library walks them in that order.
class AttentionStack {
public:
    /// Throws BadShape on inconsistent sizes or a bad channel-0 label,
    /// InvalidArgument for intensities outside [0,1] or, when
    /// `softmax_constrained` is set, pixels whose channel sum is not 1 +- 1e-9.
    AttentionStack(std::vector<std::string> labels, std::size_t width, std::size_t height,
                   std::vector<double> values, bool softmax_constrained = false);

    static AttentionStack uniform(std::vector<std::string> labels, std::size_t width,
                                  std::size_t height, double value);

    std::size_t token_count() const noexcept { return labels_.size(); }
    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return width_ * height_; }

    const std::vector<std::string>& labels() const noexcept { return labels_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<const double> channel(std::size_t token) const;
    double at(std::size_t token, std::size_t pixel) const { return values_[token * pixel_count() + pixel]; }

    bool softmax_constrained() const noexcept { return softmax_constrained_; }
    // Largest |sum_k A_k[i] - 1| over pixels.
    double max_channel_sum_error() const;

    // Exact label match first, then ASCII case-insensitive.
    std::optional<std::size_t> find_token(std::string_view label) const;

    // Copy with one entry replaced. Used by finite-difference checks.
    AttentionStack with_value(std::size_t token, std::size_t pixel, double value) const;

    friend bool operator==(const AttentionStack&, const AttentionStack&) = default;

private:
    std::vector<std::string> labels_;
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<double> values_;
    bool softmax_constrained_ = false;
};

}  // namespace predicated
