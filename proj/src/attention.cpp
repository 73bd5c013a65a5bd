#include "predicated/attention.hpp"

#include <cctype>
#include <cmath>

#include "predicated/errors.hpp"

namespace predicated {

AttentionStack::AttentionStack(std::vector<std::string> labels, std::size_t width, std::size_t height,
                               std::vector<double> values, bool softmax_constrained)
    : labels_(std::move(labels)),
      width_(width),
      height_(height),
      values_(std::move(values)),
      softmax_constrained_(softmax_constrained) {
    if (labels_.empty() || labels_.front() != kStartOfText) {
        throw BadShape("channel 0 must be labelled <sot>");
    }
    if (width_ == 0 || height_ == 0) throw BadShape("attention maps need at least one pixel");
    if (values_.size() != labels_.size() * pixel_count()) {
        throw BadShape("expected " + std::to_string(labels_.size() * pixel_count()) + " intensities, got " +
                       std::to_string(values_.size()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const double v = values_[i];
        if (!(v >= 0.0 && v <= 1.0)) {
            throw InvalidArgument("intensity " + std::to_string(v) + " at channel " +
                                  std::to_string(i / pixel_count()) + " pixel " +
                                  std::to_string(i % pixel_count()) + " is outside [0,1]");
        }
    }
    if (softmax_constrained_ && max_channel_sum_error() > 1e-9) {
        throw InvalidArgument("softmax-constrained stack has a pixel whose channel sum is not 1");
    }
}

AttentionStack AttentionStack::uniform(std::vector<std::string> labels, std::size_t width,
                                       std::size_t height, double value) {
    const std::size_t n = labels.size() * width * height;
    return AttentionStack(std::move(labels), width, height, std::vector<double>(n, value));
}

std::span<const double> AttentionStack::channel(std::size_t token) const {
    if (token >= token_count()) {
        throw ShapeMismatch("channel " + std::to_string(token) + " requested from a stack with " +
                            std::to_string(token_count()) + " channels");
    }
    return std::span<const double>(values_).subspan(token * pixel_count(), pixel_count());
}

double AttentionStack::max_channel_sum_error() const {
    const std::size_t n = pixel_count();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t k = 0; k < token_count(); ++k) sum += at(k, i);
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    return worst;
}

std::optional<std::size_t> AttentionStack::find_token(std::string_view label) const {
    for (std::size_t k = 0; k < labels_.size(); ++k) {
        if (labels_[k] == label) return k;
    }
    auto lower = [](std::string_view s) {
        std::string out(s);
        for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return out;
    };
    const std::string wanted = lower(label);
    for (std::size_t k = 0; k < labels_.size(); ++k) {
        if (lower(labels_[k]) == wanted) return k;
    }
    return std::nullopt;
}

AttentionStack AttentionStack::with_value(std::size_t token, std::size_t pixel, double value) const {
    AttentionStack copy = *this;
    copy.softmax_constrained_ = false;
    copy.values_.at(token * pixel_count() + pixel) = value;
    return copy;
}

}  // namespace predicated
