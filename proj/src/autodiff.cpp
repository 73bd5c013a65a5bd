#include "predicated/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "predicated/errors.hpp"

namespace predicated {

GradientField::GradientField(std::vector<std::string> labels, std::size_t width, std::size_t height)
    : labels_(std::move(labels)), width_(width), height_(height), values_(labels_.size() * width * height, 0.0) {}

std::span<const double> GradientField::channel(std::size_t token) const {
    if (token >= token_count()) throw ShapeMismatch("gradient channel " + std::to_string(token) + " out of range");
    return std::span<const double>(values_).subspan(token * pixel_count(), pixel_count());
}

namespace {

// Adds `g` (scalar or per-pixel) into the adjoint of an input that may be a
// broadcast scalar.
void accumulate(std::vector<double>& adjoint, std::size_t i, double g) {
    adjoint[adjoint.size() == 1 ? 0 : i] += g;
}

double value_at(const std::vector<double>& v, std::size_t i) {
    return v.size() == 1 ? v[0] : v[i];
}

}  // namespace

GradientField gradient(const LossGraph& graph, const AttentionStack& stack) {
    return gradient(graph, stack, forward(graph, stack));
}

GradientField gradient(const LossGraph& graph, const AttentionStack& stack, const Tape& tape) {
    const auto& nodes = graph.nodes();
    const double eps = graph.options().epsilon;
    const std::size_t n = tape.pixels;

    std::vector<std::vector<double>> adj(nodes.size());
    for (NodeId id = 0; id < nodes.size(); ++id) adj[id].assign(tape.values[id].size(), 0.0);
    adj[graph.loss_root()][0] = 1.0;

    GradientField field(stack.labels(), stack.width(), stack.height());

    for (NodeId id = nodes.size(); id-- > 0;) {
        const Node& node = nodes[id];
        const auto& g = adj[id];
        const auto& y = tape.values[id];
        if (std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; })) continue;

        auto in_val = [&](std::size_t k) -> const std::vector<double>& { return tape.values[node.inputs[k]]; };
        auto in_adj = [&](std::size_t k) -> std::vector<double>& { return adj[node.inputs[k]]; };

        switch (node.op) {
            case Op::Const: break;
            case Op::Leaf:
                for (std::size_t i = 0; i < n; ++i) field.at(node.token, i) += g[i];
                break;
            case Op::Normalize: {
                const auto& u = in_val(0);
                auto& du = in_adj(0);
                const std::size_t lo = tape.arg_a[id];
                const std::size_t hi = tape.arg_b[id];
                const double range = u[hi] - u[lo];
                if (range <= 0.0) break;
                double to_max = 0.0;
                double to_min = 0.0;
                for (std::size_t i = 0; i < u.size(); ++i) {
                    du[i] += g[i] / range;
                    to_max -= g[i] * y[i] / range;
                    to_min += g[i] * (y[i] - 1.0) / range;
                }
                du[hi] += to_max;
                du[lo] += to_min;
                break;
            }
            case Op::OneMinus: {
                auto& du = in_adj(0);
                for (std::size_t i = 0; i < g.size(); ++i) du[i] -= g[i];
                break;
            }
            case Op::Mul: {
                const auto& a = in_val(0);
                const auto& b = in_val(1);
                auto& da = in_adj(0);
                auto& db = in_adj(1);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    accumulate(da, i, g[i] * value_at(b, i));
                    accumulate(db, i, g[i] * value_at(a, i));
                }
                break;
            }
            case Op::Min:
            case Op::Max: {
                const auto& a = in_val(0);
                const auto& b = in_val(1);
                auto& da = in_adj(0);
                auto& db = in_adj(1);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const double av = value_at(a, i);
                    const double bv = value_at(b, i);
                    const bool pick_b = node.op == Op::Min ? bv < av : bv > av;
                    accumulate(pick_b ? db : da, i, g[i]);
                }
                break;
            }
            case Op::Prod: {
                const auto& u = in_val(0);
                auto& du = in_adj(0);
                if (u.size() == 1) {
                    du[0] += g[0] * static_cast<double>(n) * std::pow(u[0], static_cast<double>(n) - 1.0);
                    break;
                }
                // Prefix/suffix products keep exact zeros well defined.
                std::vector<double> suffix(u.size() + 1, 1.0);
                for (std::size_t i = u.size(); i-- > 0;) suffix[i] = suffix[i + 1] * u[i];
                double prefix = 1.0;
                for (std::size_t i = 0; i < u.size(); ++i) {
                    du[i] += g[0] * prefix * suffix[i + 1];
                    prefix *= u[i];
                }
                break;
            }
            case Op::GeoMean: {
                const auto& u = in_val(0);
                auto& du = in_adj(0);
                if (u.size() == 1) {
                    du[0] += g[0];
                    break;
                }
                const double scale = g[0] * y[0] / static_cast<double>(u.size());
                for (std::size_t i = 0; i < u.size(); ++i) {
                    if (u[i] > eps && u[i] <= 1.0) du[i] += scale / u[i];
                }
                break;
            }
            case Op::ReduceMin:
            case Op::ReduceMax: {
                auto& du = in_adj(0);
                du[du.size() == 1 ? 0 : tape.arg_a[id]] += g[0];
                break;
            }
            case Op::NegLog: {
                const auto& u = in_val(0);
                auto& du = in_adj(0);
                for (std::size_t i = 0; i < u.size(); ++i) {
                    if (u[i] > eps && u[i] <= 1.0) du[i] -= g[i] / u[i];
                }
                break;
            }
            case Op::Sum:
            case Op::Mean: {
                auto& du = in_adj(0);
                double scale = g[0];
                if (du.size() == 1) {
                    if (node.op == Op::Sum) scale *= static_cast<double>(n);
                } else if (node.op == Op::Mean) {
                    scale /= static_cast<double>(du.size());
                }
                for (double& d : du) d += scale;
                break;
            }
            case Op::WeightedSum:
                for (std::size_t k = 0; k < node.inputs.size(); ++k) in_adj(k)[0] += g[0] * node.weights[k];
                break;
            case Op::WeightedMax: {
                const std::size_t best = tape.arg_a[id];
                in_adj(best)[0] += g[0] * node.weights[best];
                break;
            }
        }
    }
    return field;
}

double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

GradientReport compare_with_central_differences(std::span<const double> analytic, std::size_t pixels,
                                                double h, double tol,
                                                const std::function<std::vector<double>(std::size_t, double)>& loss_at) {
    GradientReport report;
    report.step = h;
    report.tolerance = tol;
    for (std::size_t idx = 0; idx < analytic.size(); ++idx) {
        const auto plus = loss_at(idx, h);
        const auto minus = loss_at(idx, -h);
        double numeric = 0.0;
        for (std::size_t k = 0; k < plus.size(); ++k) numeric += (plus[k] - minus[k]) / (2.0 * h);
        const double err = relative_error(analytic[idx], numeric);
        GradientEntryError entry{idx / pixels, idx % pixels, analytic[idx], numeric, err};
        ++report.checked;
        if (!report.worst || err > report.max_relative_error) {
            report.max_relative_error = err;
            report.worst = entry;
        }
        if (err > tol) report.offending.push_back(entry);
    }
    report.passed = report.offending.empty();
    return report;
}

std::vector<double> loss_terms(const LossGraph& graph, const Tape& tape) {
    // Differencing a weighted sum term by term is the same derivative, minus the roundoff
    // a large conjunct would add to a tiny one.
    const Node& root = graph.nodes()[graph.loss_root()];
    if (root.op != Op::WeightedSum) return {tape.values[graph.loss_root()][0]};
    std::vector<double> terms;
    for (std::size_t k = 0; k < root.inputs.size(); ++k) terms.push_back(root.weights[k] * tape.values[root.inputs[k]][0]);
    return terms;
}

void require_smooth_neighbourhood(const Tape& tape, double h) {
    // -log u has curvature 1/u^2; below 1e3 h the difference quotient itself is off by more than 1e-7.
    if (tape.clamp_margin < 1e3 * h) {
        throw BoundaryInput("a clamped logarithm input is within reach of the epsilon threshold");
    }
    if (tape.kink_margin < 10 * h) {
        throw BoundaryInput("a min/max selection is within reach of a tie");
    }
}

GradientReport check_gradient(const LossGraph& graph, const AttentionStack& stack, double h, double tol) {
    if (!(h >= 1e-7 && h <= 1e-3)) throw InvalidArgument("finite-difference step must lie in [1e-7, 1e-3]");
    const auto values = stack.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] <= h || values[i] >= 1.0 - h) {
            throw BoundaryInput("intensity " + std::to_string(values[i]) + " at channel " +
                                std::to_string(i / stack.pixel_count()) + " pixel " +
                                std::to_string(i % stack.pixel_count()) + " is within h of the [0,1] boundary");
        }
    }
    const Tape tape = forward(graph, stack);
    require_smooth_neighbourhood(tape, h);
    const GradientField analytic = gradient(graph, stack, tape);

    std::vector<double> scratch(values.begin(), values.end());
    auto loss_at = [&](std::size_t idx, double delta) {
        const double saved = scratch[idx];
        scratch[idx] = saved + delta;
        const AttentionStack perturbed(stack.labels(), stack.width(), stack.height(), scratch);
        scratch[idx] = saved;
        return loss_terms(graph, forward(graph, perturbed));
    };
    return compare_with_central_differences(analytic.values(), stack.pixel_count(), h, tol, loss_at);
}

}  // namespace predicated
