#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "predicated/attention.hpp"
#include "predicated/logic_ast.hpp"

namespace predicated {

enum class LogicBackend { Product, Goedel };
enum class ReductionMode { PaperFaithful, Scaled };

std::string_view to_string(LogicBackend backend);
std::string_view to_string(ReductionMode mode);
// Throw InvalidArgument on unknown names.
LogicBackend parse_backend(std::string_view text);     // "product" | "goedel"
ReductionMode parse_reduction(std::string_view text);  // "paper" | "scaled"

// Predicate name -> channel index. Channel 0 (<sot>) is never a target.
using TokenBinding = std::map<std::string, std::size_t>;

// Binds every predicate of `p` to the channel carrying the same label.
TokenBinding bind_by_label(const Proposition& p, const AttentionStack& stack);

struct CompileOptions {
    LogicBackend backend = LogicBackend::Product;
    ReductionMode reduction = ReductionMode::PaperFaithful;
    double alpha = 0.3;
    // Degrees entering a logarithm are clamped to [epsilon, 1].
    double epsilon = 1e-8;
    // Min-max normalise maps read inside (bi)implications.
    bool normalize_implications = true;
};

using NodeId = std::size_t;

enum class Op {
    Const,        // scalar constant
    Leaf,         // raw channel of a token (field)
    Normalize,    // min-max normalisation of a field
    OneMinus,     // 1 - u
    Mul,          // u * v, scalar operands broadcast
    Min,          // elementwise min, ties go to the first operand
    Max,          // elementwise max, ties go to the first operand
    Prod,         // product over pixels
    GeoMean,      // exp(mean log clamp(u)) over pixels
    ReduceMin,    // min over pixels, ties go to the lowest pixel index
    ReduceMax,    // max over pixels, ties go to the lowest pixel index
    NegLog,       // -log clamp(u), elementwise
    Sum,          // sum over pixels
    Mean,         // mean over pixels
    WeightedSum,  // sum_k w_k x_k over scalar inputs
    WeightedMax,  // max_k w_k x_k over scalar inputs
};

std::string_view op_name(Op op);

struct Node {
    Op op = Op::Const;
    bool field = false;  // one value per pixel, otherwise a scalar
    std::vector<NodeId> inputs;
    double constant = 0.0;        // Op::Const
    std::size_t token = 0;        // Op::Leaf
    std::vector<double> weights;  // Op::WeightedSum / Op::WeightedMax
};

/// One top-level conjunct after splitting the root conjunction.
struct Conjunct {
    Proposition source = Proposition::truth();
    double weight = 1.0;
    bool implicit_negative = false;  // forall x. A(x) -> !B(x), weighted by alpha
    NodeId degree = 0;
    NodeId loss = 0;
};

/// Compiled loss. Nodes are stored in topological order: every input id is
/// smaller than the id of the node that reads it.
class LossGraph {
public:
    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const Node& node(NodeId id) const { return nodes_.at(id); }
    NodeId loss_root() const noexcept { return loss_root_; }
    NodeId degree_root() const noexcept { return degree_root_; }
    const std::vector<Conjunct>& conjuncts() const noexcept { return conjuncts_; }
    const CompileOptions& options() const noexcept { return options_; }
    const TokenBinding& binding() const noexcept { return binding_; }
    const Proposition& source() const noexcept { return source_; }
    // Channels read through min-max normalisation at least once.
    const std::set<std::size_t>& normalization_set() const noexcept { return normalized_; }
    // Channels with at least one leaf in the graph.
    const std::set<std::size_t>& referenced_tokens() const noexcept { return referenced_; }

    // Multi-line human readable dump.
    std::string describe() const;

private:
    friend class GraphBuilder;

    std::vector<Node> nodes_;
    NodeId loss_root_ = 0;
    NodeId degree_root_ = 0;
    std::vector<Conjunct> conjuncts_;
    CompileOptions options_;
    TokenBinding binding_;
    Proposition source_ = Proposition::truth();
    std::set<std::size_t> normalized_;
    std::set<std::size_t> referenced_;
};

/// Lowers a closed proposition to a differentiable loss.
///
/// The root conjunction is split into conjuncts (biimplications are expanded
/// first and `forall` is distributed over conjunctions in its body), and the
/// loss is the weighted sum of per-conjunct losses under the product backend
/// or the weighted maximum of 1 - degree under the Goedel backend.
/// Throws UnsupportedForm for open formulas or binary connectives mixing two
/// variables, UnboundPredicate for predicates missing from `binding`.
LossGraph compile(const Proposition& p, const TokenBinding& binding, const CompileOptions& options = {});

/// Values of every node for one stack, plus bookkeeping for the backward pass.
struct Tape {
    std::size_t pixels = 0;
    std::vector<std::vector<double>> values;
    // Selected index for Normalize (argmin, argmax), ReduceMin/Max, WeightedMax.
    std::vector<std::size_t> arg_a;
    std::vector<std::size_t> arg_b;
    // Smallest distance between a clamp threshold or a min/max tie and the
    // value that decides it. Finite differences are unreliable below it.
    double kink_margin = 1.0;
    double clamp_margin = 1.0;
};

// Throws ShapeMismatch when the stack lacks a channel the graph reads.
Tape forward(const LossGraph& graph, const AttentionStack& stack);

struct ConjunctValue {
    double degree = 0.0;
    double loss = 0.0;
    double weight = 1.0;
};

struct Evaluation {
    double degree = 0.0;
    double loss = 0.0;
    std::vector<ConjunctValue> conjuncts;
};

Evaluation evaluate(const LossGraph& graph, const AttentionStack& stack);

/// (m - min) / (max - min); a constant map becomes all zeros.
std::vector<double> normalize_map(std::span<const double> map);

/// Classical truth of `p` with pixels as the domain and A_P[i] == 1 meaning
/// P holds at pixel i. Throws NonCrispInput unless every intensity the
/// formula reads is exactly 0 or 1.
bool crisp_oracle(const Proposition& p, const TokenBinding& binding, const AttentionStack& stack);
bool crisp_oracle(const Proposition& p, const AttentionStack& stack);

}  // namespace predicated
