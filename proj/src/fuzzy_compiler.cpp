#include "predicated/fuzzy_compiler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "predicated/errors.hpp"

namespace predicated {

std::string_view to_string(LogicBackend backend) {
    return backend == LogicBackend::Product ? "product" : "goedel";
}

std::string_view to_string(ReductionMode mode) {
    return mode == ReductionMode::PaperFaithful ? "paper" : "scaled";
}

LogicBackend parse_backend(std::string_view text) {
    if (text == "product") return LogicBackend::Product;
    if (text == "goedel" || text == "godel") return LogicBackend::Goedel;
    throw InvalidArgument("unknown semantics '" + std::string(text) + "' (expected product|goedel)");
}

ReductionMode parse_reduction(std::string_view text) {
    if (text == "paper") return ReductionMode::PaperFaithful;
    if (text == "scaled") return ReductionMode::Scaled;
    throw InvalidArgument("unknown reduction '" + std::string(text) + "' (expected paper|scaled)");
}

std::string_view op_name(Op op) {
    switch (op) {
        case Op::Const: return "const";
        case Op::Leaf: return "leaf";
        case Op::Normalize: return "normalize";
        case Op::OneMinus: return "one_minus";
        case Op::Mul: return "mul";
        case Op::Min: return "min";
        case Op::Max: return "max";
        case Op::Prod: return "prod";
        case Op::GeoMean: return "geomean";
        case Op::ReduceMin: return "reduce_min";
        case Op::ReduceMax: return "reduce_max";
        case Op::NegLog: return "neglog";
        case Op::Sum: return "sum";
        case Op::Mean: return "mean";
        case Op::WeightedSum: return "weighted_sum";
        case Op::WeightedMax: return "weighted_max";
    }
    return "?";
}

TokenBinding bind_by_label(const Proposition& p, const AttentionStack& stack) {
    TokenBinding binding;
    for (const auto& name : predicates(p)) {
        auto k = stack.find_token(name);
        if (!k || *k == 0) throw UnboundPredicate("no channel labelled '" + name + "' in the attention stack");
        binding[name] = *k;
    }
    return binding;
}

// ---------------------------------------------------------------------------
// Compilation

namespace {

// Free variables of p, rejecting shapes that cannot be lowered to per-pixel
// fields: binary connectives over two different variables and quantifiers
// whose body mentions a variable other than their own.
std::set<std::string> check_scopes(const Proposition& p) {
    switch (p.kind()) {
        case Kind::True:
        case Kind::False: return {};
        case Kind::Atom: return {p.variable()};
        case Kind::Not: return check_scopes(p.operand());
        case Kind::Forall:
        case Kind::Exists: {
            auto vars = check_scopes(p.body());
            vars.erase(p.variable());
            if (!vars.empty()) {
                throw UnsupportedForm("quantifier over '" + p.variable() + "' has a body mentioning '" +
                                      *vars.begin() + "': " + print_dsl(p));
            }
            return vars;
        }
        default: {
            auto vars = check_scopes(p.lhs());
            vars.merge(check_scopes(p.rhs()));
            if (vars.size() > 1) {
                throw UnsupportedForm("binary connective over different variables: " + print_dsl(p));
            }
            return vars;
        }
    }
}

struct SplitConjunct {
    Proposition original;
    Proposition lowered;
};

void split_conjuncts(const Proposition& original, const Proposition& p, std::vector<SplitConjunct>& out) {
    if (p.kind() == Kind::And) {
        split_conjuncts(p.lhs(), p.lhs(), out);
        split_conjuncts(p.rhs(), p.rhs(), out);
        return;
    }
    if (p.kind() == Kind::Forall && p.body().kind() == Kind::And) {
        const auto& body = p.body();
        const auto left = Proposition::forall(p.variable(), body.lhs());
        const auto right = Proposition::forall(p.variable(), body.rhs());
        split_conjuncts(left, left, out);
        split_conjuncts(right, right, out);
        return;
    }
    // not exists x. f  ==  forall x. not f, kept in log form for the loss.
    if (p.kind() == Kind::Not && p.operand().kind() == Kind::Exists) {
        const auto& ex = p.operand();
        out.push_back({original, Proposition::forall(ex.variable(), Proposition::negation(ex.body()))});
        return;
    }
    out.push_back({original, p});
}

bool is_implicit_negative(const Proposition& p) {
    return p.kind() == Kind::Forall && p.body().kind() == Kind::Implies &&
           p.body().rhs().kind() == Kind::Not;
}

}  // namespace

class GraphBuilder {
public:
    GraphBuilder(const TokenBinding& binding, const CompileOptions& options) {
        graph_.binding_ = binding;
        graph_.options_ = options;
    }

    LossGraph build(const Proposition& p) {
        graph_.source_ = p;
        const Proposition normalized = normalize(p);
        std::vector<SplitConjunct> parts;
        split_conjuncts(normalized, normalized, parts);

        const bool product = graph_.options_.backend == LogicBackend::Product;
        std::vector<NodeId> losses;
        std::vector<double> weights;
        NodeId degree_root = 0;
        for (std::size_t k = 0; k < parts.size(); ++k) {
            Conjunct c;
            c.source = parts[k].original;
            c.implicit_negative = is_implicit_negative(parts[k].lowered);
            c.weight = c.implicit_negative ? graph_.options_.alpha : 1.0;
            lower_conjunct(parts[k].lowered, c);
            losses.push_back(c.loss);
            weights.push_back(c.weight);
            degree_root = k == 0 ? c.degree : add(product ? Op::Mul : Op::Min, false, {degree_root, c.degree});
            graph_.conjuncts_.push_back(std::move(c));
        }
        Node root = make(product ? Op::WeightedSum : Op::WeightedMax, false, losses);
        root.weights = weights;
        graph_.loss_root_ = add(std::move(root));
        graph_.degree_root_ = degree_root;
        return std::move(graph_);
    }

private:
    static Node make(Op op, bool field, std::vector<NodeId> inputs) {
        Node n;
        n.op = op;
        n.field = field;
        n.inputs = std::move(inputs);
        return n;
    }

    NodeId add(Op op, bool field, std::vector<NodeId> inputs) { return add(make(op, field, std::move(inputs))); }

    NodeId add(Node n) {
        graph_.nodes_.push_back(std::move(n));
        return graph_.nodes_.size() - 1;
    }

    bool is_field(NodeId id) const { return graph_.nodes_[id].field; }

    NodeId constant(double v) {
        Node n = make(Op::Const, false, {});
        n.constant = v;
        return add(std::move(n));
    }

    NodeId unary(Op op, NodeId u) {
        const Node& inner = graph_.nodes_[u];
        if (op == Op::OneMinus && inner.op == Op::OneMinus) return inner.inputs[0];  // 1 - (1 - x) would round
        return add(op, is_field(u), {u});
    }
    NodeId binary(Op op, NodeId a, NodeId b) { return add(op, is_field(a) || is_field(b), {a, b}); }
    NodeId reduce(Op op, NodeId u) { return add(op, false, {u}); }

    NodeId leaf(const std::string& predicate, bool normalized) {
        auto it = graph_.binding_.find(predicate);
        if (it == graph_.binding_.end()) throw UnboundPredicate("predicate '" + predicate + "' has no token channel");
        const std::size_t token = it->second;
        graph_.referenced_.insert(token);
        auto [raw, inserted] = raw_leaves_.try_emplace(token, 0);
        if (inserted) {
            Node n = make(Op::Leaf, true, {});
            n.token = token;
            raw->second = add(std::move(n));
        }
        if (!normalized) return raw->second;
        graph_.normalized_.insert(token);
        auto [norm, fresh] = normalized_leaves_.try_emplace(token, 0);
        if (fresh) norm->second = unary(Op::Normalize, raw->second);
        return norm->second;
    }

    // Degree of truth of p, per pixel when p has a free variable.
    NodeId lower(const Proposition& p, bool in_implication) {
        const bool product = graph_.options_.backend == LogicBackend::Product;
        const bool scaled = graph_.options_.reduction == ReductionMode::Scaled;
        switch (p.kind()) {
            case Kind::True: return constant(1.0);
            case Kind::False: return constant(0.0);
            case Kind::Atom:
                return leaf(p.predicate(), in_implication && graph_.options_.normalize_implications);
            case Kind::Not: return unary(Op::OneMinus, lower(p.operand(), in_implication));
            case Kind::And: {
                const NodeId a = lower(p.lhs(), in_implication);
                const NodeId b = lower(p.rhs(), in_implication);
                return binary(product ? Op::Mul : Op::Min, a, b);
            }
            case Kind::Or: {
                const NodeId a = lower(p.lhs(), in_implication);
                const NodeId b = lower(p.rhs(), in_implication);
                if (!product) return binary(Op::Max, a, b);
                return unary(Op::OneMinus, binary(Op::Mul, unary(Op::OneMinus, a), unary(Op::OneMinus, b)));
            }
            case Kind::Implies: {
                const NodeId a = lower(p.lhs(), true);
                const NodeId b = lower(p.rhs(), true);
                if (!product) return binary(Op::Max, unary(Op::OneMinus, a), b);
                return unary(Op::OneMinus, binary(Op::Mul, a, unary(Op::OneMinus, b)));
            }
            // A nested quantifier is a scalar to any enclosing implication, so
            // its own atoms read raw maps again.
            case Kind::Forall: {
                const NodeId body = lower(p.body(), false);
                if (!product) return reduce(Op::ReduceMin, body);
                return reduce(scaled ? Op::GeoMean : Op::Prod, body);
            }
            case Kind::Exists: {
                const NodeId body = lower(p.body(), false);
                if (!product) return reduce(Op::ReduceMax, body);
                return unary(Op::OneMinus, reduce(scaled ? Op::GeoMean : Op::Prod, unary(Op::OneMinus, body)));
            }
            case Kind::Iff: break;  // removed by normalize()
        }
        throw UnsupportedForm("unexpected biimplication after normalisation");
    }

    void lower_conjunct(const Proposition& p, Conjunct& c) {
        const bool product = graph_.options_.backend == LogicBackend::Product;
        const bool scaled = graph_.options_.reduction == ReductionMode::Scaled;
        if (!product) {
            c.degree = lower(p, false);
            c.loss = unary(Op::OneMinus, c.degree);
            return;
        }
        if (p.kind() == Kind::Forall) {
            const NodeId body = lower(p.body(), false);
            if (is_field(body)) {
                // -log prod_i d_i is accumulated as sum_i -log d_i.
                c.degree = reduce(scaled ? Op::GeoMean : Op::Prod, body);
                c.loss = reduce(scaled ? Op::Mean : Op::Sum, unary(Op::NegLog, body));
                return;
            }
            c.degree = reduce(scaled ? Op::GeoMean : Op::Prod, body);
            c.loss = unary(Op::NegLog, c.degree);
            return;
        }
        c.degree = lower(p, false);
        c.loss = unary(Op::NegLog, c.degree);
    }

    LossGraph graph_;
    std::map<std::size_t, NodeId> raw_leaves_;
    std::map<std::size_t, NodeId> normalized_leaves_;
};

LossGraph compile(const Proposition& p, const TokenBinding& binding, const CompileOptions& options) {
    if (!(options.alpha >= 0.0 && options.alpha <= 1.0)) throw InvalidArgument("alpha must lie in [0,1]");
    if (!(options.epsilon > 0.0 && options.epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0,1)");
    if (!is_closed(p)) throw UnsupportedForm("formula has free variables: " + print_dsl(p));
    check_scopes(p);

    std::set<std::size_t> targets;
    for (const auto& [name, token] : binding) {
        if (token == 0) throw InvalidArgument("predicate '" + name + "' is bound to the reserved <sot> channel");
        if (!targets.insert(token).second) {
            throw InvalidArgument("token binding is not injective at channel " + std::to_string(token));
        }
    }
    for (const auto& name : predicates(p)) {
        if (!binding.contains(name)) throw UnboundPredicate("predicate '" + name + "' has no token channel");
    }
    return GraphBuilder(binding, options).build(p);
}

std::string LossGraph::describe() const {
    std::ostringstream out;
    out << "semantics=" << to_string(options_.backend) << '\n';
    out << "reduction=" << to_string(options_.reduction) << '\n';
    out << "alpha=" << options_.alpha << '\n';
    out << "epsilon=" << options_.epsilon << '\n';
    out << "nodes=" << nodes_.size() << '\n';
    out << "conjuncts=" << conjuncts_.size() << '\n';
    for (std::size_t k = 0; k < conjuncts_.size(); ++k) {
        out << "conjunct." << k << '=' << print_dsl(conjuncts_[k].source) << '\n';
        out << "conjunct." << k << ".weight=" << conjuncts_[k].weight << '\n';
    }
    for (const auto& [name, token] : binding_) out << "binding." << name << '=' << token << '\n';
    out << "normalized=";
    bool first = true;
    for (auto t : normalized_) {
        out << (first ? "" : ",") << t;
        first = false;
    }
    out << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Forward evaluation

namespace {

std::size_t arg_extreme(std::span<const double> v, bool want_max) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (want_max ? v[i] > v[best] : v[i] < v[best]) best = i;
    }
    return best;
}

// Distance between the extreme value and the best competitor at another index.
double extreme_gap(std::span<const double> v, std::size_t best) {
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i != best) gap = std::min(gap, std::abs(v[best] - v[i]));
    }
    return gap;
}

double at(const std::vector<double>& v, std::size_t i) {
    return v.size() == 1 ? v[0] : v[i];
}

}  // namespace

Tape forward(const LossGraph& graph, const AttentionStack& stack) {
    if (!graph.referenced_tokens().empty() && *graph.referenced_tokens().rbegin() >= stack.token_count()) {
        throw ShapeMismatch("graph reads channel " + std::to_string(*graph.referenced_tokens().rbegin()) +
                            " but the stack has " + std::to_string(stack.token_count()) + " channels");
    }
    const double eps = graph.options().epsilon;
    const std::size_t n = stack.pixel_count();
    const auto& nodes = graph.nodes();

    Tape tape;
    tape.pixels = n;
    tape.values.resize(nodes.size());
    tape.arg_a.assign(nodes.size(), 0);
    tape.arg_b.assign(nodes.size(), 0);
    auto kink = [&](double gap) { tape.kink_margin = std::min(tape.kink_margin, gap); };
    auto clamp_site = [&](double u) { tape.clamp_margin = std::min(tape.clamp_margin, u - eps); };

    for (NodeId id = 0; id < nodes.size(); ++id) {
        const Node& node = nodes[id];
        auto& out = tape.values[id];
        auto in = [&](std::size_t k) -> const std::vector<double>& { return tape.values[node.inputs[k]]; };
        const std::size_t width = node.field ? n : 1;

        switch (node.op) {
            case Op::Const: out = {node.constant}; break;
            case Op::Leaf: {
                auto ch = stack.channel(node.token);
                out.assign(ch.begin(), ch.end());
                break;
            }
            case Op::Normalize: {
                const auto& u = in(0);
                const std::size_t lo = arg_extreme(u, false);
                const std::size_t hi = arg_extreme(u, true);
                tape.arg_a[id] = lo;
                tape.arg_b[id] = hi;
                const double range = u[hi] - u[lo];
                out.assign(u.size(), 0.0);
                if (u.size() > 1) {
                    kink(extreme_gap(u, lo));
                    kink(extreme_gap(u, hi));
                }
                if (range > 0.0) {
                    for (std::size_t i = 0; i < u.size(); ++i) out[i] = (u[i] - u[lo]) / range;
                }
                break;
            }
            case Op::OneMinus: {
                const auto& u = in(0);
                out.resize(u.size());
                for (std::size_t i = 0; i < u.size(); ++i) out[i] = 1.0 - u[i];
                break;
            }
            case Op::Mul: {
                out.resize(width);
                for (std::size_t i = 0; i < width; ++i) out[i] = at(in(0), i) * at(in(1), i);
                break;
            }
            case Op::Min:
            case Op::Max: {
                out.resize(width);
                for (std::size_t i = 0; i < width; ++i) {
                    const double a = at(in(0), i);
                    const double b = at(in(1), i);
                    out[i] = node.op == Op::Min ? (b < a ? b : a) : (b > a ? b : a);
                    kink(std::abs(a - b));
                }
                break;
            }
            case Op::Prod: {
                const auto& u = in(0);
                if (u.size() == 1) {
                    out = {std::pow(u[0], static_cast<double>(n))};
                } else {
                    double p = 1.0;
                    for (double v : u) p *= v;
                    out = {p};
                }
                break;
            }
            case Op::GeoMean: {
                const auto& u = in(0);
                if (u.size() == 1) {
                    out = {u[0]};
                } else {
                    double s = 0.0;
                    for (double v : u) {
                        clamp_site(v);
                        s += std::log(std::clamp(v, eps, 1.0));
                    }
                    out = {std::exp(s / static_cast<double>(u.size()))};
                }
                break;
            }
            case Op::ReduceMin:
            case Op::ReduceMax: {
                const auto& u = in(0);
                const std::size_t best = arg_extreme(u, node.op == Op::ReduceMax);
                tape.arg_a[id] = best;
                if (u.size() > 1) kink(extreme_gap(u, best));
                out = {u[best]};
                break;
            }
            case Op::NegLog: {
                const auto& u = in(0);
                out.resize(u.size());
                // -log(1 - x) through log1p keeps the digits of a small x that 1 - x would drop
                const Node& producer = nodes[node.inputs[0]];
                const std::vector<double>* x =
                    producer.op == Op::OneMinus ? &tape.values[producer.inputs[0]] : nullptr;
                for (std::size_t i = 0; i < u.size(); ++i) {
                    clamp_site(u[i]);
                    if (x && u[i] >= eps && u[i] <= 1.0) out[i] = 0.0 - std::log1p(-(*x)[i]);
                    else out[i] = 0.0 - std::log(std::clamp(u[i], eps, 1.0));  // +0 at degree 1
                }
                break;
            }
            case Op::Sum:
            case Op::Mean: {
                const auto& u = in(0);
                double s = 0.0;
                for (double v : u) s += v;
                if (u.size() == 1) s *= static_cast<double>(node.op == Op::Sum ? n : 1);
                else if (node.op == Op::Mean) s /= static_cast<double>(u.size());
                out = {s};
                break;
            }
            case Op::WeightedSum: {
                double s = 0.0;
                for (std::size_t k = 0; k < node.inputs.size(); ++k) s += node.weights[k] * in(k)[0];
                out = {s};
                break;
            }
            case Op::WeightedMax: {
                std::vector<double> terms(node.inputs.size());
                for (std::size_t k = 0; k < node.inputs.size(); ++k) terms[k] = node.weights[k] * in(k)[0];
                const std::size_t best = arg_extreme(terms, true);
                tape.arg_a[id] = best;
                if (terms.size() > 1) kink(extreme_gap(terms, best));
                out = {terms[best]};
                break;
            }
        }
    }
    return tape;
}

Evaluation evaluate(const LossGraph& graph, const AttentionStack& stack) {
    const Tape tape = forward(graph, stack);
    Evaluation result;
    result.degree = tape.values[graph.degree_root()][0];
    result.loss = tape.values[graph.loss_root()][0];
    for (const auto& c : graph.conjuncts()) {
        result.conjuncts.push_back({tape.values[c.degree][0], tape.values[c.loss][0], c.weight});
    }
    return result;
}

std::vector<double> normalize_map(std::span<const double> map) {
    if (map.empty()) throw InvalidArgument("cannot normalise an empty map");
    const auto [lo, hi] = std::minmax_element(map.begin(), map.end());
    const double range = *hi - *lo;
    std::vector<double> out(map.size(), 0.0);
    if (range > 0.0) {
        for (std::size_t i = 0; i < map.size(); ++i) out[i] = (map[i] - *lo) / range;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Classical oracle

namespace {

class CrispEvaluator {
public:
    CrispEvaluator(const TokenBinding& binding, const AttentionStack& stack) : binding_(binding), stack_(stack) {}

    bool eval(const Proposition& p) {
        switch (p.kind()) {
            case Kind::True: return true;
            case Kind::False: return false;
            case Kind::Atom: {
                const std::size_t pixel = env_.at(p.variable());
                return stack_.at(channel(p.predicate()), pixel) == 1.0;
            }
            case Kind::Not: return !eval(p.operand());
            case Kind::And: return eval(p.lhs()) && eval(p.rhs());
            case Kind::Or: return eval(p.lhs()) || eval(p.rhs());
            case Kind::Implies: return !eval(p.lhs()) || eval(p.rhs());
            case Kind::Iff: return eval(p.lhs()) == eval(p.rhs());
            case Kind::Forall:
            case Kind::Exists: {
                const bool universal = p.kind() == Kind::Forall;
                auto saved = env_.find(p.variable()) != env_.end() ? std::optional(env_[p.variable()]) : std::nullopt;
                bool result = universal;
                for (std::size_t i = 0; i < stack_.pixel_count(); ++i) {
                    env_[p.variable()] = i;
                    if (eval(p.body()) != universal) {
                        result = !universal;
                        break;
                    }
                }
                if (saved) env_[p.variable()] = *saved;
                else env_.erase(p.variable());
                return result;
            }
        }
        return false;
    }

    std::size_t channel(const std::string& predicate) const {
        auto it = binding_.find(predicate);
        if (it == binding_.end()) throw UnboundPredicate("predicate '" + predicate + "' has no token channel");
        if (it->second >= stack_.token_count()) {
            throw ShapeMismatch("predicate '" + predicate + "' is bound to missing channel " +
                                std::to_string(it->second));
        }
        return it->second;
    }

private:
    const TokenBinding& binding_;
    const AttentionStack& stack_;
    std::map<std::string, std::size_t> env_;
};

}  // namespace

bool crisp_oracle(const Proposition& p, const TokenBinding& binding, const AttentionStack& stack) {
    if (!is_closed(p)) throw UnsupportedForm("formula has free variables: " + print_dsl(p));
    CrispEvaluator evaluator(binding, stack);
    for (const auto& name : predicates(p)) {
        const std::size_t k = evaluator.channel(name);
        for (double v : stack.channel(k)) {
            if (v != 0.0 && v != 1.0) {
                throw NonCrispInput("channel '" + stack.labels()[k] + "' holds intensity " + std::to_string(v));
            }
        }
    }
    return evaluator.eval(p);
}

bool crisp_oracle(const Proposition& p, const AttentionStack& stack) {
    return crisp_oracle(p, bind_by_label(p, stack), stack);
}

}  // namespace predicated
