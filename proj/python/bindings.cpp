#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "predicated/autodiff.hpp"
#include "predicated/errors.hpp"
#include "predicated/fuzzy_compiler.hpp"
#include "predicated/guidance.hpp"
#include "predicated/io.hpp"
#include "predicated/logic_ast.hpp"
#include "predicated/prompt_frontend.hpp"

namespace py = pybind11;
using namespace predicated;

namespace {

// (K, H, W) float64 copy of a token-major, row-major buffer.
py::array_t<double> as_array(std::span<const double> values, std::size_t k, std::size_t w, std::size_t h) {
    py::array_t<double> out({k, h, w});
    std::copy(values.begin(), values.end(), out.mutable_data());
    return out;
}

AttentionStack stack_from_array(std::vector<std::string> labels,
                                const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                                bool softmax_constrained) {
    if (a.ndim() != 3) throw BadShape("expected an array of shape (tokens, height, width)");
    const std::size_t k = a.shape(0), h = a.shape(1), w = a.shape(2);
    if (k != labels.size()) throw BadShape("array has " + std::to_string(k) + " channels for " +
                                           std::to_string(labels.size()) + " labels");
    std::vector<double> v(a.data(), a.data() + a.size());
    return AttentionStack(std::move(labels), w, h, std::move(v), softmax_constrained);
}

CompileOptions options(const std::string& backend, const std::string& reduction, double alpha, double epsilon,
                       bool normalize_implications) {
    CompileOptions o;
    o.backend = parse_backend(backend);
    o.reduction = parse_reduction(reduction);
    o.alpha = alpha;
    o.epsilon = epsilon;
    o.normalize_implications = normalize_implications;
    return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Differentiable fuzzy-logic losses over cross-attention maps";
    m.attr("__version__") = std::string(kArtifactVersion);

    // Base first: pybind11 tries the most recently registered translator first.
    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<SyntaxError>(m, "SyntaxError", base.ptr());
    py::register_exception<UnboundVariable>(m, "UnboundVariable", base.ptr());
    py::register_exception<PatternMismatch>(m, "PatternMismatch", base.ptr());
    py::register_exception<AmbiguousClass>(m, "AmbiguousClass", base.ptr());
    py::register_exception<UnsupportedForm>(m, "UnsupportedForm", base.ptr());
    py::register_exception<UnboundPredicate>(m, "UnboundPredicate", base.ptr());
    py::register_exception<ShapeMismatch>(m, "ShapeMismatch", base.ptr());
    py::register_exception<NonCrispInput>(m, "NonCrispInput", base.ptr());
    py::register_exception<BoundaryInput>(m, "BoundaryInput", base.ptr());
    py::register_exception<BadShape>(m, "BadShape", base.ptr());
    py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
    py::register_exception<FormatError>(m, "FormatError", base.ptr());

    py::class_<Proposition>(m, "Proposition")
        .def_property_readonly("kind", [](const Proposition& p) { return std::string(kind_name(p.kind())); })
        .def_property_readonly("predicates", [](const Proposition& p) { return predicates(p); })
        .def_property_readonly("free_variables", [](const Proposition& p) { return free_variables(p); })
        .def_property_readonly("closed", [](const Proposition& p) { return is_closed(p); })
        .def_property_readonly("node_count", [](const Proposition& p) { return node_count(p); })
        .def("normalize", [](const Proposition& p) { return normalize(p); })
        .def("__str__", [](const Proposition& p) { return print_dsl(p); })
        .def("__repr__", [](const Proposition& p) { return "Proposition(" + print_dsl(p) + ")"; })
        .def(py::self == py::self)
        .def("__hash__", [](const Proposition& p) { return py::hash(py::str(print_dsl(p))); });

    m.def("parse", [](const std::string& text) { return parse_dsl(text); }, py::arg("dsl"));

    py::class_<AttentionStack>(m, "AttentionStack")
        .def(py::init(&stack_from_array), py::arg("labels"), py::arg("values"),
             py::arg("softmax_constrained") = false)
        .def_property_readonly("labels", &AttentionStack::labels)
        .def_property_readonly("width", &AttentionStack::width)
        .def_property_readonly("height", &AttentionStack::height)
        .def_property_readonly("values", [](const AttentionStack& s) {
            return as_array(s.values(), s.token_count(), s.width(), s.height());
        })
        .def("__eq__", [](const AttentionStack& a, const AttentionStack& b) { return a == b; });

    py::class_<Extraction>(m, "Extraction")
        .def_property_readonly("template_class",
                               [](const Extraction& e) { return std::string(to_string(e.matched.template_class)); })
        .def_readonly("proposition", &Extraction::proposition)
        .def_readonly("binding", &Extraction::binding)
        .def_readonly("token_labels", &Extraction::token_labels)
        .def_property_readonly("slots", [](const Extraction& e) {
            std::map<std::string, std::string> out;
            for (const auto& s : e.matched.slots) out[std::string(to_string(s.role))] = s.word;
            return out;
        });

    m.def(
        "extract",
        [](const std::string& prompt, std::optional<std::string> cls) {
            return extract(prompt, cls ? std::optional(parse_template_class(*cls)) : std::nullopt);
        },
        py::arg("prompt"), py::arg("template_class") = py::none());

    py::class_<ConjunctValue>(m, "ConjunctValue")
        .def_readonly("degree", &ConjunctValue::degree)
        .def_readonly("loss", &ConjunctValue::loss)
        .def_readonly("weight", &ConjunctValue::weight);

    py::class_<Evaluation>(m, "Evaluation")
        .def_readonly("degree", &Evaluation::degree)
        .def_readonly("loss", &Evaluation::loss)
        .def_readonly("conjuncts", &Evaluation::conjuncts);

    py::class_<GradientReport>(m, "GradientReport")
        .def_readonly("passed", &GradientReport::passed)
        .def_readonly("step", &GradientReport::step)
        .def_readonly("tolerance", &GradientReport::tolerance)
        .def_readonly("checked", &GradientReport::checked)
        .def_readonly("max_relative_error", &GradientReport::max_relative_error)
        .def_property_readonly("offending", [](const GradientReport& r) {
            std::vector<std::pair<std::size_t, std::size_t>> out;
            for (const auto& e : r.offending) out.emplace_back(e.token, e.pixel);
            return out;
        });

    py::class_<LossGraph>(m, "LossGraph")
        .def_property_readonly("source", &LossGraph::source)
        .def_property_readonly("binding", &LossGraph::binding)
        .def_property_readonly("conjuncts", [](const LossGraph& g) {
            std::vector<std::pair<std::string, double>> out;
            for (const auto& c : g.conjuncts()) out.emplace_back(print_dsl(c.source), c.weight);
            return out;
        })
        .def_property_readonly("normalization_set", &LossGraph::normalization_set)
        .def("describe", &LossGraph::describe)
        .def("evaluate", [](const LossGraph& g, const AttentionStack& s) { return evaluate(g, s); })
        .def("gradient",
             [](const LossGraph& g, const AttentionStack& s) {
                 const auto f = gradient(g, s);
                 return as_array(f.values(), f.token_count(), f.width(), f.height());
             })
        .def("check_gradient", [](const LossGraph& g, const AttentionStack& s, double h,
                                  double tol) { return check_gradient(g, s, h, tol); },
             py::arg("stack"), py::arg("step") = 1e-5, py::arg("tol") = 1e-4);

    m.def(
        "compile",
        [](const Proposition& p, std::optional<TokenBinding> binding, const std::string& backend,
           const std::string& reduction, double alpha, double epsilon, bool normalize_implications,
           const AttentionStack* stack) {
            TokenBinding b;
            if (binding) b = *binding;
            else if (stack) b = bind_by_label(p, *stack);
            else throw InvalidArgument("compile needs a binding or a stack to bind by label");
            return compile(p, b, options(backend, reduction, alpha, epsilon, normalize_implications));
        },
        py::arg("proposition"), py::arg("binding") = py::none(), py::kw_only(), py::arg("backend") = "product",
        py::arg("reduction") = "paper", py::arg("alpha") = 0.3, py::arg("epsilon") = 1e-8,
        py::arg("normalize_implications") = true, py::arg("stack") = nullptr);

    m.def(
        "crisp_oracle",
        [](const Proposition& p, const AttentionStack& s, std::optional<TokenBinding> binding) {
            return binding ? crisp_oracle(p, *binding, s) : crisp_oracle(p, s);
        },
        py::arg("proposition"), py::arg("stack"), py::arg("binding") = py::none());

    m.def("normalize_map", [](const std::vector<double>& v) { return normalize_map(v); });

    py::class_<StepRecord>(m, "StepRecord")
        .def_readonly("step", &StepRecord::step)
        .def_readonly("guided", &StepRecord::guided)
        .def_readonly("loss", &StepRecord::loss)
        .def_readonly("degree", &StepRecord::degree)
        .def_readonly("conjunct_losses", &StepRecord::conjunct_losses)
        .def_readonly("conjunct_degrees", &StepRecord::conjunct_degrees);

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("records", &Trajectory::records)
        .def_readonly("initial", &Trajectory::initial)
        .def_readonly("initial_stack", &Trajectory::initial_stack)
        .def_readonly("final_stack", &Trajectory::final_stack)
        .def("csv", [](const Trajectory& t) {
            std::ostringstream out;
            write_trajectory_csv(out, t);
            return out.str();
        });

    m.def(
        "simulate",
        [](const std::string& dsl, std::vector<std::string> tokens, std::optional<TokenBinding> binding,
           std::size_t width, std::size_t height, std::size_t total_steps, std::size_t guided_steps,
           std::size_t refinement_rounds, double learning_rate, double noise_scale, double init_scale,
           std::uint64_t seed, const std::string& backend, const std::string& reduction, double alpha) {
            RunManifest mf;
            mf.dsl = dsl;
            mf.tokens = std::move(tokens);
            if (mf.tokens.empty() || mf.tokens.front() != kStartOfText) mf.tokens.insert(mf.tokens.begin(), "<sot>");
            if (binding) {
                mf.binding = *binding;
            } else {
                for (std::size_t k = 1; k < mf.tokens.size(); ++k) mf.binding[mf.tokens[k]] = k;
            }
            mf.width = width;
            mf.height = height;
            mf.config.total_steps = total_steps;
            mf.config.guided_steps = guided_steps;
            mf.config.refinement_rounds = refinement_rounds;
            mf.config.learning_rate = learning_rate;
            mf.config.noise_scale = noise_scale;
            mf.config.init_scale = init_scale;
            mf.config.seed = seed;
            mf.config.compile = options(backend, reduction, alpha, 1e-8, true);
            return simulate(mf);
        },
        py::arg("dsl"), py::arg("tokens"), py::arg("binding") = py::none(), py::kw_only(), py::arg("width") = 16,
        py::arg("height") = 16, py::arg("total_steps") = 50, py::arg("guided_steps") = 25,
        py::arg("refinement_rounds") = 4, py::arg("learning_rate") = 0.1, py::arg("noise_scale") = 0.0,
        py::arg("init_scale") = 1.0, py::arg("seed") = 0, py::arg("backend") = "product",
        py::arg("reduction") = "paper", py::arg("alpha") = 0.3);

    m.def("containment", &containment, py::arg("stack"), py::arg("antecedent"), py::arg("consequent"));
    m.def("argmax_pixel_count", &argmax_pixel_count, py::arg("stack"), py::arg("token"));
    m.def(
        "ablate",
        [](const std::string& first, const std::string& second, const std::string& direction) {
            return ablate_implication_direction(first, second, parse_implication_direction(direction));
        },
        py::arg("first"), py::arg("second"), py::arg("direction"));

    m.def("read_amap", &read_amap_file, py::arg("path"));
    m.def("write_amap", &write_amap_file, py::arg("path"), py::arg("stack"));
}
