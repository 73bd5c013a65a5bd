// predicated: command-line front end for the logic-to-loss compiler.
//
// Output is key=value lines on stdout. Exit 0 on success, 1 on a domain
// error (error name on stderr), 2 on a usage error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "predicated/attention.hpp"
#include "predicated/autodiff.hpp"
#include "predicated/errors.hpp"
#include "predicated/fuzzy_compiler.hpp"
#include "predicated/guidance.hpp"
#include "predicated/io.hpp"
#include "predicated/logic_ast.hpp"
#include "predicated/prompt_frontend.hpp"

namespace pd = predicated;

namespace {

struct Globals {
    std::string semantics = "product";
    std::string reduction = "paper";
    double alpha = 0.3;
    double epsilon = 1e-8;
    bool raw_implications = false;

    pd::CompileOptions options() const {
        pd::CompileOptions o;
        o.backend = pd::parse_backend(semantics);
        o.reduction = pd::parse_reduction(reduction);
        o.alpha = alpha;
        o.epsilon = epsilon;
        o.normalize_implications = !raw_implications;
        return o;
    }
};

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// <sot> followed by the given labels, or by the formula's predicates in name order.
std::vector<std::string> channel_labels(const pd::Proposition& p, const std::string& tokens) {
    std::vector<std::string> labels{std::string(pd::kStartOfText)};
    if (tokens.empty()) {
        for (const auto& name : pd::predicates(p)) labels.push_back(name);
    } else {
        for (auto& t : split_commas(tokens)) {
            if (t != pd::kStartOfText) labels.push_back(std::move(t));
        }
    }
    return labels;
}

pd::TokenBinding bind_labels(const pd::Proposition& p, const std::vector<std::string>& labels) {
    pd::TokenBinding binding;
    for (const auto& name : pd::predicates(p)) {
        for (std::size_t t = 1; t < labels.size(); ++t) {
            if (labels[t] == name) binding[name] = t;
        }
        if (!binding.contains(name)) throw pd::UnboundPredicate("no channel labelled '" + name + "'");
    }
    return binding;
}

void print_binding(const pd::TokenBinding& binding) {
    for (const auto& [name, token] : binding) std::cout << "binding." << name << '=' << token << '\n';
}

void print_report(const pd::GradientReport& r) {
    std::cout << "passed=" << (r.passed ? "true" : "false") << '\n'
              << "step=" << pd::format_double(r.step) << '\n'
              << "tolerance=" << pd::format_double(r.tolerance) << '\n'
              << "checked=" << r.checked << '\n'
              << "max_relative_error=" << pd::format_double(r.max_relative_error) << '\n'
              << "offending=" << r.offending.size() << '\n';
    if (r.worst) {
        std::cout << "worst.token=" << r.worst->token << '\n'
                  << "worst.pixel=" << r.worst->pixel << '\n'
                  << "worst.analytic=" << pd::format_double(r.worst->analytic) << '\n'
                  << "worst.numeric=" << pd::format_double(r.worst->numeric) << '\n';
    }
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Compile predicate-logic propositions into differentiable attention-map losses"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--semantics", g.semantics, "product | goedel")->check(CLI::IsMember({"product", "goedel"}));
    app.add_option("--reduction", g.reduction, "paper | scaled")->check(CLI::IsMember({"paper", "scaled"}));
    app.add_option("--alpha", g.alpha, "weight of implicit negative implications")->check(CLI::Range(0.0, 1.0));
    app.add_option("--epsilon", g.epsilon, "clamp for degrees entering a logarithm");
    app.add_flag("--raw-implications", g.raw_implications, "do not min-max normalise maps inside implications");

    // parse
    std::string parse_text;
    auto* parse = app.add_subcommand("parse", "Parse a formula and print its canonical form");
    parse->add_option("dsl", parse_text, "formula")->required();

    // extract
    std::string extract_prompt, extract_class, extract_out;
    auto* extract = app.add_subcommand("extract", "Turn a templated prompt into a formula and token binding");
    extract->add_option("prompt", extract_prompt, "prompt text")->required();
    extract->add_option("--class", extract_class, "statement class, e.g. one-to-one");
    extract->add_option("--out", extract_out, "directory for proposition.dsl and binding.txt");

    // compile
    std::string compile_dsl, compile_tokens;
    auto* compile_cmd = app.add_subcommand("compile", "Print the compiled loss graph");
    compile_cmd->add_option("--dsl", compile_dsl, "formula")->required();
    compile_cmd->add_option("--tokens", compile_tokens, "comma-separated word channel labels");

    // eval / grad / oracle share --map --dsl
    std::string map_path, map_dsl, grad_out;
    auto* eval = app.add_subcommand("eval", "Degree of truth and loss on an attention stack");
    auto* grad = app.add_subcommand("grad", "Loss gradient with respect to every intensity");
    auto* oracle = app.add_subcommand("oracle", "Classical truth value on a crisp stack");
    for (auto* sub : {eval, grad, oracle}) {
        sub->add_option("--map", map_path, "AMAP file")->required()->check(CLI::ExistingFile);
        sub->add_option("--dsl", map_dsl, "formula")->required();
    }
    grad->add_option("--out", grad_out, "directory for gradient.grad");

    // check-grad
    std::string cg_map, cg_dsl, cg_tokens;
    std::size_t cg_width = 8, cg_height = 8;
    std::uint64_t cg_seed = 0;
    double cg_h = 1e-5, cg_tol = 1e-4;
    bool cg_logits = false;
    auto* check = app.add_subcommand("check-grad", "Compare the gradient with central differences");
    check->add_option("--dsl", cg_dsl, "formula")->required();
    check->add_option("--map", cg_map, "AMAP file; a random interior stack is drawn when omitted")
        ->check(CLI::ExistingFile);
    check->add_option("--tokens", cg_tokens, "comma-separated word channel labels for the random stack");
    check->add_option("--width", cg_width, "random stack width")->check(CLI::PositiveNumber);
    check->add_option("--height", cg_height, "random stack height")->check(CLI::PositiveNumber);
    check->add_option("--seed", cg_seed, "seed for the random stack");
    check->add_option("--step", cg_h, "finite-difference step h");
    check->add_option("--tol", cg_tol, "relative tolerance");
    check->add_flag("--logits", cg_logits, "check through softmax logits instead of raw intensities");

    // simulate
    std::string sim_dsl, sim_tokens, sim_out, sim_manifest;
    pd::GuidanceConfig cfg;
    std::size_t sim_width = 16, sim_height = 16;
    auto* simulate = app.add_subcommand("simulate", "Run guidance on seeded synthetic logits");
    auto* sim_dsl_opt = simulate->add_option("--dsl", sim_dsl, "formula");
    simulate->add_option("--tokens", sim_tokens, "comma-separated word channel labels");
    simulate->add_option("--width", sim_width, "map width")->check(CLI::PositiveNumber);
    simulate->add_option("--height", sim_height, "map height")->check(CLI::PositiveNumber);
    simulate->add_option("--steps", cfg.total_steps, "reverse steps");
    simulate->add_option("--guided-steps", cfg.guided_steps, "guided reverse steps");
    simulate->add_option("--refine", cfg.refinement_rounds, "refinement rounds before step 1");
    simulate->add_option("--lr", cfg.learning_rate, "learning rate");
    simulate->add_option("--noise", cfg.noise_scale, "logit noise std on unguided steps");
    simulate->add_option("--init-scale", cfg.init_scale, "std of the initial logits");
    simulate->add_option("--seed", cfg.seed, "seed");
    simulate->add_option("--out", sim_out, "output directory")->required();
    auto* manifest_opt = simulate->add_option("--manifest", sim_manifest, "replay a run from its manifest")
                             ->check(CLI::ExistingFile);
    sim_dsl_opt->excludes(manifest_opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const pd::CompileOptions options = g.options();

    if (*parse) {
        const auto p = pd::parse_dsl(parse_text);
        std::cout << "dsl=" << pd::print_dsl(p) << '\n' << "nodes=" << pd::node_count(p) << '\n';
        return 0;
    }

    if (*extract) {
        std::optional<pd::TemplateClass> cls;
        if (!extract_class.empty()) cls = pd::parse_template_class(extract_class);
        const auto e = pd::extract(extract_prompt, cls);
        std::ostringstream tokens;
        for (std::size_t i = 0; i < e.token_labels.size(); ++i) tokens << (i ? "," : "") << e.token_labels[i];
        std::cout << "class=" << pd::to_string(e.matched.template_class) << '\n'
                  << "dsl=" << pd::print_dsl(e.proposition) << '\n'
                  << "tokens=" << tokens.str() << '\n';
        print_binding(e.binding);
        if (!extract_out.empty()) {
            std::filesystem::create_directories(extract_out);
            std::ofstream dsl(std::filesystem::path(extract_out) / "proposition.dsl");
            dsl << pd::print_dsl(e.proposition) << '\n';
            std::ofstream side(std::filesystem::path(extract_out) / "binding.txt");
            side << "tokens=" << tokens.str() << '\n';
            for (const auto& [name, token] : e.binding) side << "binding." << name << '=' << token << '\n';
            if (!dsl || !side) throw pd::FormatError("cannot write under '" + extract_out + "'");
        }
        return 0;
    }

    if (*compile_cmd) {
        const auto p = pd::parse_dsl(compile_dsl);
        const auto labels = channel_labels(p, compile_tokens);
        const auto graph = pd::compile(p, bind_labels(p, labels), options);
        std::cout << graph.describe();
        return 0;
    }

    if (*eval || *grad || *oracle) {
        const auto stack = pd::read_amap_file(map_path);
        const auto p = pd::parse_dsl(map_dsl);
        const auto binding = pd::bind_by_label(p, stack);
        if (*oracle) {
            const bool truth = pd::crisp_oracle(p, binding, stack);
            std::cout << "truth=" << (truth ? "true" : "false") << '\n';
            return 0;
        }
        const auto graph = pd::compile(p, binding, options);
        const auto e = pd::evaluate(graph, stack);
        std::cout << "degree=" << pd::format_fixed9(e.degree) << '\n' << "loss=" << pd::format_fixed9(e.loss) << '\n';
        if (*eval) {
            std::cout << "conjuncts=" << e.conjuncts.size() << '\n';
            for (std::size_t k = 0; k < e.conjuncts.size(); ++k) {
                std::cout << "conjunct." << k << ".degree=" << pd::format_fixed9(e.conjuncts[k].degree) << '\n'
                          << "conjunct." << k << ".loss=" << pd::format_fixed9(e.conjuncts[k].loss) << '\n'
                          << "conjunct." << k << ".weight=" << pd::format_double(e.conjuncts[k].weight) << '\n';
            }
            return 0;
        }
        const auto field = pd::gradient(graph, stack);
        for (std::size_t t = 0; t < field.token_count(); ++t) {
            std::cout << "grad." << field.labels()[t] << '=';
            for (std::size_t i = 0; i < field.pixel_count(); ++i) {
                std::cout << (i ? " " : "") << pd::format_double(field.at(t, i));
            }
            std::cout << '\n';
        }
        if (!grad_out.empty()) {
            std::filesystem::create_directories(grad_out);
            std::ofstream out(std::filesystem::path(grad_out) / "gradient.grad");
            pd::write_gradient(out, field);
            if (!out) throw pd::FormatError("cannot write under '" + grad_out + "'");
        }
        return 0;
    }

    if (*check) {
        const auto p = pd::parse_dsl(cg_dsl);
        pd::GradientReport report;
        if (cg_logits) {
            const auto labels = cg_map.empty() ? channel_labels(p, cg_tokens) : pd::read_amap_file(cg_map).labels();
            pd::GuidanceConfig init;
            init.seed = cg_seed;
            const auto logits = pd::init_logits(init, labels, cg_width, cg_height);
            const auto graph = pd::compile(p, bind_labels(p, labels), options);
            report = pd::check_logit_gradient(graph, logits, cg_h, cg_tol);
        } else {
            std::optional<pd::AttentionStack> stack;
            if (!cg_map.empty()) {
                stack = pd::read_amap_file(cg_map);
            } else {
                auto labels = channel_labels(p, cg_tokens);
                std::mt19937_64 rng(cg_seed);
                std::uniform_real_distribution<double> interior(0.05, 0.95);
                std::vector<double> values(labels.size() * cg_width * cg_height);
                for (double& v : values) v = interior(rng);
                stack.emplace(std::move(labels), cg_width, cg_height, std::move(values));
            }
            const auto graph = pd::compile(p, pd::bind_by_label(p, *stack), options);
            report = pd::check_gradient(graph, *stack, cg_h, cg_tol);
        }
        print_report(report);
        if (!report.passed) {
            std::cerr << "GradientMismatch: max relative error " << report.max_relative_error << " exceeds "
                      << cg_tol << '\n';
            return 1;
        }
        return 0;
    }

    if (*simulate) {
        pd::RunManifest m;
        if (!sim_manifest.empty()) {
            std::ifstream in(sim_manifest);
            m = pd::read_manifest(in);
        } else {
            if (sim_dsl.empty()) throw CLI::RequiredError("--dsl");
            const auto p = pd::parse_dsl(sim_dsl);
            m.dsl = pd::print_dsl(p);
            m.tokens = channel_labels(p, sim_tokens);
            m.binding = bind_labels(p, m.tokens);
            m.width = sim_width;
            m.height = sim_height;
            cfg.compile = options;
            m.config = cfg;
        }
        const auto traj = pd::simulate(m);
        pd::write_run(sim_out, m, traj);
        const auto final_eval = pd::evaluate(pd::compile(pd::parse_dsl(m.dsl), m.binding, m.config.compile),
                                             traj.final_stack);
        std::cout << "records=" << traj.records.size() << '\n'
                  << "initial.loss=" << pd::format_fixed9(traj.initial.loss) << '\n'
                  << "final.degree=" << pd::format_fixed9(final_eval.degree) << '\n'
                  << "final.loss=" << pd::format_fixed9(final_eval.loss) << '\n';
        for (std::size_t k = 0; k < final_eval.conjuncts.size(); ++k) {
            std::cout << "final.conjunct." << k << ".degree=" << pd::format_fixed9(final_eval.conjuncts[k].degree)
                      << '\n';
        }
        std::cout << "out=" << sim_out << '\n';
        return 0;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const CLI::Error& e) {
        std::cerr << "usage: " << e.what() << '\n';
        return 2;
    } catch (const pd::Error& e) {
        std::cerr << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "Error: " << e.what() << '\n';
        return 1;
    }
}
