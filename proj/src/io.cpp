#include "predicated/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "predicated/errors.hpp"

namespace predicated {

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw FormatError("cannot format number");
    return std::string(buf, end);
}

std::string format_fixed9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9f", v);
    return buf;
}

namespace {

double parse_number(std::string_view text, std::size_t line) {
    double v = 0.0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || end != text.data() + text.size()) {
        throw FormatError("line " + std::to_string(line) + ": '" + std::string(text) + "' is not a number");
    }
    return v;
}

std::size_t parse_count(const std::string& text, std::size_t line) {
    std::size_t v = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || end != text.data() + text.size()) {
        throw FormatError("line " + std::to_string(line) + ": '" + text + "' is not a count");
    }
    return v;
}

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    std::string next(const char* what) {
        std::string line;
        while (std::getline(in_, line)) {
            ++number_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") != std::string::npos) return line;
        }
        throw FormatError("unexpected end of input while reading " + std::string(what));
    }

    std::size_t number() const { return number_; }

private:
    std::istream& in_;
    std::size_t number_ = 0;
};

std::vector<std::string> fields(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    std::string f;
    while (in >> f) out.push_back(f);
    return out;
}

}  // namespace

AttentionStack read_amap(std::istream& in) {
    LineReader reader(in);
    auto header = fields(reader.next("header"));
    if (header.size() != 2 || header[0] != "AMAP" || header[1] != "1") {
        throw FormatError("line " + std::to_string(reader.number()) + ": expected 'AMAP 1'");
    }
    auto tokens = fields(reader.next("token count"));
    if (tokens.size() != 2 || tokens[0] != "tokens") {
        throw FormatError("line " + std::to_string(reader.number()) + ": expected 'tokens K'");
    }
    const std::size_t k = parse_count(tokens[1], reader.number());
    auto size = fields(reader.next("size"));
    if (size.size() != 3 || size[0] != "size") {
        throw FormatError("line " + std::to_string(reader.number()) + ": expected 'size W H'");
    }
    const std::size_t w = parse_count(size[1], reader.number());
    const std::size_t h = parse_count(size[2], reader.number());

    std::vector<std::string> labels;
    std::vector<double> values;
    values.reserve(k * w * h);
    for (std::size_t t = 0; t < k; ++t) {
        const std::string line = reader.next("token block");
        if (line.rfind("token ", 0) != 0 || line.size() <= 6) {
            throw FormatError("line " + std::to_string(reader.number()) + ": expected 'token <label>'");
        }
        labels.push_back(line.substr(6));
        for (std::size_t y = 0; y < h; ++y) {
            auto row = fields(reader.next("intensity row"));
            if (row.size() != w) {
                throw FormatError("line " + std::to_string(reader.number()) + ": expected " + std::to_string(w) +
                                  " values, found " + std::to_string(row.size()));
            }
            for (const auto& f : row) values.push_back(parse_number(f, reader.number()));
        }
    }
    if (labels.empty() || labels.front() != kStartOfText) throw FormatError("token block 0 must be labelled <sot>");
    try {
        return AttentionStack(std::move(labels), w, h, std::move(values));
    } catch (const Error& e) {
        throw FormatError(e.what());
    }
}

AttentionStack read_amap_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path + "'");
    return read_amap(in);
}

namespace {

template <class Grid>
void write_blocks(std::ostream& out, const Grid& grid) {
    for (std::size_t t = 0; t < grid.token_count(); ++t) {
        out << "token " << grid.labels()[t] << '\n';
        for (std::size_t y = 0; y < grid.height(); ++y) {
            for (std::size_t x = 0; x < grid.width(); ++x) {
                if (x) out << ' ';
                out << format_double(grid.at(t, y * grid.width() + x));
            }
            out << '\n';
        }
    }
}

}  // namespace

void write_amap(std::ostream& out, const AttentionStack& stack) {
    out << "AMAP 1\n"
        << "tokens " << stack.token_count() << '\n'
        << "size " << stack.width() << ' ' << stack.height() << '\n';
    write_blocks(out, stack);
}

void write_amap_file(const std::string& path, const AttentionStack& stack) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write '" + path + "'");
    write_amap(out, stack);
}

void write_gradient(std::ostream& out, const GradientField& field) {
    out << "GRAD 1\n"
        << "tokens " << field.token_count() << '\n'
        << "size " << field.width() << ' ' << field.height() << '\n';
    write_blocks(out, field);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
    out << "step,loss,degree";
    const std::size_t conjuncts = trajectory.initial.conjuncts.size();
    for (std::size_t k = 0; k < conjuncts; ++k) out << ",conjunct_" << k;
    out << '\n';
    for (const auto& r : trajectory.records) {
        out << r.step << ',' << format_double(r.loss) << ',' << format_double(r.degree);
        for (double c : r.conjunct_losses) out << ',' << format_double(c);
        out << '\n';
    }
}

void write_pgm(std::ostream& out, const AttentionStack& stack, std::size_t token) {
    const auto ch = stack.channel(token);
    out << "P2\n" << stack.width() << ' ' << stack.height() << "\n255\n";
    for (std::size_t y = 0; y < stack.height(); ++y) {
        for (std::size_t x = 0; x < stack.width(); ++x) {
            if (x) out << ' ';
            out << static_cast<int>(std::lround(255.0 * ch[y * stack.width() + x]));
        }
        out << '\n';
    }
}

std::map<std::string, std::string> read_key_values(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("line " + std::to_string(number) + ": expected key=value");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

void write_manifest(std::ostream& out, const RunManifest& m) {
    const auto& c = m.config;
    out << "version=" << m.version << '\n';
    out << "dsl=" << m.dsl << '\n';
    out << "tokens=";
    for (std::size_t i = 0; i < m.tokens.size(); ++i) out << (i ? "," : "") << m.tokens[i];
    out << '\n';
    for (const auto& [name, token] : m.binding) out << "binding." << name << '=' << token << '\n';
    out << "width=" << m.width << '\n';
    out << "height=" << m.height << '\n';
    out << "total_steps=" << c.total_steps << '\n';
    out << "guided_steps=" << c.guided_steps << '\n';
    out << "refinement_rounds=" << c.refinement_rounds << '\n';
    out << "learning_rate=" << format_double(c.learning_rate) << '\n';
    out << "noise_scale=" << format_double(c.noise_scale) << '\n';
    out << "init_scale=" << format_double(c.init_scale) << '\n';
    out << "seed=" << c.seed << '\n';
    out << "semantics=" << to_string(c.compile.backend) << '\n';
    out << "reduction=" << to_string(c.compile.reduction) << '\n';
    out << "alpha=" << format_double(c.compile.alpha) << '\n';
    out << "epsilon=" << format_double(c.compile.epsilon) << '\n';
    out << "normalize_implications=" << (c.compile.normalize_implications ? "true" : "false") << '\n';
}

RunManifest read_manifest(std::istream& in) {
    const auto kv = read_key_values(in);
    auto get = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw FormatError("manifest is missing '" + key + "'");
        return it->second;
    };
    auto number = [&](const std::string& key) { return parse_number(get(key), 0); };
    auto count = [&](const std::string& key) { return parse_count(get(key), 0); };

    RunManifest m;
    m.version = get("version");
    m.dsl = get("dsl");
    std::string tokens = get("tokens");
    std::size_t start = 0;
    while (start <= tokens.size()) {
        const auto comma = tokens.find(',', start);
        m.tokens.push_back(tokens.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    for (const auto& [key, value] : kv) {
        if (key.rfind("binding.", 0) == 0) m.binding[key.substr(8)] = parse_count(value, 0);
    }
    m.width = count("width");
    m.height = count("height");
    auto& c = m.config;
    c.total_steps = count("total_steps");
    c.guided_steps = count("guided_steps");
    c.refinement_rounds = count("refinement_rounds");
    c.learning_rate = number("learning_rate");
    c.noise_scale = number("noise_scale");
    c.init_scale = number("init_scale");
    c.seed = count("seed");
    c.compile.backend = parse_backend(get("semantics"));
    c.compile.reduction = parse_reduction(get("reduction"));
    c.compile.alpha = number("alpha");
    c.compile.epsilon = number("epsilon");
    if (auto it = kv.find("normalize_implications"); it != kv.end()) {
        c.compile.normalize_implications = it->second == "true";
    }
    return m;
}

Trajectory simulate(const RunManifest& m) {
    if (m.version != kArtifactVersion) {
        throw FormatError("manifest version " + m.version + " is not " + std::string(kArtifactVersion));
    }
    const LossGraph graph = compile(parse_dsl(m.dsl), m.binding, m.config.compile);
    return run(m.config, graph, m.tokens, m.width, m.height);
}

void write_run(const std::string& dir, const RunManifest& m, const Trajectory& trajectory) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw FormatError("cannot create '" + dir + "': " + ec.message());
    const fs::path root(dir);
    auto open = [&](const char* name) {
        std::ofstream out(root / name, std::ios::binary);
        if (!out) throw FormatError("cannot write '" + (root / name).string() + "'");
        return out;
    };
    {
        auto out = open("trajectory.csv");
        write_trajectory_csv(out, trajectory);
    }
    {
        auto out = open("initial.amap");
        write_amap(out, trajectory.initial_stack);
    }
    {
        auto out = open("final.amap");
        write_amap(out, trajectory.final_stack);
    }
    {
        auto out = open("manifest.txt");
        write_manifest(out, m);
    }
    for (std::size_t t = 0; t < trajectory.final_stack.token_count(); ++t) {
        const std::string name = "final_" + std::to_string(t) + ".pgm";
        auto out = open(name.c_str());
        write_pgm(out, trajectory.final_stack, t);
    }
}

}  // namespace predicated
