#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "kleinlab/families.hpp"
#include "kleinlab/image.hpp"
#include "kleinlab/rng.hpp"

namespace kleinlab {

struct SpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Structured-text experiment specs
//
// Grammar (one entry per line, # starts a comment):
//   key = scalar          scalars: numbers, bare words, "quoted strings"
//   key = [v1, v2, ...]
//   key { ... }           nested section
// Unknown keys are errors at validation time; file bytes are hashed verbatim
// so artifacts can quote the exact spec they came from.
// ---------------------------------------------------------------------------

struct SpecNode {
    std::vector<std::pair<std::string, std::string>> scalars;
    std::vector<std::pair<std::string, std::vector<double>>> arrays;
    std::vector<std::pair<std::string, std::shared_ptr<SpecNode>>> sections;

    const std::string* find(const std::string& key) const {
        for (const auto& [k, v] : scalars)
            if (k == key) return &v;
        return nullptr;
    }
    const std::vector<double>* find_array(const std::string& key) const {
        for (const auto& [k, v] : arrays)
            if (k == key) return &v;
        return nullptr;
    }
    const SpecNode* find_section(const std::string& key) const {
        for (const auto& [k, v] : sections)
            if (k == key) return v.get();
        return nullptr;
    }

    double number(const std::string& key, std::optional<double> fallback = {}) const {
        const std::string* s = find(key);
        if (!s) {
            if (fallback) return *fallback;
            throw SpecError("spec: missing key '" + key + "'");
        }
        try {
            size_t used = 0;
            double v = std::stod(*s, &used);
            if (used != s->size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw SpecError("spec: key '" + key + "' is not a number: " + *s);
        }
    }

    std::string text(const std::string& key, std::optional<std::string> fallback = {}) const {
        const std::string* s = find(key);
        if (!s) {
            if (fallback) return *fallback;
            throw SpecError("spec: missing key '" + key + "'");
        }
        return *s;
    }

    void check_keys(const std::vector<std::string>& scalarKeys,
                    const std::vector<std::string>& arrayKeys,
                    const std::vector<std::string>& sectionKeys,
                    const std::string& where) const {
        auto known = [](const std::vector<std::string>& keys, const std::string& k) {
            for (const auto& kk : keys)
                if (kk == k) return true;
            return false;
        };
        for (const auto& [k, v] : scalars)
            if (!known(scalarKeys, k)) throw SpecError("spec: unknown key '" + k + "' in " + where);
        for (const auto& [k, v] : arrays)
            if (!known(arrayKeys, k)) throw SpecError("spec: unknown array '" + k + "' in " + where);
        for (const auto& [k, v] : sections)
            if (!known(sectionKeys, k))
                throw SpecError("spec: unknown section '" + k + "' in " + where);
    }
};

namespace detail {

inline std::string spec_trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

inline SpecNode parse_spec(const std::string& text) {
    SpecNode root;
    std::vector<SpecNode*> stack{&root};
    size_t lineNo = 0, pos = 0;
    while (pos <= text.size()) {
        size_t eol = text.find('\n', pos);
        std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos
                                                                     : eol - pos);
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
        ++lineNo;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::spec_trim(line);
        if (line.empty()) continue;
        auto fail = [&](const std::string& msg) {
            throw SpecError("spec line " + std::to_string(lineNo) + ": " + msg);
        };
        if (line == "}") {
            if (stack.size() == 1) fail("unmatched '}'");
            stack.pop_back();
            continue;
        }
        if (line.back() == '{') {
            std::string key = detail::spec_trim(line.substr(0, line.size() - 1));
            if (key.empty()) fail("section needs a name");
            auto node = std::make_shared<SpecNode>();
            stack.back()->sections.emplace_back(key, node);
            stack.push_back(node.get());
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos) fail("expected 'key = value', 'key {' or '}'");
        std::string key = detail::spec_trim(line.substr(0, eq));
        std::string value = detail::spec_trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) fail("empty key or value");
        if (value.front() == '[') {
            if (value.back() != ']') fail("unterminated array");
            std::vector<double> vals;
            std::string inner = value.substr(1, value.size() - 2);
            size_t p = 0;
            while (p < inner.size()) {
                size_t comma = inner.find(',', p);
                std::string item = detail::spec_trim(
                    inner.substr(p, comma == std::string::npos ? std::string::npos : comma - p));
                if (!item.empty()) {
                    try {
                        vals.push_back(std::stod(item));
                    } catch (...) {
                        fail("bad array element '" + item + "'");
                    }
                }
                p = comma == std::string::npos ? inner.size() : comma + 1;
            }
            stack.back()->arrays.emplace_back(key, std::move(vals));
            continue;
        }
        if (value.front() == '"') {
            if (value.size() < 2 || value.back() != '"') fail("unterminated string");
            value = value.substr(1, value.size() - 2);
        }
        stack.back()->scalars.emplace_back(key, value);
    }
    if (stack.size() != 1) throw SpecError("spec: unterminated section");
    return root;
}

// ---------------------------------------------------------------------------
// Experiment specs
// ---------------------------------------------------------------------------

enum class ExperimentKind {
    render,
    hausdorff_curve,
    ct_converge,
    uep,
    uepp,
    ep,
    floyd,
    geom_verify
};

inline ExperimentKind kind_from_string(const std::string& s) {
    if (s == "render") return ExperimentKind::render;
    if (s == "hausdorff-curve") return ExperimentKind::hausdorff_curve;
    if (s == "ct-converge") return ExperimentKind::ct_converge;
    if (s == "uep") return ExperimentKind::uep;
    if (s == "uepp") return ExperimentKind::uepp;
    if (s == "ep") return ExperimentKind::ep;
    if (s == "floyd") return ExperimentKind::floyd;
    if (s == "geom-verify") return ExperimentKind::geom_verify;
    throw SpecError("spec: unknown experiment kind '" + s + "'");
}

inline const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::render: return "render";
        case ExperimentKind::hausdorff_curve: return "hausdorff-curve";
        case ExperimentKind::ct_converge: return "ct-converge";
        case ExperimentKind::uep: return "uep";
        case ExperimentKind::uepp: return "uepp";
        case ExperimentKind::ep: return "ep";
        case ExperimentKind::floyd: return "floyd";
        default: return "geom-verify";
    }
}

struct FamilySpec {
    std::string name;
    std::string type;  // punctured-torus | schottky | schottky-interpolation |
                       // constant-schottky | cyclic
    Complex x{0, 0}, y{0, 0};
    RootChoice root = RootChoice::smaller;
    double center = 3.0, center_start = 3.0, center_end = 4.0, radius = 1.0;
    int steps = 16;
    double sigma = 1.0;
    int count = 16;
};

struct ExperimentCaps {
    int sample_depth = 10;
    int grid_depth = 6;
    int grid_size = 200;
    int path_reps = 12;
    int table_max = 30;
    int depth_cap = 31;
    int exhaustive_cap = 10;
    int samples_per_length = 512;
    int pool_spread = 4;
    int pool_per_depth = 64;
    int floyd_depth = 10;
    std::string ep_word = "a";
    int ep_path_reps = 40;
    double match_delta = 0.5;
};

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::render;
    uint64_t seed = 1;
    int jobs = 1;
    FamilySpec family;
    ExperimentCaps caps;
    ImageSpec image;
    std::string canonical_text;
    uint64_t hash = 0;
};

inline FamilySpec parse_family(const SpecNode& node) {
    node.check_keys({"name", "type", "x-re", "x-im", "y-re", "y-im", "root", "center",
                     "center-start", "center-end", "radius", "steps", "sigma", "count"},
                    {}, {}, "family");
    FamilySpec fam;
    fam.type = node.text("type");
    fam.name = node.text("name", fam.type);
    fam.x = Complex(node.number("x-re", 3.0), node.number("x-im", 0.0));
    fam.y = Complex(node.number("y-re", 3.0), node.number("y-im", 0.0));
    std::string root = node.text("root", "smaller");
    if (root != "smaller" && root != "larger") throw SpecError("spec: root must be smaller|larger");
    fam.root = root == "smaller" ? RootChoice::smaller : RootChoice::larger;
    fam.center = node.number("center", 3.0);
    fam.center_start = node.number("center-start", 3.0);
    fam.center_end = node.number("center-end", 4.0);
    fam.radius = node.number("radius", 1.0);
    fam.steps = static_cast<int>(node.number("steps", 16));
    fam.sigma = node.number("sigma", 1.0);
    fam.count = static_cast<int>(node.number("count", 16));
    if (fam.type != "punctured-torus" && fam.type != "schottky" &&
        fam.type != "schottky-interpolation" && fam.type != "constant-schottky" &&
        fam.type != "cyclic")
        throw SpecError("spec: unknown family type '" + fam.type + "'");
    return fam;
}

inline ExperimentSpec load_experiment(const std::string& text) {
    SpecNode root = parse_spec(text);
    root.check_keys({}, {}, {"experiment"}, "top level");
    const SpecNode* exp = root.find_section("experiment");
    if (!exp) throw SpecError("spec: missing experiment section");
    exp->check_keys({"kind", "seed", "jobs"}, {}, {"family", "caps", "image"}, "experiment");

    ExperimentSpec spec;
    spec.kind = kind_from_string(exp->text("kind"));
    spec.seed = static_cast<uint64_t>(exp->number("seed", 1));
    spec.jobs = static_cast<int>(exp->number("jobs", 1));
    const SpecNode* fam = exp->find_section("family");
    if (!fam) throw SpecError("spec: missing family section");
    spec.family = parse_family(*fam);

    if (const SpecNode* caps = exp->find_section("caps")) {
        caps->check_keys({"sample-depth", "grid-depth", "grid-size", "path-reps", "table-max",
                          "depth-cap", "exhaustive-cap", "samples-per-length", "pool-spread",
                          "pool-per-depth", "floyd-depth", "ep-word", "ep-path-reps",
                          "match-delta"},
                         {}, {}, "caps");
        spec.caps.sample_depth = static_cast<int>(caps->number("sample-depth", 10));
        spec.caps.grid_depth = static_cast<int>(caps->number("grid-depth", 6));
        spec.caps.grid_size = static_cast<int>(caps->number("grid-size", 200));
        spec.caps.path_reps = static_cast<int>(caps->number("path-reps", 12));
        spec.caps.table_max = static_cast<int>(caps->number("table-max", 30));
        spec.caps.depth_cap = static_cast<int>(caps->number("depth-cap", 31));
        spec.caps.exhaustive_cap = static_cast<int>(caps->number("exhaustive-cap", 10));
        spec.caps.samples_per_length = static_cast<int>(caps->number("samples-per-length", 512));
        spec.caps.pool_spread = static_cast<int>(caps->number("pool-spread", 4));
        spec.caps.pool_per_depth = static_cast<int>(caps->number("pool-per-depth", 64));
        spec.caps.floyd_depth = static_cast<int>(caps->number("floyd-depth", 10));
        spec.caps.ep_word = caps->text("ep-word", "a");
        spec.caps.ep_path_reps = static_cast<int>(caps->number("ep-path-reps", 40));
        spec.caps.match_delta = caps->number("match-delta", 0.5);
    }
    if (const SpecNode* img = exp->find_section("image")) {
        img->check_keys({"width", "height", "projection"}, {"window"}, {}, "image");
        spec.image.width = static_cast<int>(img->number("width", 640));
        spec.image.height = static_cast<int>(img->number("height", 640));
        std::string proj = img->text("projection", "plane");
        if (proj != "plane" && proj != "sphere")
            throw SpecError("spec: projection must be plane|sphere");
        spec.image.projection =
            proj == "plane" ? ImageSpec::Projection::plane : ImageSpec::Projection::sphere;
        if (const auto* window = img->find_array("window")) {
            if (window->size() != 4) throw SpecError("spec: window needs [xmin, xmax, ymin, ymax]");
            spec.image.auto_window = false;
            spec.image.xmin = (*window)[0];
            spec.image.xmax = (*window)[1];
            spec.image.ymin = (*window)[2];
            spec.image.ymax = (*window)[3];
        }
    }
    spec.canonical_text = text;
    spec.hash = fnv1a64(text);
    return spec;
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

struct BuiltFamily {
    std::optional<Representation> single;
    std::optional<RepSequence> sequence;
    std::optional<CyclicFamily> cyclic;

    const Representation& primary() const {
        if (single) return *single;
        if (sequence) return sequence->source();
        throw std::runtime_error("family: nothing built");
    }
};

inline BuiltFamily build_family(const FamilySpec& fam) {
    BuiltFamily out;
    if (fam.type == "punctured-torus") {
        out.single = make_punctured_torus(fam.x, fam.y, fam.root);
    } else if (fam.type == "schottky") {
        out.single = make_schottky_standard(fam.center, fam.radius);
    } else if (fam.type == "schottky-interpolation") {
        out.sequence =
            make_schottky_interpolation(fam.center_start, fam.center_end, fam.radius, fam.steps);
    } else if (fam.type == "constant-schottky") {
        out.sequence =
            make_constant_sequence(make_schottky_standard(fam.center, fam.radius), fam.steps);
    } else if (fam.type == "cyclic") {
        CyclicSchedules s;
        s.sigma = fam.sigma;
        out.cyclic = make_cyclic_family(s, fam.count);
        out.sequence = out.cyclic->seq;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shipped presets (the files under presets/ carry identical bytes; a test
// keeps them in sync)
// ---------------------------------------------------------------------------

inline const std::map<std::string, std::string>& presets() {
    static const std::map<std::string, std::string> table = {
        {"fuchsian-333",
         "experiment {\n"
         "  kind = render\n"
         "  seed = 7\n"
         "  family {\n"
         "    name = fuchsian-333\n"
         "    type = punctured-torus\n"
         "    x-re = 3\n"
         "    y-re = 3\n"
         "    root = smaller\n"
         "  }\n"
         "  caps {\n"
         "    sample-depth = 12\n"
         "    floyd-depth = 10\n"
         "  }\n"
         "  image {\n"
         "    width = 640\n"
         "    height = 640\n"
         "    projection = plane\n"
         "    window = [-4, 4, -4, 4]\n"
         "  }\n"
         "}\n"},
        {"schottky-strong",
         "experiment {\n"
         "  kind = ct-converge\n"
         "  seed = 11\n"
         "  family {\n"
         "    name = schottky-strong\n"
         "    type = schottky-interpolation\n"
         "    center-start = 3\n"
         "    center-end = 4\n"
         "    radius = 1\n"
         "    steps = 32\n"
         "  }\n"
         "  caps {\n"
         "    grid-depth = 6\n"
         "    grid-size = 200\n"
         "    path-reps = 12\n"
         "    sample-depth = 10\n"
         "    table-max = 30\n"
         "    depth-cap = 31\n"
         "    exhaustive-cap = 10\n"
         "    samples-per-length = 512\n"
         "  }\n"
         "}\n"},
        {"cyclic-remark57",
         "experiment {\n"
         "  kind = uep\n"
         "  seed = 5\n"
         "  family {\n"
         "    name = cyclic-remark57\n"
         "    type = cyclic\n"
         "    sigma = 1\n"
         "    count = 16\n"
         "  }\n"
         "  caps {\n"
         "    table-max = 30\n"
         "    depth-cap = 260\n"
         "    grid-depth = 2\n"
         "    grid-size = 8\n"
         "    path-reps = 30\n"
         "    match-delta = 0.3\n"
         "  }\n"
         "}\n"},
        {"constant-seq",
         "experiment {\n"
         "  kind = ct-converge\n"
         "  seed = 3\n"
         "  family {\n"
         "    name = constant-seq\n"
         "    type = constant-schottky\n"
         "    center = 3\n"
         "    radius = 1\n"
         "    steps = 16\n"
         "  }\n"
         "  caps {\n"
         "    grid-depth = 5\n"
         "    grid-size = 100\n"
         "    path-reps = 12\n"
         "  }\n"
         "}\n"},
    };
    return table;
}

}  // namespace kleinlab
