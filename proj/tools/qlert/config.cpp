#include "config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "qlert/error.hpp"
#include "qlert/mesh_generate.hpp"

namespace qlert::cli {

using nlohmann::json;

ConfigError::ConfigError(std::string path, const std::string& what)
    : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

Command parse_command(const std::string& name) {
    if (name == "solve") return Command::solve;
    if (name == "sweep") return Command::sweep;
    if (name == "oracle") return Command::oracle;
    if (name == "tomo") return Command::tomo;
    throw ConfigError("", "unknown command '" + name + "'");
}

const char* command_name(Command c) {
    switch (c) {
        case Command::solve: return "solve";
        case Command::sweep: return "sweep";
        case Command::oracle: return "oracle";
        case Command::tomo: return "tomo";
    }
    return "?";
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Object reader that records which keys were consumed; finish() rejects the rest.
class Obj {
public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    }

    const std::string& path() const { return path_; }
    std::string at_path(const std::string& key) const { return join(path_, key); }
    bool has(const std::string& key) const { return j_.contains(key); }

    const json& get(const std::string& key) {
        if (!j_.contains(key)) throw ConfigError(at_path(key), "missing required key");
        used_.insert(key);
        return j_.at(key);
    }

    double num(const std::string& key) {
        const json& v = get(key);
        if (!v.is_number()) throw ConfigError(at_path(key), "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(at_path(key), "expected a finite number");
        return d;
    }
    double num(const std::string& key, double fallback) { return has(key) ? num(key) : fallback; }

    double positive(const std::string& key) {
        const double d = num(key);
        if (!(d > 0.0)) throw ConfigError(at_path(key), "must be positive");
        return d;
    }
    double positive(const std::string& key, double fallback) { return has(key) ? positive(key) : fallback; }

    long long integer(const std::string& key) {
        const json& v = get(key);
        if (!v.is_number_integer()) throw ConfigError(at_path(key), "expected an integer");
        return v.get<long long>();
    }
    long long integer(const std::string& key, long long fallback) { return has(key) ? integer(key) : fallback; }

    std::string str(const std::string& key) {
        const json& v = get(key);
        if (!v.is_string()) throw ConfigError(at_path(key), "expected a string");
        return v.get<std::string>();
    }
    std::string str(const std::string& key, const std::string& fallback) { return has(key) ? str(key) : fallback; }

    std::vector<double> numbers(const std::string& key) {
        const json& v = get(key);
        if (!v.is_array() || v.empty()) throw ConfigError(at_path(key), "expected a non-empty array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ConfigError(at_path(key) + "[" + std::to_string(i) + "]", "expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    Point2 point(const std::string& key) {
        const std::vector<double> v = numbers(key);
        if (v.size() != 2) throw ConfigError(at_path(key), "expected [x, y]");
        return {v[0], v[1]};
    }

    Obj child(const std::string& key) { return Obj(get(key), at_path(key)); }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!used_.contains(key)) throw ConfigError(at_path(key), "unknown key");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

template <class F>
auto wrap(const std::string& path, F&& f) {
    try {
        return f();
    } catch (const InvalidArgument& e) {
        throw ConfigError(path, e.what());
    }
}

Regularization parse_regularization(Obj o) {
    Regularization r;
    r.e_floor = o.positive("e_floor_V_per_m", r.e_floor);
    r.sigma_cap = o.positive("sigma_cap_S_per_m", r.sigma_cap);
    o.finish();
    return r;
}

MaterialModel parse_material(Obj o) {
    Regularization reg;
    if (o.has("regularization")) reg = parse_regularization(o.child("regularization"));
    const std::string kind = o.str("model");
    MaterialModel m;
    if (kind == "linear") {
        const double s = o.positive("sigma_S_per_m");
        m = wrap(o.path(), [&] { return MaterialModel(LinearLaw{s}, reg); });
    } else if (kind == "power_law") {
        const double jc = o.positive("jc_A_per_m2");
        const double n = o.num("n");
        const double e0 = o.positive("e0_V_per_m");
        m = wrap(o.path(), [&] { return MaterialModel::power_law(jc, n, e0, reg); });
    } else if (kind == "weighted_power") {
        const double theta = o.positive("theta");
        const double p = o.num("p");
        m = wrap(o.path(), [&] { return MaterialModel::weighted_power(theta, p, reg); });
    } else if (kind == "preset") {
        const std::string name = o.str("name");
        m = wrap(o.at_path("name"), [&] { return material_preset(name, reg); });
    } else {
        throw ConfigError(o.at_path("model"), "expected linear, power_law, weighted_power or preset");
    }
    o.finish();
    return m;
}

GeometryConfig parse_geometry(Obj o) {
    GeometryConfig g;
    g.shape = o.str("shape");
    g.outer_radius = o.positive("outer_radius_m");
    g.refinement = static_cast<int>(o.integer("refinement"));
    if (g.refinement < 1) throw ConfigError(o.at_path("refinement"), "must be at least 1");
    if (g.shape == "annulus") {
        g.inner_radius = o.positive("inner_radius_m");
        if (g.inner_radius >= g.outer_radius) throw ConfigError(o.at_path("inner_radius_m"), "must be below the outer radius");
    } else if (g.shape == "cable") {
        g.petal_radius = o.positive("petal_radius_m");
        const json& c = o.get("petal_centers_m");
        const std::string cpath = o.at_path("petal_centers_m");
        if (!c.is_array() || c.empty()) throw ConfigError(cpath, "expected a non-empty array of [x, y]");
        for (std::size_t i = 0; i < c.size(); ++i) {
            const std::string p = cpath + "[" + std::to_string(i) + "]";
            if (!c[i].is_array() || c[i].size() != 2 || !c[i][0].is_number() || !c[i][1].is_number())
                throw ConfigError(p, "expected [x, y]");
            g.petal_centers.push_back({c[i][0].get<double>(), c[i][1].get<double>()});
        }
    } else if (g.shape != "disk") {
        throw ConfigError(o.at_path("shape"), "expected disk, annulus or cable");
    }
    o.finish();
    return g;
}

MaterialsConfig parse_materials(Obj o) {
    MaterialsConfig m;
    m.matrix = parse_material(o.child("matrix"));
    if (o.has("inclusion")) m.inclusion = parse_material(o.child("inclusion"));
    if (o.has("defect")) m.defect = parse_material(o.child("defect"));
    m.defect_factor = o.positive("defect_factor", m.defect_factor);
    o.finish();
    return m;
}

BoundaryConfig parse_boundary(Obj o) {
    BoundaryConfig b;
    b.profile = o.str("profile");
    if (b.profile != "x-linear") throw ConfigError(o.at_path("profile"), "only x-linear is supported");
    b.amplitude = o.positive("amplitude_V");
    if (o.has("electrodes")) {
        Obj e = o.child("electrodes");
        const auto count = e.integer("count");
        const double coverage = e.num("coverage");
        const double phase = e.num("phase_rad", 0.0);
        e.finish();
        b.electrodes = wrap(e.path(), [&] {
            ElectrodeLayout l = ElectrodeLayout::uniform(static_cast<int>(count), coverage, phase);
            l.validate();
            return l;
        });
    }
    o.finish();
    return b;
}

NonlinearSolveConfig parse_solver(Obj o) {
    NonlinearSolveConfig s;
    s.max_picard_iter = static_cast<int>(o.integer("max_picard_iter", s.max_picard_iter));
    s.picard_tol = o.positive("picard_tol", s.picard_tol);
    if (o.has("damping")) s.damping = o.num("damping");
    s.linear_tol = o.positive("linear_tol", s.linear_tol);
    s.linear_max_iter = static_cast<int>(o.integer("linear_max_iter", s.linear_max_iter));
    const std::string init = o.str("initial", "linear");
    if (init == "linear") s.initial = InitialGuess::linear;
    else if (init == "zero") s.initial = InitialGuess::zero;
    else throw ConfigError(o.at_path("initial"), "expected linear or zero");
    o.finish();
    wrap(o.path(), [&] {
        s.validate();
        return 0;
    });
    return s;
}

ForwardModel parse_forward(Obj& o, const std::string& key) {
    const std::string m = o.str(key);
    if (m == "nonlinear") return ForwardModel::nonlinear;
    if (m == "pec_limit") return ForwardModel::pec_limit;
    throw ConfigError(o.at_path(key), "expected nonlinear or pec_limit");
}

int parse_image_size(Obj& o) {
    const auto px = o.integer("image_size_px", 640);
    if (px < 64 || px > 8192) throw ConfigError(o.at_path("image_size_px"), "must be in [64, 8192]");
    return static_cast<int>(px);
}

SolveTask parse_solve(Obj o) {
    SolveTask t;
    t.model = parse_forward(o, "model");
    t.image_size = parse_image_size(o);
    o.finish();
    return t;
}

SweepTask parse_sweep(Obj o) {
    SweepTask t;
    t.lambda_max = o.positive("lambda_max");
    t.lambda_min = o.positive("lambda_min");
    if (t.lambda_min >= t.lambda_max) throw ConfigError(o.at_path("lambda_min"), "must be below lambda_max");
    t.per_decade = static_cast<int>(o.integer("per_decade", t.per_decade));
    if (t.per_decade < 1) throw ConfigError(o.at_path("per_decade"), "must be at least 1");
    const std::string limit = o.str("limit", "pec");
    if (limit == "pec") t.limit = LimitKind::pec;
    else if (limit == "pei") t.limit = LimitKind::pei;
    else throw ConfigError(o.at_path("limit"), "expected pec or pei");
    t.p0 = o.num("p0", t.p0);
    if (!(t.p0 > 1.0)) throw ConfigError(o.at_path("p0"), "must exceed 1");
    o.finish();
    return t;
}

OracleTask parse_oracle(Obj o) {
    OracleTask t;
    t.r = o.num("r", t.r);
    if (!(t.r > 2.0)) throw ConfigError(o.at_path("r"), "must exceed 2");
    if (o.has("refinements")) {
        t.refinements.clear();
        for (double d : o.numbers("refinements")) {
            if (d != std::floor(d) || d < 1) throw ConfigError(o.at_path("refinements"), "expected positive integers");
            t.refinements.push_back(static_cast<int>(d));
        }
        for (std::size_t i = 1; i < t.refinements.size(); ++i) {
            if (t.refinements[i] <= t.refinements[i - 1])
                throw ConfigError(o.at_path("refinements"), "must be increasing");
        }
    }
    auto radii = [&](const std::string& key, std::vector<double>& dst) {
        if (!o.has(key)) return;
        dst = o.numbers(key);
        for (double r : dst) {
            if (!(r > 2.0)) throw ConfigError(o.at_path(key), "radii must exceed 2");
        }
    };
    radii("margin_radii", t.margin_radii);
    radii("ratio_radii", t.ratio_radii);
    t.big_l = o.num("L", t.big_l);
    if (!(t.big_l > 10.0)) throw ConfigError(o.at_path("L"), "must exceed 10");
    t.lambda_pp1 = o.positive("lambda_pp1", t.lambda_pp1);
    t.cycles = static_cast<int>(o.integer("cycles", t.cycles));
    if (t.cycles < 1 || t.cycles > 32) throw ConfigError(o.at_path("cycles"), "must be in [1, 32]");
    o.finish();
    return t;
}

TomoTask parse_tomo(Obj o) {
    TomoTask t;
    t.forward = parse_forward(o, "forward");
    t.eta = o.num("eta");
    if (t.eta < 0.0) throw ConfigError(o.at_path("eta"), "must be nonnegative");
    if (o.has("seed")) {
        const auto s = o.integer("seed");
        if (s < 0) throw ConfigError(o.at_path("seed"), "must be nonnegative");
        t.seed = static_cast<std::uint64_t>(s);
    }
    t.test_radii = o.numbers("test_radii_m");
    for (double r : t.test_radii) {
        if (!(r > 0.0)) throw ConfigError(o.at_path("test_radii_m"), "radii must be positive");
    }
    t.test_spacing = o.positive("test_spacing_m");
    const json& d = o.get("defect_discs");
    const std::string dpath = o.at_path("defect_discs");
    if (!d.is_array() || d.empty()) throw ConfigError(dpath, "expected a non-empty array of discs");
    for (std::size_t i = 0; i < d.size(); ++i) {
        Obj disc(d[i], dpath + "[" + std::to_string(i) + "]");
        DefectDisc dd;
        dd.center = disc.point("center_m");
        dd.radius = disc.positive("radius_m");
        disc.finish();
        t.defect.push_back(dd);
    }
    if (o.has("delta_S")) {
        t.delta = o.num("delta_S");
        if (*t.delta < 0.0) throw ConfigError(o.at_path("delta_S"), "must be nonnegative");
    }
    t.tol_rel = o.num("tol_rel", t.tol_rel);
    if (t.tol_rel < 0.0) throw ConfigError(o.at_path("tol_rel"), "must be nonnegative");
    t.image_size = parse_image_size(o);
    o.finish();
    return t;
}

}  // namespace

Mesh GeometryConfig::build() const {
    if (shape == "disk") return generate_disk(outer_radius, refinement);
    if (shape == "annulus") return generate_annulus(inner_radius, outer_radius, refinement, AnnulusCore::filled);
    return generate_petal_cable(outer_radius, petal_centers, petal_radius, refinement);
}

std::set<int> GeometryConfig::inclusion_labels() const {
    std::set<int> out;
    if (shape == "annulus") out.insert(1);
    if (shape == "cable") {
        for (std::size_t k = 0; k < petal_centers.size(); ++k) out.insert(static_cast<int>(k) + 1);
    }
    return out;
}

MaterialModel MaterialsConfig::defect_model() const {
    if (defect) return *defect;
    const auto* lin = std::get_if<LinearLaw>(&matrix.law());
    if (!lin) throw ConfigError("materials.defect", "required when the matrix material is not linear");
    return MaterialModel::linear(defect_factor * lin->sigma0);
}

MaterialMap MaterialsConfig::map_for(const Mesh& mesh) const {
    MaterialMap out;
    for (const auto& [label, info] : mesh.region_table()) {
        switch (info.kind) {
            case RegionKind::matrix: out.emplace(label, matrix); break;
            case RegionKind::inclusion:
                if (!inclusion) throw ConfigError("materials.inclusion", "missing required key");
                out.emplace(label, *inclusion);
                break;
            case RegionKind::defect: out.emplace(label, defect_model()); break;
        }
    }
    return out;
}

RunConfig parse_config(const std::string& text, Command command) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    Obj root(doc, "");
    RunConfig cfg;
    cfg.command = command;
    cfg.hash = fnv1a_hex(doc.dump());

    if (root.str("units") != "SI") throw ConfigError("units", "only SI is supported");
    const bool needs_scene = command != Command::oracle;
    if (needs_scene || root.has("geometry")) cfg.geometry = parse_geometry(root.child("geometry"));
    if (needs_scene || root.has("materials")) cfg.materials = parse_materials(root.child("materials"));
    if (needs_scene || root.has("boundary")) cfg.boundary = parse_boundary(root.child("boundary"));
    if (root.has("solver")) cfg.solver = parse_solver(root.child("solver"));

    Obj task = root.child("task");
    if (task.has("solve") || command == Command::solve) cfg.solve = parse_solve(task.child("solve"));
    if (task.has("sweep") || command == Command::sweep) cfg.sweep = parse_sweep(task.child("sweep"));
    if (task.has("oracle") || command == Command::oracle) cfg.oracle = parse_oracle(task.child("oracle"));
    if (task.has("tomo") || command == Command::tomo) cfg.tomo = parse_tomo(task.child("tomo"));
    task.finish();
    root.finish();

    if (cfg.geometry && cfg.materials && !cfg.geometry->inclusion_labels().empty() && !cfg.materials->inclusion)
        throw ConfigError("materials.inclusion", "missing required key");
    if (command == Command::tomo && !cfg.boundary->electrodes)
        throw ConfigError("boundary.electrodes", "missing required key");
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, Command command) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("cannot read config file " + path.string());
    return parse_config(buf.str(), command);
}

}  // namespace qlert::cli
