#include "cbody/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

namespace cbody {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError((path.empty() ? std::string("/") : path) + ": " + what);
}

void require_object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) fail(path + "/" + key, "unknown field");
    }
}

const json* find(const json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

const json& required(const json& j, const std::string& path, const char* key) {
    const json* v = find(j, key);
    if (!v) fail(path + "/" + key, "missing required field");
    return *v;
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "expected a finite number");
    return v;
}

double number_or(const json& j, const std::string& path, const char* key, double fallback) {
    const json* v = find(j, key);
    return v ? as_number(*v, path + "/" + key) : fallback;
}

long integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<long>();
}

long integer_or(const json& j, const std::string& path, const char* key, long fallback) {
    const json* v = find(j, key);
    return v ? integer(*v, path + "/" + key) : fallback;
}

std::uint64_t seed_or(const json& j, const std::string& path, const char* key, std::uint64_t fallback) {
    const json* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
        fail(path + "/" + key, "expected a non-negative integer");
    }
    return v->get<std::uint64_t>();
}

template <class Vec>
Vec vector(const json& j, const std::string& path, int size) {
    if (!j.is_array()) fail(path, "expected an array");
    if (static_cast<int>(j.size()) != size) fail(path, "expected " + std::to_string(size) + " entries");
    Vec v(size);
    for (int i = 0; i < size; ++i) v[i] = as_number(j[i], path + "/" + std::to_string(i));
    return v;
}

MatD matrix(const json& j, const std::string& path, int d) {
    if (!j.is_array() || static_cast<int>(j.size()) != d) fail(path, "expected " + std::to_string(d) + " rows");
    MatD m(d, d);
    for (int i = 0; i < d; ++i) {
        const VecD row = vector<VecD>(j[i], path + "/" + std::to_string(i), d);
        m.row(i) = row.transpose();
    }
    return m;
}

std::string string_field(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

ReferenceGrid parse_grid(const json& j, const std::string& path) {
    require_object(j, path, {"dim", "cells", "origin", "extents", "boundary"});
    const long dim = integer(required(j, path, "dim"), path + "/dim");
    if (dim != 2 && dim != 3) fail(path + "/dim", "must be 2 or 3");
    const int d = static_cast<int>(dim);
    const json& cj = required(j, path, "cells");
    if (!cj.is_array() || static_cast<int>(cj.size()) != d) fail(path + "/cells", "expected " + std::to_string(d) + " entries");
    std::array<int, 3> cells{1, 1, 1};
    for (int a = 0; a < d; ++a) {
        const long c = integer(cj[a], path + "/cells/" + std::to_string(a));
        if (c < 1 || c > 4096) fail(path + "/cells/" + std::to_string(a), "must lie in [1, 4096]");
        cells[a] = static_cast<int>(c);
    }
    const VecD origin = find(j, "origin") ? vector<VecD>(j["origin"], path + "/origin", d) : VecD(VecD::Zero(d));
    const VecD extents = find(j, "extents") ? vector<VecD>(j["extents"], path + "/extents", d) : VecD(VecD::Ones(d));
    for (int a = 0; a < d; ++a) {
        if (!(extents[a] > 0.0)) fail(path + "/extents/" + std::to_string(a), "must be > 0");
    }
    std::array<FaceCondition, 6> faces{};
    if (const json* b = find(j, "boundary")) {
        const std::string bp = path + "/boundary";
        if (!b->is_object()) fail(bp, "expected an object");
        for (const auto& [key, value] : b->items()) {
            Face f;
            try {
                f = parse_face(key);
            } catch (const Error&) {
                fail(bp + "/" + key, "unknown face (expected x-min, x-max, y-min, y-max, z-min or z-max)");
            }
            if (static_cast<int>(f) / 2 >= d) fail(bp + "/" + key, "face does not exist in dimension " + std::to_string(d));
            if (!value.is_array()) fail(bp + "/" + key, "expected an array of conditions");
            for (std::size_t i = 0; i < value.size(); ++i) {
                const std::string cp = bp + "/" + key + "/" + std::to_string(i);
                const std::string c = string_field(value[i], cp);
                if (c == "dirichlet-u") {
                    faces[static_cast<int>(f)].dirichlet_u = true;
                } else if (c == "dirichlet-nu") {
                    faces[static_cast<int>(f)].dirichlet_nu = true;
                } else {
                    fail(cp, "unknown condition '" + c + "' (expected dirichlet-u or dirichlet-nu)");
                }
            }
        }
    }
    return ReferenceGrid(d, cells, origin, extents, faces);
}

EnergyModel parse_energy(const json& j, const std::string& path, int d, int n) {
    require_object(j, path,
                   {"mu", "delta", "c4", "kappa", "alpha", "r", "s", "body_force", "substructural_field", "weight"});
    EnergyModel m = EnergyModel::zero_loads(d, n);
    m.mu = number_or(j, path, "mu", m.mu);
    m.delta = number_or(j, path, "delta", m.delta);
    m.c4 = number_or(j, path, "c4", m.c4);
    m.kappa = number_or(j, path, "kappa", m.kappa);
    m.alpha = number_or(j, path, "alpha", m.alpha);
    m.r = number_or(j, path, "r", m.r);
    m.s = number_or(j, path, "s", m.s);
    if (const json* b = find(j, "body_force")) m.body_force = vector<VecD>(*b, path + "/body_force", d);
    if (const json* b = find(j, "substructural_field")) {
        m.substructural_field = vector<VecN>(*b, path + "/substructural_field", n);
    }
    if (const json* w = find(j, "weight")) {
        const std::string wp = path + "/weight";
        require_object(*w, wp, {"kind", "value", "gradient"});
        const std::string kind = string_field(required(*w, wp, "kind"), wp + "/kind");
        m.weight.value = number_or(*w, wp, "value", 1.0);
        m.weight.gradient = VecD::Zero(d);
        if (kind == "constant") {
            m.weight.kind = WeightFunction::Kind::Constant;
            if (find(*w, "gradient")) fail(wp + "/gradient", "not used by a constant weight");
        } else if (kind == "linear-ramp") {
            m.weight.kind = WeightFunction::Kind::LinearRamp;
            m.weight.gradient = vector<VecD>(required(*w, wp, "gradient"), wp + "/gradient", d);
        } else {
            fail(wp + "/kind", "unknown weight '" + kind + "' (expected constant or linear-ramp)");
        }
    }
    return m;
}

BoundaryData parse_boundary(const json& j, const std::string& path, const ManifoldSpec& spec,
                            const ReferenceGrid& grid) {
    const int d = grid.dim();
    const int n = spec.embedding_dim;
    require_object(j, path, {"u", "nu"});
    MatD A = MatD::Identity(d, d);
    VecD b = VecD::Zero(d);
    if (const json* u = find(j, "u")) {
        const std::string up = path + "/u";
        require_object(*u, up, {"kind", "matrix", "offset"});
        const std::string kind = string_field(required(*u, up, "kind"), up + "/kind");
        if (kind == "identity") {
            if (find(*u, "matrix") || find(*u, "offset")) fail(up, "identity takes no matrix or offset");
        } else if (kind == "constant") {
            if (find(*u, "matrix")) fail(up + "/matrix", "a constant displacement takes no matrix");
            b = vector<VecD>(required(*u, up, "offset"), up + "/offset", d);
        } else if (kind == "affine") {
            A = matrix(required(*u, up, "matrix"), up + "/matrix", d);
            if (const json* o = find(*u, "offset")) b = vector<VecD>(*o, up + "/offset", d);
            if (!(det(A) > 0.0)) fail(up + "/matrix", "must have positive determinant");
        } else {
            fail(up + "/kind", "unknown boundary deformation '" + kind + "' (expected identity, constant or affine)");
        }
    }
    VecN nu0 = VecN::Zero(n);
    nu0[n - 1] = spec.is_sphere() ? 1.0 : 0.0;
    if (const json* v = find(j, "nu")) {
        nu0 = vector<VecN>(*v, path + "/nu", n);
        if (!on_manifold(spec, nu0, 1e-10)) fail(path + "/nu", "is not a point of " + spec.key());
    }
    return BoundaryData::affine(grid, A, b, nu0);
}

} // namespace

void RunConfig::set_seed(std::uint64_t seed) {
    solver.seed = seed;
    verify.seed = seed;
    probe.seed = seed;
}

Tolerances RunConfig::tolerances(double scale) const {
    Tolerances t = default_tolerances(grid(), solver.tol_stat, scale);
    if (verify.tol_eq) t.tol_eq = *verify.tol_eq * scale;
    if (verify.tol_config) t.tol_config = *verify.tol_config * scale;
    return t;
}

RunConfig parse_config(const json& doc) {
    require_object(doc, "",
                   {"grid", "manifold", "energy", "boundary_data", "initial", "solver", "verify", "probe", "output"});
    RunConfig cfg;
    cfg.echo = doc;
    const std::string key = string_field(required(doc, "", "manifold"), "/manifold");
    try {
        cfg.spec = ManifoldSpec::parse(key);
    } catch (const Error& e) {
        fail("/manifold", e.what());
    }
    cfg.grid_storage.emplace(parse_grid(required(doc, "", "grid"), "/grid"));
    const ReferenceGrid& grid = cfg.grid();
    const int d = grid.dim();
    const int n = cfg.spec.embedding_dim;

    cfg.model = find(doc, "energy") ? parse_energy(doc["energy"], "/energy", d, n) : EnergyModel::zero_loads(d, n);
    try {
        cfg.model.validate(d, n, grid.origin(), grid.extents());
    } catch (const Error& e) {
        fail("/energy", e.what());
    }

    cfg.boundary = find(doc, "boundary_data") ? parse_boundary(doc["boundary_data"], "/boundary_data", cfg.spec, grid)
                                              : parse_boundary(json::object(), "/boundary_data", cfg.spec, grid);

    if (const json* ini = find(doc, "initial")) {
        require_object(*ini, "/initial", {"nu", "nu_perturbation", "u_perturbation"});
        if (const json* v = find(*ini, "nu")) {
            cfg.initial.has_nu = true;
            cfg.initial.nu = vector<VecN>(*v, "/initial/nu", n);
        }
        cfg.initial.nu_perturbation = number_or(*ini, "/initial", "nu_perturbation", 0.0);
        cfg.initial.u_perturbation = number_or(*ini, "/initial", "u_perturbation", 0.0);
        if (cfg.initial.nu_perturbation < 0.0) fail("/initial/nu_perturbation", "must be >= 0");
        if (cfg.initial.u_perturbation < 0.0) fail("/initial/u_perturbation", "must be >= 0");
    }

    if (const json* s = find(doc, "solver")) {
        const std::string sp = "/solver";
        require_object(*s, sp,
                       {"max_iterations", "tol_stat", "initial_step", "backtracking", "sufficient_decrease", "seed"});
        cfg.solver.max_iterations = integer_or(*s, sp, "max_iterations", cfg.solver.max_iterations);
        cfg.solver.tol_stat = number_or(*s, sp, "tol_stat", cfg.solver.tol_stat);
        cfg.solver.initial_step = number_or(*s, sp, "initial_step", cfg.solver.initial_step);
        cfg.solver.backtracking = number_or(*s, sp, "backtracking", cfg.solver.backtracking);
        cfg.solver.sufficient_decrease = number_or(*s, sp, "sufficient_decrease", cfg.solver.sufficient_decrease);
        cfg.solver.seed = seed_or(*s, sp, "seed", cfg.solver.seed);
    }
    try {
        cfg.solver.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("/") + e.what());
    }
    cfg.verify.seed = cfg.solver.seed;
    cfg.probe.seed = cfg.solver.seed;

    if (const json* v = find(doc, "verify")) {
        const std::string vp = "/verify";
        require_object(*v, vp, {"tol_eq", "tol_config", "test_basis_size", "seed"});
        if (find(*v, "tol_eq")) cfg.verify.tol_eq = number_or(*v, vp, "tol_eq", 0.0);
        if (find(*v, "tol_config")) cfg.verify.tol_config = number_or(*v, vp, "tol_config", 0.0);
        if (cfg.verify.tol_eq && !(*cfg.verify.tol_eq > 0.0)) fail(vp + "/tol_eq", "must be > 0");
        if (cfg.verify.tol_config && !(*cfg.verify.tol_config > 0.0)) fail(vp + "/tol_config", "must be > 0");
        const long size = integer_or(*v, vp, "test_basis_size", cfg.verify.test_basis_size);
        if (size < 1 || size > 100000) fail(vp + "/test_basis_size", "must lie in [1, 100000]");
        cfg.verify.test_basis_size = static_cast<int>(size);
        cfg.verify.seed = seed_or(*v, vp, "seed", cfg.verify.seed);
    }
    if (const json* p = find(doc, "probe")) {
        require_object(*p, "/probe", {"samples", "seed"});
        cfg.probe.samples = integer_or(*p, "/probe", "samples", cfg.probe.samples);
        if (cfg.probe.samples < 1) fail("/probe/samples", "must be >= 1");
        cfg.probe.seed = seed_or(*p, "/probe", "seed", cfg.probe.seed);
    }
    if (const json* o = find(doc, "output")) cfg.output = string_field(*o, "/output");
    return cfg;
}

RunConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    return parse_config(doc);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config_text(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

} // namespace cbody
