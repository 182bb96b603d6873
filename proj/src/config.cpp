#include "nlat/config.hpp"

#include "nlat/error.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace nlat {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys)
{
    if (!j.is_object()) throw ValidationError("config: '" + (path.empty() ? "<root>" : path) + "' must be an object");
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (const char* a : keys) ok = ok || k == a;
        if (!ok) throw ValidationError("config: unknown key '" + join(path, k) + "'");
    }
}

double num(const json& j, const std::string& path, const char* key, double def)
{
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_number()) throw ValidationError("config: '" + join(path, key) + "' must be a number");
    return v.get<double>();
}

int integer(const json& j, const std::string& path, const char* key, int def)
{
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_number_integer()) throw ValidationError("config: '" + join(path, key) + "' must be an integer");
    return v.get<int>();
}

bool flag(const json& j, const std::string& path, const char* key, bool def)
{
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_boolean()) throw ValidationError("config: '" + join(path, key) + "' must be a boolean");
    return v.get<bool>();
}

std::string str(const json& j, const std::string& path, const char* key, const std::string& def)
{
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_string()) throw ValidationError("config: '" + join(path, key) + "' must be a string");
    return v.get<std::string>();
}

std::vector<double> numbers(const json& v, const std::string& path)
{
    if (!v.is_array()) throw ValidationError("config: '" + path + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ValidationError("config: '" + path + "' must be an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

Vec3 vec3(const json& v, const std::string& path)
{
    auto n = numbers(v, path);
    if (n.size() != 3) throw ValidationError("config: '" + path + "' must have 3 entries");
    return {n[0], n[1], n[2]};
}

UniaxialSpec uniaxial_spec(const json& j, const std::string& path, UniaxialSpec def)
{
    allow_keys(j, path, {"s", "n"});
    def.s = num(j, path, "s", def.s);
    if (j.contains("n")) def.n = vec3(j["n"], join(path, "n"));
    require_unit(def.n, (path + ".n").c_str(), 1e-12);
    return def;
}

BulkModel parse_bulk(const json& j)
{
    const std::string path = "bulk";
    std::string type = str(j, path, "type", "");
    BulkModel bm;
    if (type == "ldg") {
        allow_keys(j, path, {"type", "a", "b", "c"});
        bm = BulkLdg{num(j, path, "a", 0.0), num(j, path, "b", 0.0), num(j, path, "c", 1.0)};
    } else if (type == "rp") {
        allow_keys(j, path, {"type", "a"});
        bm = BulkRp{num(j, path, "a", 0.0)};
    } else if (type == "gen") {
        allow_keys(j, path, {"type", "a"});
        if (!j.contains("a")) throw ValidationError("config: 'bulk.a' is required for type gen");
        bm = BulkGen{numbers(j["a"], "bulk.a")};
    } else {
        throw ValidationError("config: 'bulk.type' must be one of ldg, rp, gen");
    }
    validate(bm);
    return bm;
}

SurfaceModel parse_surface(const json& j, bool& include_s)
{
    const std::string path = "surface";
    std::string type = str(j, path, "type", "");
    SurfaceModel sm;
    if (type == "ldg") {
        allow_keys(j, path, {"type", "a", "ap", "b", "bp", "c", "cp", "p", "include_S_faces"});
        SurfaceLdg m;
        m.a = num(j, path, "a", m.a), m.ap = num(j, path, "ap", m.ap);
        m.b = num(j, path, "b", m.b), m.bp = num(j, path, "bp", m.bp);
        m.c = num(j, path, "c", m.c), m.cp = num(j, path, "cp", m.cp);
        m.p = num(j, path, "p", m.p);
        sm = m;
    } else if (type == "rp") {
        allow_keys(j, path, {"type", "a", "ap", "p", "include_rp_constant", "include_S_faces"});
        SurfaceRp m;
        m.a = num(j, path, "a", m.a), m.ap = num(j, path, "ap", m.ap), m.p = num(j, path, "p", m.p);
        m.include_constant = flag(j, path, "include_rp_constant", false);
        sm = m;
    } else if (type == "gen") {
        allow_keys(j, path, {"type", "b", "p", "include_S_faces"});
        if (!j.contains("b")) throw ValidationError("config: 'surface.b' is required for type gen");
        sm = SurfaceGen{numbers(j["b"], "surface.b"), num(j, path, "p", 1.0)};
    } else if (type == "asym") {
        allow_keys(j, path, {"type", "a", "ap", "b", "bp", "c", "cp", "p", "q", "r", "include_S_faces"});
        SurfaceAsym m;
        m.a = num(j, path, "a", m.a), m.ap = num(j, path, "ap", m.ap);
        m.b = num(j, path, "b", m.b), m.bp = num(j, path, "bp", m.bp);
        m.c = num(j, path, "c", m.c), m.cp = num(j, path, "cp", m.cp);
        m.p = num(j, path, "p", m.p), m.q = num(j, path, "q", m.q), m.r = num(j, path, "r", m.r);
        sm = m;
    } else {
        throw ValidationError("config: 'surface.type' must be one of ldg, rp, gen, asym");
    }
    include_s = flag(j, path, "include_S_faces", false);
    validate(sm);
    return sm;
}

MinimizeConfig parse_minimize(const json& j)
{
    const std::string path = "minimize";
    allow_keys(j, path,
               {"max_iters", "grad_tol", "step_rule", "fixed_step", "initial_step", "shrink", "c1", "growth",
                "max_backtracks", "direction", "init", "init_uniaxial"});
    MinimizeConfig m;
    m.max_iters = integer(j, path, "max_iters", m.max_iters);
    m.grad_tol = num(j, path, "grad_tol", m.grad_tol);
    std::string rule = str(j, path, "step_rule", "armijo");
    if (rule == "armijo")
        m.step_rule = MinimizeConfig::StepRule::Armijo;
    else if (rule == "fixed")
        m.step_rule = MinimizeConfig::StepRule::Fixed;
    else
        throw ValidationError("config: 'minimize.step_rule' must be armijo or fixed");
    m.fixed_step = num(j, path, "fixed_step", m.fixed_step);
    m.armijo.initial_step = num(j, path, "initial_step", m.armijo.initial_step);
    m.armijo.shrink = num(j, path, "shrink", m.armijo.shrink);
    m.armijo.c1 = num(j, path, "c1", m.armijo.c1);
    m.armijo.growth = num(j, path, "growth", m.armijo.growth);
    m.armijo.max_backtracks = integer(j, path, "max_backtracks", m.armijo.max_backtracks);
    std::string dir = str(j, path, "direction", "steepest_descent");
    if (dir == "steepest_descent")
        m.direction = MinimizeConfig::Direction::SteepestDescent;
    else if (dir == "conjugate_gradient")
        m.direction = MinimizeConfig::Direction::ConjugateGradient;
    else
        throw ValidationError("config: 'minimize.direction' must be steepest_descent or conjugate_gradient");
    std::string init = str(j, path, "init", "boundary_constant");
    if (init == "boundary_constant")
        m.init.kind = Initializer::Kind::BoundaryConstant;
    else if (init == "zero")
        m.init.kind = Initializer::Kind::Zero;
    else if (init == "uniaxial")
        m.init.kind = Initializer::Kind::Uniaxial;
    else
        throw ValidationError("config: 'minimize.init' must be boundary_constant, zero or uniaxial");
    if (j.contains("init_uniaxial")) m.init.uniaxial = uniaxial_spec(j["init_uniaxial"], "minimize.init_uniaxial", {});
    m.validate();
    return m;
}

FieldSource parse_field(const json& j)
{
    const std::string path = "field";
    allow_keys(j, path, {"kind", "name", "uniaxial", "path"});
    FieldSource f;
    std::string kind = str(j, path, "kind", "analytic");
    if (kind == "analytic") {
        f.kind = FieldSource::Kind::Analytic;
        f.analytic = str(j, path, "name", f.analytic);
    } else if (kind == "uniaxial") {
        f.kind = FieldSource::Kind::Uniaxial;
        if (j.contains("uniaxial")) f.uniaxial = uniaxial_spec(j["uniaxial"], "field.uniaxial", f.uniaxial);
    } else if (kind == "zero") {
        f.kind = FieldSource::Kind::Zero;
    } else if (kind == "snapshot") {
        f.kind = FieldSource::Kind::Snapshot;
        f.snapshot = str(j, path, "path", "");
        if (f.snapshot.empty()) throw ValidationError("config: 'field.path' is required for kind snapshot");
    } else {
        throw ValidationError("config: 'field.kind' must be analytic, uniaxial, zero or snapshot");
    }
    return f;
}

}  // namespace

std::string config_hash(const json& doc)
{
    std::string s = doc.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunConfig parse_config(const json& doc)
{
    allow_keys(doc, "",
               {"scaffold", "elastic", "bulk", "surface", "energy", "grid", "minimize", "boundary", "field", "study",
                "output", "seed"});
    RunConfig c;

    if (!doc.contains("scaffold")) throw ValidationError("config: 'scaffold' section is required");
    {
        const json& j = doc["scaffold"];
        const std::string path = "scaffold";
        allow_keys(j, path, {"eps", "eps_list", "alpha", "p", "q", "r", "domain", "export_obj"});
        if (j.contains("eps") && j.contains("eps_list"))
            throw ValidationError("config: give either 'scaffold.eps' or 'scaffold.eps_list'");
        if (j.contains("eps"))
            c.eps_list = {num(j, path, "eps", 0.0)};
        else if (j.contains("eps_list"))
            c.eps_list = numbers(j["eps_list"], "scaffold.eps_list");
        else
            throw ValidationError("config: 'scaffold.eps' or 'scaffold.eps_list' is required");
        if (c.eps_list.empty()) throw ValidationError("config: 'scaffold.eps_list' is empty");
        c.alpha = num(j, path, "alpha", c.alpha);
        c.p = num(j, path, "p", c.p), c.q = num(j, path, "q", c.q), c.r = num(j, path, "r", c.r);
        if (j.contains("domain")) {
            const json& d = j["domain"];
            allow_keys(d, "scaffold.domain", {"lo", "hi"});
            if (!d.contains("lo") || !d.contains("hi")) throw ValidationError("config: 'scaffold.domain' needs lo and hi");
            c.domain = Box{vec3(d["lo"], "scaffold.domain.lo"), vec3(d["hi"], "scaffold.domain.hi")};
        }
        c.export_obj = flag(j, path, "export_obj", false);
        for (std::size_t i = 0; i < c.eps_list.size(); ++i) c.scaffold_params(i).validate();
    }
    if (doc.contains("elastic")) {
        const json& j = doc["elastic"];
        allow_keys(j, "elastic", {"L1", "L2", "L3"});
        c.model.elastic = {num(j, "elastic", "L1", 1.0), num(j, "elastic", "L2", 0.0), num(j, "elastic", "L3", 0.0)};
    }
    if (doc.contains("bulk")) c.model.bulk = parse_bulk(doc["bulk"]);
    if (doc.contains("surface")) c.model.surface = parse_surface(doc["surface"], c.model.include_s_faces);
    if (doc.contains("energy")) {
        const json& j = doc["energy"];
        allow_keys(j, "energy", {"functional", "quad_order"});
        c.functional = str(j, "energy", "functional", c.functional);
        if (c.functional != "eps" && c.functional != "homogenised" && c.functional != "both")
            throw ValidationError("config: 'energy.functional' must be eps, homogenised or both");
        c.model.quad_order = integer(j, "energy", "quad_order", c.model.quad_order);
    }
    c.model.validate();
    if (doc.contains("grid")) {
        const json& j = doc["grid"];
        allow_keys(j, "grid", {"cells", "cap"});
        c.grid_cells = integer(j, "grid", "cells", 0);
        c.grid_cap = integer(j, "grid", "cap", 96);
        if (c.grid_cells < 0) throw ValidationError("config: 'grid.cells' must be >= 0");
        if (c.grid_cap < 4) throw ValidationError("config: 'grid.cap' must be >= 4");
    }
    if (doc.contains("minimize")) c.minimize = parse_minimize(doc["minimize"]);
    if (doc.contains("boundary")) c.boundary = uniaxial_spec(doc["boundary"], "boundary", c.boundary);
    if (doc.contains("field")) c.field = parse_field(doc["field"]);
    if (doc.contains("study")) {
        const json& j = doc["study"];
        const std::string path = "study";
        allow_keys(j, path, {"tag", "q_field", "reference_cells", "reference_order", "a_prime", "threshold", "director"});
        c.study = str(j, path, "tag", "");
        c.q_field = str(j, path, "q_field", c.q_field);
        c.reference_quadrature.cells = integer(j, path, "reference_cells", c.reference_quadrature.cells);
        c.reference_quadrature.order = integer(j, path, "reference_order", c.reference_quadrature.order);
        if (j.contains("a_prime")) c.phase.a_prime = numbers(j["a_prime"], "study.a_prime");
        c.phase.threshold = num(j, path, "threshold", c.phase.threshold);
        if (j.contains("director")) c.phase.director = vec3(j["director"], "study.director");
        require_unit(c.phase.director, "study.director", 1e-12);
    }
    if (doc.contains("output")) {
        const json& j = doc["output"];
        allow_keys(j, "output", {"dir", "formats"});
        c.out_dir = str(j, "output", "dir", c.out_dir);
        if (j.contains("formats")) {
            if (!j["formats"].is_array()) throw ValidationError("config: 'output.formats' must be an array");
            c.formats.clear();
            for (const auto& f : j["formats"]) {
                if (!f.is_string()) throw ValidationError("config: 'output.formats' must hold strings");
                std::string s = f.get<std::string>();
                if (s != "json" && s != "csv" && s != "obj" && s != "snapshot")
                    throw ValidationError("config: unknown output format '" + s + "'");
                c.formats.insert(s);
            }
        }
    }
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned()) throw ValidationError("config: 'seed' must be a non-negative integer");
        c.seed = doc["seed"].get<std::uint64_t>();
    }
    c.normalized = doc;
    set_seed(c, c.seed);
    return c;
}

void set_seed(RunConfig& cfg, std::uint64_t seed)
{
    cfg.seed = seed;
    cfg.normalized["seed"] = seed;
    cfg.hash = config_hash(cfg.normalized);
}

RunConfig parse_config_text(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config: malformed JSON: ") + e.what());
    }
    return parse_config(doc);
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

ScaffoldParams RunConfig::scaffold_params(std::size_t i) const
{
    ScaffoldParams sp;
    sp.eps = eps_list.at(i);
    sp.alpha = alpha;
    sp.p = p, sp.q = q, sp.r = r;
    sp.domain = domain;
    return sp;
}

Grid RunConfig::grid() const
{
    if (grid_cells > 0) {
        Grid g = Grid::with_cells(domain, grid_cells);
        if (g.nx > grid_cap || g.ny > grid_cap || g.nz > grid_cap)
            throw ValidationError("config: 'grid.cells' exceeds 'grid.cap'");
        return g;
    }
    return grid_for_scaffold(scaffold_params(eps_list.size() - 1), grid_cap);
}

SweepConfig RunConfig::sweep() const
{
    SweepConfig s;
    s.study = study;
    s.eps_list = eps_list;
    s.alpha = alpha;
    s.p = p, s.q = q, s.r = r;
    s.domain = domain;
    s.grid_cap = grid_cap;
    s.grid_cells = grid_cells;
    s.model = model;
    s.boundary = boundary;
    s.minimize = minimize;
    s.q_field = q_field;
    s.reference_quadrature = reference_quadrature;
    s.phase = phase;
    s.seed = seed;
    s.config_hash = hash;
    s.config_json = normalized.dump();
    return s;
}

}  // namespace nlat
