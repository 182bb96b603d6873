#include "nlat/config.hpp"
#include "nlat/error.hpp"
#include "nlat/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kFailure = 1, kValidation = 2, kDiverged = 3, kStudyFailed = 4 };

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary);
    os << text;
    if (!os) throw std::runtime_error("cannot write " + path.string());
    std::cout << "wrote " << path.string() << "\n";
}

fs::path out_path(const nlat::RunConfig& cfg, const std::string& stem, const std::string& ext)
{
    return fs::path(cfg.out_dir) / (stem + "_" + cfg.hash + ext);
}

ordered_json header(const nlat::RunConfig& cfg, const std::string& command)
{
    ordered_json j;
    j["command"] = command;
    j["config_hash"] = cfg.hash;
    j["config"] = cfg.normalized;
    return j;
}

ordered_json breakdown_json(const nlat::EnergyBreakdown& b)
{
    return {{"elastic", b.elastic},
            {"bulk", b.bulk},
            {"J_T", b.surface_t},
            {"J_S", b.surface_s},
            {"f_hom", b.homogenised},
            {"total", b.total()}};
}

nlat::QSampler source_sampler(const nlat::RunConfig& cfg)
{
    using K = nlat::FieldSource::Kind;
    switch (cfg.field.kind) {
    case K::Analytic: return nlat::analytic_field(cfg.field.analytic, cfg.domain);
    case K::Uniaxial: {
        nlat::QTensor q = nlat::uniaxial(cfg.field.uniaxial);
        return [q](const nlat::Vec3&) { return q; };
    }
    case K::Zero: return [](const nlat::Vec3&) { return nlat::QTensor{}; };
    case K::Snapshot: break;
    }
    return {};
}

// Field on the configured grid holding the configured source everywhere.
nlat::Field source_field(const nlat::RunConfig& cfg, const nlat::Grid& g, const nlat::Scaffold* s)
{
    nlat::QTensor gq = nlat::uniaxial(cfg.boundary);
    nlat::Field f = nlat::make_field(g, s, [gq](const nlat::Vec3&) { return gq; }, {nlat::Initializer::Kind::Zero, {}});
    if (cfg.field.kind == nlat::FieldSource::Kind::Snapshot) {
        nlat::Snapshot snap = nlat::read_snapshot(cfg.field.snapshot);
        if (!snap.grid.same_as(g)) throw nlat::ValidationError("snapshot grid does not match the configured grid");
        f.values = std::move(snap.values);
        return f;
    }
    nlat::QSampler Q = source_sampler(cfg);
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) f.values[g.index(i, j, k)] = Q(g.center(i, j, k));
    return f;
}

int cmd_scaffold(const nlat::RunConfig& cfg)
{
    ordered_json j = header(cfg, "scaffold");
    j["scaffolds"] = ordered_json::array();
    for (std::size_t i = 0; i < cfg.eps_list.size(); ++i) {
        nlat::Scaffold s = nlat::build_scaffold(cfg.scaffold_params(i));
        j["scaffolds"].push_back(ordered_json::parse(nlat::summary_json(s)));
        if (cfg.export_obj && cfg.wants("obj"))
            write_text(out_path(cfg, "scaffold_" + std::to_string(i), ".obj"),
                       "# config_hash " + cfg.hash + "\n" + nlat::to_obj(s));
    }
    if (cfg.wants("json")) write_text(out_path(cfg, "scaffold", ".json"), j.dump(2) + "\n");
    return kOk;
}

int cmd_eval(const nlat::RunConfig& cfg)
{
    nlat::Grid g = cfg.grid();
    ordered_json j = header(cfg, "eval");
    j["grid"] = {{"dims", g.dims()}, {"h", g.h}};
    if (cfg.functional != "homogenised") {
        j["F_eps"] = ordered_json::array();
        for (std::size_t i = 0; i < cfg.eps_list.size(); ++i) {
            nlat::Scaffold s = nlat::build_scaffold(cfg.scaffold_params(i));
            nlat::Field f = source_field(cfg, g, &s);
            nlat::EnergyBreakdown b = nlat::discrete_F_eps(f, cfg.model, s);
            ordered_json row = breakdown_json(b);
            row["eps"] = cfg.eps_list[i];
            row["liquid_crystal_voxels"] = f.count(nlat::VoxelTag::LiquidCrystal);
            j["F_eps"].push_back(row);
        }
    }
    if (cfg.functional != "eps") {
        nlat::Field f = source_field(cfg, g, nullptr);
        j["F_0"] = breakdown_json(nlat::discrete_F_0(f, cfg.model, cfg.p, cfg.q, cfg.r));
        j["f_hom_constant"] = nlat::f_hom_constant(cfg.model.surface, cfg.p, cfg.q, cfg.r);
    }
    for (const auto& w : nlat::warnings(cfg.model.surface)) j["warnings"].push_back(w);
    if (cfg.wants("json")) write_text(out_path(cfg, "eval", ".json"), j.dump(2) + "\n");
    return kOk;
}

int cmd_minimize(const nlat::RunConfig& cfg)
{
    if (cfg.eps_list.size() != 1) throw nlat::ValidationError("minimize: give a single 'scaffold.eps'");
    nlat::Grid g = cfg.grid();
    nlat::QTensor gq = nlat::uniaxial(cfg.boundary);
    nlat::QSampler bc = [gq](const nlat::Vec3&) { return gq; };
    ordered_json j = header(cfg, "minimize");
    j["grid"] = {{"dims", g.dims()}, {"h", g.h}};
    int code = kOk;

    auto run = [&](const std::string& name, const nlat::Scaffold* s) {
        nlat::Field start = nlat::make_field(g, s, bc, cfg.minimize.init);
        if (cfg.field.kind == nlat::FieldSource::Kind::Snapshot) start.values = source_field(cfg, g, s).values;
        nlat::Functional F = s ? nlat::Functional::eps(start, cfg.model, *s)
                               : nlat::Functional::homogenised(start, cfg.model, cfg.p, cfg.q, cfg.r);
        ordered_json r;
        try {
            nlat::MinimizeResult res = nlat::minimize(start, F, cfg.minimize);
            r = {{"iterations", res.report.iterations},
                 {"initial_energy", res.report.initial_energy},
                 {"final_energy", res.report.final_energy},
                 {"grad_norm", res.report.grad_norm},
                 {"converged", res.report.converged},
                 {"stop_reason", res.report.stop_reason},
                 {"energy", breakdown_json(F.evaluate(res.field))},
                 {"mean_order_parameter", nlat::order_parameter(nlat::mean_q(res.field, s != nullptr))}};
            if (cfg.wants("snapshot")) {
                fs::path p = out_path(cfg, "field_" + name, ".nlf");
                nlat::write_snapshot(res.field, p, cfg.hash);
                std::cout << "wrote " << p.string() << " (+ .json)\n";
                r["snapshot"] = p.filename().string();
            }
        } catch (const nlat::DivergedError& e) {
            r = {{"converged", false}, {"stop_reason", "diverged"}, {"message", e.what()}};
            code = kDiverged;
        }
        j[name] = r;
    };

    if (cfg.functional != "homogenised") {
        nlat::Scaffold s = nlat::build_scaffold(cfg.scaffold_params(0));
        run("F_eps", &s);
    }
    if (cfg.functional != "eps") run("F_0", nullptr);
    if (cfg.wants("json")) write_text(out_path(cfg, "minimize", ".json"), j.dump(2) + "\n");
    return code;
}

int cmd_study(const nlat::RunConfig& cfg)
{
    if (cfg.study.empty()) throw nlat::ValidationError("config: 'study.tag' is required for the study command");
    nlat::StudyReport r = nlat::run_study(cfg.sweep());
    if (cfg.wants("csv")) write_text(out_path(cfg, "study_" + r.study, ".csv"), r.to_csv());
    if (cfg.wants("json")) write_text(out_path(cfg, "study_" + r.study, ".json"), r.to_json() + "\n");
    std::cout << "study " << r.study << ": " << (r.passed() ? "PASS" : "FAIL") << "\n" << r.summary();
    return r.passed() ? kOk : kStudyFailed;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Nematic liquid crystal scaffold homogenisation toolkit"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    int threads = 1;
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory (overrides output.dir)");
    app.add_option("--threads", threads, "worker threads");
    auto* seed_opt = app.add_option("--seed", seed, "seed override");
    app.fallthrough();
    auto* scaffold = app.add_subcommand("scaffold", "scaffold summary JSON and OBJ mesh");
    auto* eval = app.add_subcommand("eval", "energy components of a configured field");
    auto* mini = app.add_subcommand("minimize", "minimize F_eps and/or F_0");
    auto* study = app.add_subcommand("study", "run a sweep study");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kValidation;
    }

    try {
        nlat::RunConfig cfg = nlat::load_config(config_path);
        if (*seed_opt) nlat::set_seed(cfg, seed);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        nlat::set_thread_count(threads);
        fs::create_directories(cfg.out_dir);
        std::cout << "config_hash " << cfg.hash << "\n";
        if (*scaffold) return cmd_scaffold(cfg);
        if (*eval) return cmd_eval(cfg);
        if (*mini) return cmd_minimize(cfg);
        if (*study) return cmd_study(cfg);
    } catch (const nlat::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kValidation;
    } catch (const nlat::EmptyLattice& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kValidation;
    } catch (const nlat::DivergedError& e) {
        std::cerr << "diverged: " << e.what() << "\n";
        return kDiverged;
    } catch (const nlat::StudyFailure& e) {
        std::cerr << "study failure: " << e.what() << "\n";
        return kStudyFailed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}
