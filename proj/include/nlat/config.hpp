#pragma once

#include "nlat/harness.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace nlat {

// Field to evaluate or start from.
struct FieldSource {
    enum class Kind { Analytic, Uniaxial, Zero, Snapshot };
    Kind kind = Kind::Analytic;
    std::string analytic = "smooth";
    UniaxialSpec uniaxial{};
    std::string snapshot;
};

struct RunConfig {
    std::vector<double> eps_list;  // a single "eps" becomes a one-element list
    double alpha = 1.25;
    double p = 1.0, q = 1.0, r = 1.0;
    Box domain{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
    bool export_obj = false;

    EnergyModel model{};
    std::string functional = "both";  // eps | homogenised | both

    int grid_cells = 0;
    int grid_cap = 96;

    MinimizeConfig minimize{};
    UniaxialSpec boundary{0.5, {0.0, 0.0, 1.0}};
    FieldSource field{};

    std::string study;
    std::string q_field = "smooth";
    VolumeQuadrature reference_quadrature{8, 6};
    PhaseSweep phase{};

    std::string out_dir = "out";
    std::set<std::string> formats{"json", "csv", "obj", "snapshot"};

    std::uint64_t seed = 20240611;
    std::string hash;             // 16 hex digits
    nlohmann::json normalized;    // the parsed document with the effective seed

    ScaffoldParams scaffold_params(std::size_t i = 0) const;
    Grid grid() const;
    SweepConfig sweep() const;
    bool wants(const std::string& format) const { return formats.count(format) != 0; }
};

// Throws ValidationError naming the offending key.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Re-hashes after a seed override.
void set_seed(RunConfig& cfg, std::uint64_t seed);

// FNV-1a over the compact dump (keys sorted).
std::string config_hash(const nlohmann::json& doc);

}  // namespace nlat
