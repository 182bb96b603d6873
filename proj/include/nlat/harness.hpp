#pragma once

#include "nlat/field.hpp"
#include "nlat/numerics.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace nlat {

struct PhaseSweep {
    std::vector<double> a_prime;  // tuned quadratic coefficient values, increasing
    double threshold = 0.05;      // s below this counts as isotropic
    Vec3 director{0.0, 0.0, 1.0};
};

struct SweepConfig {
    std::string study;
    std::vector<double> eps_list;  // decreasing
    double alpha = 1.25;
    double p = 1.0, q = 1.0, r = 1.0;
    Box domain{};
    int grid_cap = 96;
    int grid_cells = 0;  // cells along x; 0 picks the coarsest grid resolving the smallest eps
    EnergyModel model{};
    UniaxialSpec boundary{0.5, {0.0, 0.0, 1.0}};
    MinimizeConfig minimize{};
    std::string q_field = "smooth";
    VolumeQuadrature reference_quadrature{8, 6};
    PhaseSweep phase{};
    std::uint64_t seed = 20240611;
    std::string config_hash;
    std::string config_json;  // provenance copy of the originating config

    void validate() const;
    ScaffoldParams scaffold_params(double eps) const;
};

struct FitCheck {
    std::string name;
    double slope = 0.0;
    double residual = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    bool at_least = false;  // pass if slope >= expected - tolerance, else |slope - expected| <= tolerance
    bool passed = false;
};

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct StudyReport {
    std::string study;
    std::string config_hash;
    std::string config_json;
    std::vector<std::string> columns;  // columns[0] is the sweep variable
    std::vector<std::vector<double>> rows;
    std::vector<FitCheck> fits;
    std::vector<Check> checks;

    bool passed() const;
    std::vector<double> column(const std::string& name) const;
    std::string to_csv() const;
    std::string to_json() const;
    static StudyReport from_json(const std::string& text);
    std::string summary() const;
};

LinearFit fit_order(std::span<const double> eps, std::span<const double> values);

FitCheck make_fit(const std::string& name, std::span<const double> eps, std::span<const double> values,
                  double expected, double tolerance, bool at_least);

// Bounded smooth tensor fields used by the studies.
QSampler analytic_field(const std::string& name, const Box& domain);

struct TestFunction {
    std::string name;
    std::function<double(const Vec3&)> phi;
    double sup = 0.0;       // bound on |phi|
    double grad_sup = 0.0;  // bound on |grad phi|
};

// Five Lipschitz functions with sup + grad_sup <= 1 on the domain.
std::vector<TestFunction> default_test_functions(const Box& domain);

StudyReport study_volume(const SweepConfig& cfg);
StudyReport study_surface(const SweepConfig& cfg);
StudyReport study_flat_norm(const SweepConfig& cfg, const std::vector<TestFunction>& tests);
StudyReport study_J_convergence(const SweepConfig& cfg, const QSampler& Q);
StudyReport study_J_S_decay(const SweepConfig& cfg, const QSampler& Q);
StudyReport study_extension(const SweepConfig& cfg, const QSampler& Q);
StudyReport study_minimizer_convergence(const SweepConfig& cfg);
StudyReport study_phase_tuning(const SweepConfig& cfg);

// Global minimizer over s of the bulk polynomial restricted to uniaxial tensors, by line scan.
double uniaxial_bulk_minimizer(const std::function<double(const QTensor&)>& f, double s_max = 3.0);
// s from the largest eigenvalue of a uniaxial-like tensor.
double order_parameter(const QTensor& q);

StudyReport run_study(const SweepConfig& cfg);

}  // namespace nlat
