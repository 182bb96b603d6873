#pragma once

#include "nlat/energy.hpp"
#include "nlat/homogenize.hpp"
#include "nlat/scaffold.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace nlat {

struct Grid {
    Box domain{};
    int nx = 0, ny = 0, nz = 0;
    double h = 0.0;

    // n voxels along x; the other axes must be integer multiples of the resulting spacing.
    static Grid with_cells(const Box& domain, int n_x);
    // Coarsest uniform grid with spacing <= h_max.
    static Grid with_spacing(const Box& domain, double h_max);

    std::size_t size() const { return static_cast<std::size_t>(nx) * ny * nz; }
    std::size_t index(int i, int j, int k) const
    {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) * (j + static_cast<std::size_t>(ny) * k);
    }
    std::array<int, 3> dims() const { return {nx, ny, nz}; }
    Vec3 center(int i, int j, int k) const
    {
        return {domain.lo[0] + (i + 0.5) * h, domain.lo[1] + (j + 0.5) * h, domain.lo[2] + (k + 0.5) * h};
    }
    double cell_volume() const { return h * h * h; }
    void validate() const;
    bool same_as(const Grid& o) const;
};

// Largest admissible spacing for a scaffold: eps^alpha / (2 max(p,q,r)).
double scaffold_spacing(const ScaffoldParams& sp);
// Grid resolving the scaffold, refusing more than cap cells per axis.
Grid grid_for_scaffold(const ScaffoldParams& sp, int cap = 96);

enum class VoxelTag : std::uint8_t { LiquidCrystal, ScaffoldInterior, ScaffoldSurfaceShell, DirichletShell };

inline bool is_scaffold(VoxelTag t) { return t == VoxelTag::ScaffoldInterior || t == VoxelTag::ScaffoldSurfaceShell; }
const char* tag_name(VoxelTag t);

struct Initializer {
    enum class Kind { BoundaryConstant, Zero, Uniaxial };
    Kind kind = Kind::BoundaryConstant;
    UniaxialSpec uniaxial{};
};

struct Field {
    Grid grid;
    std::vector<QTensor> values;
    std::vector<VoxelTag> mask;

    std::size_t count(VoxelTag t) const;
};

// Voxel tags from the scaffold (if any) and the outer shell.
std::vector<VoxelTag> build_mask(const Grid& grid, const Scaffold* scaffold);

Field make_field(const Grid& grid, const Scaffold* scaffold, const QSampler& g, const Initializer& init = {});

struct EnergyModel {
    ElasticParams elastic{};
    BulkModel bulk = BulkRp{0.0};
    SurfaceModel surface = SurfaceRp{};
    bool include_s_faces = false;
    int quad_order = 3;

    void validate() const;
};

struct EnergyBreakdown {
    double elastic = 0.0;
    double bulk = 0.0;
    double surface_t = 0.0;
    double surface_s = 0.0;
    double homogenised = 0.0;

    double total() const { return elastic + bulk + surface_t + surface_s + homogenised; }
};

// A discrete energy bound to a grid layout. Two flavours:
//   eps:          sum over non-scaffold voxels of f_e + f_b, plus scaled surface terms on the faces
//   homogenised:  sum over every voxel of f_e + f_b + f_hom
class Functional {
public:
    static Functional eps(const Field& layout, const EnergyModel& model, const Scaffold& scaffold);
    static Functional homogenised(const Field& layout, const EnergyModel& model, double p, double q, double r);

    EnergyBreakdown evaluate(const Field& f) const;
    double value(const Field& f) const { return evaluate(f).total(); }
    // Returns the energy; grad receives dE/d(stored component) per voxel, zero on fixed voxels.
    double value_and_gradient(const Field& f, std::vector<Comp5>& grad) const;

    // 1 where the voxel is an unknown of this energy.
    const std::vector<std::uint8_t>& free_mask() const { return free_; }
    const Grid& grid() const { return grid_; }
    bool is_eps() const { return kind_ == Kind::Eps; }

    struct SurfaceSample {
        Vec3 nu;
        double weight;  // prefactor times quadrature weight
        std::uint8_t n = 0;
        std::array<std::uint32_t, 8> voxel{};
        std::array<double, 8> w{};
    };

private:
    enum class Kind { Eps, Hom };
    Kind kind_ = Kind::Eps;
    Grid grid_;
    EnergyModel model_;
    double p_ = 1.0, q_ = 1.0, r_ = 1.0;
    std::vector<std::uint8_t> active_;  // voxel contributes to the volume sum
    std::vector<std::uint8_t> free_;
    std::vector<std::uint8_t> stencil_;  // bits 2k: minus neighbour usable, 2k+1: plus neighbour usable
    std::vector<SurfaceSample> t_samples_;
    std::vector<SurfaceSample> s_samples_;

    void check(const Field& f) const;
    double volume_terms(const Field& f, EnergyBreakdown* parts, std::vector<Comp5>* grad) const;
    double surface_terms(const Field& f, const std::vector<SurfaceSample>& s, std::vector<Comp5>* grad) const;
};

EnergyBreakdown discrete_F_eps(const Field& f, const EnergyModel& model, const Scaffold& scaffold);
EnergyBreakdown discrete_F_0(const Field& f, const EnergyModel& model, double p, double q, double r);
std::vector<Comp5> energy_gradient(const Field& f, const Functional& F);

struct ArmijoParams {
    double initial_step = 1.0;
    double shrink = 0.5;
    double c1 = 1e-4;
    double growth = 2.0;
    int max_backtracks = 60;
};

struct MinimizeConfig {
    enum class StepRule { Fixed, Armijo };
    enum class Direction { SteepestDescent, ConjugateGradient };

    int max_iters = 2000;
    // sup-norm of the gradient divided by the voxel volume
    double grad_tol = 1e-6;
    StepRule step_rule = StepRule::Armijo;
    double fixed_step = 1e-3;
    ArmijoParams armijo{};
    Direction direction = Direction::SteepestDescent;
    Initializer init{};

    void validate() const;
};

struct MinimizeReport {
    int iterations = 0;
    double initial_energy = 0.0;
    double final_energy = 0.0;
    double grad_norm = 0.0;
    bool converged = false;
    std::string stop_reason;
    std::vector<double> energy_trace;
};

struct MinimizeResult {
    Field field;
    MinimizeReport report;
};

MinimizeResult minimize(const Field& start, const Functional& F, const MinimizeConfig& cfg);

// sup over free voxels of |dE/dq| / h^3
double gradient_sup_norm(const std::vector<Comp5>& grad, const Functional& F);

struct ExtensionResult {
    Field field;
    int sweeps = 0;
    double max_update = 0.0;
    bool converged = false;
    std::string warning;
};

ExtensionResult harmonic_extension(const Field& f, const Scaffold& scaffold, int max_sweeps = 200000,
                                   double tol = 1e-10);

struct FieldNorms {
    double l2 = 0.0;
    double h1 = 0.0;
};

FieldNorms norms(const Field& a, const Field& b);
// L2 norm of the discrete gradient; with lc_only the sum and the stencils skip scaffold voxels.
double gradient_l2(const Field& f, bool lc_only);

// Mean of Q over voxels selected by the predicate.
QTensor mean_q(const Field& f, bool exclude_scaffold);

struct Snapshot {
    Grid grid;
    std::vector<QTensor> values;
};

void write_snapshot(const Field& f, const std::filesystem::path& path, const std::string& config_hash = "");
Snapshot read_snapshot(const std::filesystem::path& path);
std::string mask_statistics_json(const Field& f, const std::string& config_hash = "");

}  // namespace nlat
