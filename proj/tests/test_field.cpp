#include "nlat/error.hpp"
#include "nlat/field.hpp"
#include "nlat/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace nlat;
namespace fs = std::filesystem;

namespace {

const Box kUnit{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};

EnergyModel rp_bulk_only(double a)
{
    EnergyModel m;
    m.bulk = BulkRp{a};
    m.surface = SurfaceRp{0.0, 0.0, 1.0};
    return m;
}

ScaffoldParams quarter()
{
    ScaffoldParams p;
    p.eps = 0.25;
    return p;
}

QSampler constant(const QTensor& q)
{
    return [q](const Vec3&) { return q; };
}

void fill(Field& f, const QSampler& Q)
{
    const Grid& g = f.grid;
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) f.values[g.index(i, j, k)] = Q(g.center(i, j, k));
}

}  // namespace

TEST(Field, GridConstruction)
{
    Grid g = Grid::with_cells(Box{{0.0, 0.0, 0.0}, {1.0, 2.0, 0.5}}, 10);
    EXPECT_EQ(g.dims(), (std::array<int, 3>{10, 20, 5}));
    EXPECT_DOUBLE_EQ(g.h, 0.1);
    EXPECT_THROW(Grid::with_cells(Box{{0.0, 0.0, 0.0}, {1.0, 1.05, 1.0}}, 10), ValidationError);
    Grid s = Grid::with_spacing(kUnit, 0.3);
    EXPECT_LE(s.h, 0.3);
    EXPECT_EQ(s.nx, 4);
}

TEST(Field, GridForScaffoldResolvesAndCaps)
{
    ScaffoldParams p = quarter();
    Grid g = grid_for_scaffold(p);
    EXPECT_LE(g.h, scaffold_spacing(p) * (1.0 + 1e-12));
    p.eps = 0.05;
    EXPECT_THROW(grid_for_scaffold(p, 32), ValidationError);
}

TEST(Field, MaskTags)
{
    Scaffold s = build_scaffold(quarter());
    Grid g = grid_for_scaffold(s.params());
    auto mask = build_mask(g, &s);
    std::size_t shell = 0, scaf = 0;
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                bool outer = i == 0 || j == 0 || k == 0 || i == g.nx - 1 || j == g.ny - 1 || k == g.nz - 1;
                VoxelTag t = mask[g.index(i, j, k)];
                EXPECT_EQ(outer, t == VoxelTag::DirichletShell);
                if (is_scaffold(t)) {
                    ++scaf;
                    EXPECT_NE(s.contains(g.center(i, j, k)), Material::LiquidCrystal);
                }
                shell += outer;
            }
    EXPECT_GT(scaf, 0u);
    EXPECT_EQ(shell, g.size() - static_cast<std::size_t>(g.nx - 2) * (g.ny - 2) * (g.nz - 2));
}

TEST(Field, BoundaryConstantInitializer)
{
    Grid g = Grid::with_cells(kUnit, 6);
    QTensor gq = uniaxial(0.5, {0.0, 0.0, 1.0});
    Field f = make_field(g, nullptr, constant(gq));
    for (std::size_t v = 0; v < g.size(); ++v)
        for (int c = 0; c < 5; ++c) EXPECT_NEAR(f.values[v].components()[c], gq.components()[c], 1e-15);
}

TEST(Field, ZeroFieldHasZeroLdgEnergy)
{
    Grid g = Grid::with_cells(kUnit, 12);
    Scaffold s = build_scaffold(quarter());
    EnergyModel m;
    m.bulk = BulkLdg{-0.5, 1.0, 1.0};
    m.surface = SurfaceLdg{0.1, 0.4, 0.3, 0.2, 1.0, 1.2, 1.0};
    Field f = make_field(g, &s, constant(QTensor{}), {Initializer::Kind::Zero, {}});
    EXPECT_EQ(discrete_F_eps(f, m, s).total(), 0.0);
    Field f0 = make_field(g, nullptr, constant(QTensor{}), {Initializer::Kind::Zero, {}});
    EXPECT_EQ(discrete_F_0(f0, m, 1.0, 1.0, 1.0).total(), 0.0);
}

TEST(Field, BulkQuadratureIsSecondOrder)
{
    QSampler Q = analytic_field("smooth", kUnit);
    EnergyModel m = rp_bulk_only(1.0);
    std::vector<double> e;
    for (int n : {8, 16, 32}) {
        Field f = make_field(Grid::with_cells(kUnit, n), nullptr, Q, {Initializer::Kind::Zero, {}});
        fill(f, Q);
        e.push_back(discrete_F_0(f, m, 1.0, 1.0, 1.0).bulk);
    }
    double order = std::log2(std::abs(e[0] - e[1]) / std::abs(e[1] - e[2]));
    EXPECT_GE(order, 1.9);
}

TEST(Field, GradientMatchesDifferences)
{
    Scaffold s = build_scaffold(quarter());
    Grid g = grid_for_scaffold(s.params());
    EnergyModel m;
    m.elastic = {1.0, 0.3, 0.1};
    m.bulk = BulkLdg{-0.2, 0.8, 1.0};
    m.surface = SurfaceLdg{0.1, 0.9, 0.2, 0.5, 1.0, 1.4, 1.0};
    Field f = make_field(g, &s, analytic_field("smooth", kUnit), {Initializer::Kind::Zero, {}});
    fill(f, analytic_field("smooth", kUnit));
    Functional F = Functional::eps(f, m, s);
    std::vector<Comp5> grad;
    F.value_and_gradient(f, grad);
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
    int tested = 0;
    while (tested < 12) {
        std::size_t v = pick(rng);
        if (!F.free_mask()[v]) continue;
        int c = tested % 5;
        Field a = f, b = f;
        a.values[v].components()[c] += 1e-5;
        b.values[v].components()[c] -= 1e-5;
        double fd = (F.value(a) - F.value(b)) / 2e-5;
        EXPECT_NEAR(grad[v][c], fd, 1e-6 * std::max(1.0, std::abs(fd)));
        ++tested;
    }
}

TEST(Field, MinimizeRpBulkReachesZero)
{
    Grid g = Grid::with_cells(kUnit, 8);
    MinimizeConfig cfg;
    cfg.init = {Initializer::Kind::Uniaxial, {0.5, {1.0, 0.0, 0.0}}};
    cfg.max_iters = 5000;
    cfg.grad_tol = 1e-9;
    Field start = make_field(g, nullptr, constant(QTensor{}), cfg.init);
    Functional F = Functional::homogenised(start, rp_bulk_only(1.0), 1.0, 1.0, 1.0);
    MinimizeResult r = minimize(start, F, cfg);
    EXPECT_TRUE(r.report.converged) << r.report.stop_reason;
    EXPECT_LT(r.report.final_energy, 1e-8);
    const auto& tr = r.report.energy_trace;
    for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_LE(tr[i], tr[i - 1] + 1e-14 * std::max(1.0, std::abs(tr[i - 1])));
}

TEST(Field, MinimizeKeepsDirichletShell)
{
    Scaffold s = build_scaffold(quarter());
    Grid g = grid_for_scaffold(s.params());
    QTensor gq = uniaxial(0.5, {0.0, 0.0, 1.0});
    EnergyModel m;
    m.bulk = BulkRp{0.5};
    m.surface = SurfaceRp{0.0, 0.5, 1.0};
    MinimizeConfig cfg;
    cfg.init = {Initializer::Kind::Zero, {}};
    cfg.direction = MinimizeConfig::Direction::ConjugateGradient;
    cfg.max_iters = 4000;
    Field start = make_field(g, &s, constant(gq), cfg.init);
    Functional F = Functional::eps(start, m, s);
    MinimizeResult r = minimize(start, F, cfg);
    EXPECT_TRUE(r.report.converged) << r.report.stop_reason;
    EXPECT_LT(r.report.final_energy, r.report.initial_energy);
    for (std::size_t v = 0; v < g.size(); ++v)
        if (r.field.mask[v] == VoxelTag::DirichletShell) {
            EXPECT_EQ(r.field.values[v].components(), gq.components());
        }
    const auto& tr = r.report.energy_trace;
    for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_LE(tr[i], tr[i - 1] + 1e-14 * std::max(1.0, std::abs(tr[i - 1])));

    fs::path dir = fs::temp_directory_path() / "nlat_field_test";
    fs::create_directories(dir);
    fs::path p = dir / "f.nlf";
    write_snapshot(r.field, p, "0123456789abcdef");
    Snapshot snap = read_snapshot(p);
    ASSERT_TRUE(snap.grid.same_as(g));
    ASSERT_EQ(snap.values.size(), g.size());
    for (std::size_t v = 0; v < g.size(); ++v) EXPECT_EQ(snap.values[v].components(), r.field.values[v].components());
    EXPECT_TRUE(fs::exists(p.string() + ".json"));

    Field again = r.field;
    again.values = snap.values;
    MinimizeResult r2 = minimize(again, F, cfg);
    EXPECT_LE(r2.report.iterations, 1);
    fs::remove_all(dir);
}

TEST(Field, FixedStepDivergesLoudly)
{
    Grid g = Grid::with_cells(kUnit, 6);
    MinimizeConfig cfg;
    cfg.step_rule = MinimizeConfig::StepRule::Fixed;
    cfg.fixed_step = 1e3;
    cfg.init = {Initializer::Kind::Uniaxial, {0.5, {1.0, 0.0, 0.0}}};
    EnergyModel m = rp_bulk_only(1.0);
    m.bulk = BulkLdg{-1.0, 0.0, 1.0};
    Field start = make_field(g, nullptr, constant(QTensor{}), cfg.init);
    Functional F = Functional::homogenised(start, m, 1.0, 1.0, 1.0);
    EXPECT_THROW(minimize(start, F, cfg), DivergedError);
}

TEST(Field, ExtensionOfConstantIsConstant)
{
    Scaffold s = build_scaffold(quarter());
    Grid g = grid_for_scaffold(s.params());
    QTensor q = uniaxial(0.3, {0.6, 0.8, 0.0});
    Field f = make_field(g, &s, constant(q));
    for (std::size_t v = 0; v < g.size(); ++v)
        if (is_scaffold(f.mask[v])) f.values[v] = QTensor::from_components(5, 5, 5, 5, 5);
    ExtensionResult r = harmonic_extension(f, s);
    EXPECT_TRUE(r.converged);
    for (std::size_t v = 0; v < g.size(); ++v)
        for (int c = 0; c < 5; ++c) EXPECT_NEAR(r.field.values[v].components()[c], q.components()[c], 1e-9);
}

TEST(Field, Norms)
{
    Grid g = Grid::with_cells(kUnit, 8);
    QSampler Q = analytic_field("smooth", kUnit);
    Field a = make_field(g, nullptr, Q, {Initializer::Kind::Zero, {}});
    fill(a, Q);
    Field b = a;
    QTensor off = QTensor::from_components(0.1, 0.0, 0.0, 0.0, 0.0);
    for (auto& v : b.values) v += off;
    FieldNorms n = norms(a, b);
    EXPECT_NEAR(n.h1, n.l2, 1e-14);
    EXPECT_GT(n.l2, 0.0);

    Field z = make_field(g, nullptr, constant(QTensor{}), {Initializer::Kind::Zero, {}});
    FieldNorms m = norms(a, z);
    double gr = gradient_l2(a, false);
    EXPECT_NEAR(m.h1 * m.h1, m.l2 * m.l2 + gr * gr, 1e-12);
    EXPECT_EQ(norms(a, a).h1, 0.0);
}

TEST(Field, MeanQ)
{
    Grid g = Grid::with_cells(kUnit, 4);
    QTensor q = uniaxial(0.4, {0.0, 1.0, 0.0});
    Field f = make_field(g, nullptr, constant(q));
    QTensor m = mean_q(f, false);
    for (int c = 0; c < 5; ++c) EXPECT_NEAR(m.components()[c], q.components()[c], 1e-15);
}
