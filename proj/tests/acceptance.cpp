// Acceptance suite: one pass/fail line per criterion.
// Usage: nlat_acceptance [criterion number ...]; no argument runs all eleven.

#include "nlat/error.hpp"
#include "nlat/harness.hpp"

#include <boost/rational.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace nlat;

namespace {

struct Outcome {
    bool passed = true;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

QTensor random_q(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return QTensor::from_components(u(rng), u(rng), u(rng), u(rng), u(rng));
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

Mat3 power(const Mat3& m, int k)
{
    Mat3 r = Mat3::identity();
    for (int i = 0; i < k; ++i) r = r * m;
    return r;
}

void note(Outcome& o, bool ok, const std::string& what)
{
    o.passed = o.passed && ok;
    o.detail += (ok ? "" : "FAILED ") + what + "; ";
}

std::string g4(double v)
{
    char b[32];
    std::snprintf(b, sizeof b, "%.4g", v);
    return b;
}

Outcome report_outcome(const StudyReport& r)
{
    std::cout << r.summary();
    Outcome o;
    for (const auto& f : r.fits)
        note(o, f.passed, r.study + "/" + f.name + " slope " + g4(f.slope));
    for (const auto& c : r.checks) note(o, c.passed, r.study + "/" + c.name);
    return o;
}

void merge(Outcome& into, const Outcome& o)
{
    into.passed = into.passed && o.passed;
    into.detail += o.detail;
}

// ---------------------------------------------------------------- 1

Outcome c1()
{
    std::mt19937_64 rng(1);
    Outcome o;
    double worst_ch = 0.0, worst_rec = 0.0;
    for (int n = 0; n < 1000; ++n) {
        QTensor q = random_q(rng);
        double t2 = trace_power(q, 2);
        worst_ch = std::max(worst_ch, rel_err(2.0 * trace_power(q, 4), t2 * t2));
        Mat3 m = q.matrix();
        for (int k = 4; k <= 10; ++k) worst_rec = std::max(worst_rec, rel_err(trace_power(q, k), power(m, k).trace()));
    }
    note(o, worst_ch <= 1e-12, "2tr(Q^4) vs (trQ^2)^2 worst rel " + g4(worst_ch));
    note(o, worst_rec <= 1e-10, "trace recursion k=4..10 worst rel " + g4(worst_rec));
    return o;
}

// ---------------------------------------------------------------- 2

Outcome c2()
{
    std::mt19937_64 rng(2);
    Outcome o;
    double worst_m = 0.0, worst_rp = 0.0;
    for (int n = 0; n < 500; ++n) {
        QTensor q = random_q(rng);
        for (int k = 2; k <= 6; ++k) worst_m = std::max(worst_m, rel_err(cube_surface_moment(q, k), 2.0 * trace_power(q, k)));
        worst_rp = std::max(worst_rp, rel_err(cube_surface_rp(q), 6.0 * trace_power(q, 2) + 4.0));
    }
    note(o, worst_m <= 1e-12, "moments k=2..6 worst rel " + g4(worst_m));
    note(o, worst_rp <= 1e-12, "rp face sum worst rel " + g4(worst_rp));
    return o;
}

// ---------------------------------------------------------------- 3

Outcome c3()
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    Outcome o;
    double w_ldg = 0.0, w_rp = 0.0, w_gen = 0.0, w_asym = 0.0;
    for (int n = 0; n < 500; ++n) {
        QTensor q = random_q(rng);
        double P = 1.0 + (n % 4) * 0.5;
        SurfaceLdg l{coef(rng), coef(rng), coef(rng), coef(rng), 0.5, 0.5 + std::abs(coef(rng)), P};
        w_ldg = std::max(w_ldg, rel_err(f_hom_general(q, l, P, P, P), f_hom_ldg(q, l.a, l.ap, l.b, l.bp, l.c, l.cp)));

        SurfaceRp rp{coef(rng), coef(rng), P, true};
        w_rp = std::max(w_rp, rel_err(f_hom_general(q, rp, P, P, P), f_hom_rp(q, rp.a, rp.ap, true)));

        std::vector<double> bulk{0.0, 0.0, coef(rng), coef(rng), coef(rng), coef(rng), 1.0};
        std::vector<double> surf{0.0, 0.0, coef(rng), coef(rng), 1.0};
        SurfaceGen gen{surf, P};
        double lhs = f_hom_general(q, gen, P, P, P) + f_b(q, BulkGen{bulk});
        w_gen = std::max(w_gen, rel_err(lhs, f_hom_gen(q, bulk, surf)));

        double p = 1.0 + (n % 3), qq = 1.0 + (n % 5) * 0.25, r = 1.0 + (n % 2) * 1.5;
        SurfaceAsym as{coef(rng), coef(rng), coef(rng), coef(rng), 0.5, 0.5 + std::abs(coef(rng)), p, qq, r};
        w_asym = std::max(w_asym, rel_err(f_hom_general(q, as, p, qq, r),
                                          f_hom_asym(q, as.a, as.ap, as.b, as.bp, as.c, as.cp, p, qq, r)));
    }
    note(o, w_ldg <= 1e-12, "ldg worst rel " + g4(w_ldg));
    note(o, w_rp <= 1e-12, "rp worst rel " + g4(w_rp));
    note(o, w_gen <= 1e-12, "gen worst rel " + g4(w_gen));
    note(o, w_asym <= 1e-12, "asym worst rel " + g4(w_asym));

    using R = boost::rational<long long>;
    const long long nums[][6] = {{1, 1, 1, 1, 1, 1}, {1, 1, 2, 1, 3, 1}, {3, 2, 5, 4, 7, 3}, {2, 1, 2, 1, 2, 1},
                                 {5, 3, 1, 1, 9, 7}, {11, 10, 13, 12, 3, 2}, {4, 1, 3, 1, 2, 1}, {7, 2, 7, 3, 7, 4},
                                 {9, 8, 5, 4, 6, 5}, {10, 1, 1, 1, 1, 1}, {3, 1, 5, 2, 8, 3}, {13, 7, 17, 9, 19, 11},
                                 {6, 5, 6, 5, 2, 1}, {100, 99, 50, 49, 25, 24}, {2, 1, 3, 2, 4, 3}, {15, 4, 8, 3, 5, 2},
                                 {21, 20, 22, 21, 23, 22}, {7, 1, 6, 1, 5, 1}, {12, 5, 12, 7, 12, 11}, {31, 8, 17, 16, 5, 3}};
    bool exact = true;
    for (const auto& t : nums) {
        auto m = asym_matrices<R>(R(t[0], t[1]), R(t[2], t[3]), R(t[4], t[5]));
        exact = exact && m.A[0] + m.A[1] + m.A[2] == R(0);
        for (int i = 0; i < 3; ++i) exact = exact && m.B[i] == m.omega + m.A[i];
    }
    note(o, exact, "rational trA = 0 and B = omega I + A on 20 triples");
    return o;
}

// ---------------------------------------------------------------- 4

Outcome c4()
{
    Outcome o;
    Box unit{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
    for (double eps : {0.25, 0.2, 0.125}) {
        ScaffoldParams sp;
        sp.eps = eps;
        sp.alpha = 1.25;
        sp.domain = unit;
        Scaffold s = build_scaffold(sp);

        // Brute force: every multiple of eps at distance >= eps from the boundary, then pairwise neighbour search.
        std::vector<Vec3> pts;
        int kmax = static_cast<int>(std::ceil(1.0 / eps)) + 2;
        for (int i = -2; i <= kmax; ++i)
            for (int j = -2; j <= kmax; ++j)
                for (int k = -2; k <= kmax; ++k) {
                    Vec3 x{i * eps, j * eps, k * eps};
                    bool inside = true;
                    for (int d = 0; d < 3; ++d) inside = inside && x[d] >= eps - 1e-9 && x[d] <= 1.0 - eps + 1e-9;
                    if (inside) pts.push_back(x);
                }
        std::array<std::size_t, 3> conn{};
        std::vector<int> degree(pts.size(), 0);
        for (std::size_t a = 0; a < pts.size(); ++a)
            for (std::size_t b = a + 1; b < pts.size(); ++b) {
                Vec3 d{pts[b][0] - pts[a][0], pts[b][1] - pts[a][1], pts[b][2] - pts[a][2]};
                for (int ax = 0; ax < 3; ++ax) {
                    bool along = std::abs(std::abs(d[ax]) - eps) < 1e-9;
                    for (int o2 = 0; o2 < 3; ++o2)
                        if (o2 != ax) along = along && std::abs(d[o2]) < 1e-9;
                    if (along) {
                        ++conn[ax];
                        ++degree[a];
                        ++degree[b];
                    }
                }
            }
        std::size_t interior = 0;
        for (int dgr : degree) interior += dgr == 6;
        const auto& c = s.counts();
        bool ok = c.nodes == pts.size() && c.connectors == conn && c.interior == interior &&
                  c.exposed == pts.size() - interior;
        std::ostringstream os;
        os << "eps " << eps << " counts N=" << c.nodes << " X,Y,Z=" << c.connectors[0] << "," << c.connectors[1] << ","
           << c.connectors[2] << " N1=" << c.interior << " N2=" << c.exposed << " vs oracle N=" << pts.size();
        note(o, ok, os.str());

        // 128^3 voxel classification against the raw boxes.
        const int n = 128;
        const double h = 1.0 / n;
        std::size_t inside = 0;
        std::vector<Box> boxes = s.node_boxes();
        for (int a = 0; a < 3; ++a)
            for (const auto& cn : s.connectors(axis_from_index(a))) boxes.push_back(cn.box);
        std::vector<std::uint8_t> hit(static_cast<std::size_t>(n) * n * n, 0);
        for (const Box& b : boxes) {
            int lo[3], hi[3];
            for (int d = 0; d < 3; ++d) {
                lo[d] = std::max(0, static_cast<int>(std::ceil(b.lo[d] / h - 0.5)));
                hi[d] = std::min(n - 1, static_cast<int>(std::floor(b.hi[d] / h - 0.5)));
            }
            for (int k = lo[2]; k <= hi[2]; ++k)
                for (int j = lo[1]; j <= hi[1]; ++j)
                    for (int i = lo[0]; i <= hi[0]; ++i) hit[i + n * (j + static_cast<std::size_t>(n) * k)] = 1;
        }
        for (auto v : hit) inside += v;
        double vox = inside * h * h * h;
        double rel = std::abs(volume(s) - vox) / vox;
        note(o, rel < 0.03, "eps " + g4(eps) + " volume rel diff " + g4(rel));
    }
    return o;
}

// ---------------------------------------------------------------- sweeps

const Box kSweepBox{{0.0, 0.0, 0.0}, {4.0, 4.0, 4.0}};
const Box kUnitBox{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};

SweepConfig sweep(const std::string& study, const Box& domain, double alpha)
{
    SweepConfig c;
    c.study = study;
    c.eps_list = {0.25, 0.2, 0.125, 0.1};
    c.alpha = alpha;
    c.domain = domain;
    c.config_hash = "acceptance";
    return c;
}

Outcome c5()
{
    Outcome o;
    for (double alpha : {1.25, 1.4}) {
        merge(o, report_outcome(study_volume(sweep("volume", kSweepBox, alpha))));
        merge(o, report_outcome(study_surface(sweep("surface", kSweepBox, alpha))));
    }
    return o;
}

Outcome c6()
{
    SweepConfig c = sweep("flat_norm", kSweepBox, 1.25);
    return report_outcome(study_flat_norm(c, default_test_functions(c.domain)));
}

SurfaceModel j_surface() { return SurfaceLdg{0.2, 1.0, 0.5, -0.3, 1.0, 1.6, 1.0}; }

Outcome c7()
{
    Outcome o;
    for (double p : {1.0, 2.0}) {
        SweepConfig c = sweep("J_convergence", kSweepBox, 1.25);
        c.p = p;
        c.model.surface = j_surface();
        QSampler Q = analytic_field("smooth", c.domain);
        merge(o, report_outcome(study_J_convergence(c, Q)));
        if (p == 1.0) merge(o, report_outcome(study_J_S_decay(c, Q)));
    }
    return o;
}

// ---------------------------------------------------------------- 8

Outcome c8()
{
    Outcome o;
    ScaffoldParams sp;
    sp.eps = 0.8;
    sp.alpha = 1.25;
    sp.p = 1.2;
    sp.domain = Box{{0.0, 0.0, 0.0}, {2.4, 2.4, 2.4}};
    Scaffold s = build_scaffold(sp);
    Grid g = Grid::with_cells(sp.domain, 8);

    std::vector<EnergyModel> models(4);
    models[0].elastic = {1.0, 0.5, 0.3};
    models[0].bulk = BulkLdg{-0.5, 1.0, 1.0};
    models[0].surface = SurfaceLdg{0.2, 1.0, 0.5, -0.3, 1.0, 1.6, 1.2};
    models[0].include_s_faces = true;
    models[1].elastic = {0.7, 0.0, 0.2};
    models[1].bulk = BulkRp{0.3};
    models[1].surface = SurfaceRp{0.1, 0.9, 1.0, true};
    models[2].elastic = {1.0, 0.2, 0.0};
    models[2].bulk = BulkGen{{0.0, 0.0, 0.4, -0.6, 0.8}};
    models[2].surface = SurfaceGen{{0.0, 0.0, 0.3, 0.2, 0.5}, 1.0};
    models[3].elastic = {1.0, 0.0, 0.0};
    models[3].bulk = BulkLdg{0.1, 0.5, 1.0};
    models[3].surface = SurfaceAsym{0.2, 1.0, 0.5, -0.3, 1.0, 1.6, 1.2, 1.0, 1.0};

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-0.6, 0.6);
    double worst = 0.0;
    int checks = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const EnergyModel& m = models[trial % models.size()];
        for (bool eps_kind : {true, false}) {
            QTensor gq = uniaxial(0.4, {0.0, 0.6, 0.8});
            Field f = make_field(g, eps_kind ? &s : nullptr, [gq](const Vec3&) { return gq; }, {});
            for (auto& q : f.values) q = QTensor::from_components(u(rng), u(rng), u(rng), u(rng), u(rng));
            Functional F = eps_kind ? Functional::eps(f, m, s) : Functional::homogenised(f, m, sp.p, sp.q, sp.r);
            std::vector<Comp5> grad;
            F.value_and_gradient(f, grad);
            std::vector<std::size_t> free;
            for (std::size_t v = 0; v < f.values.size(); ++v)
                if (F.free_mask()[v]) free.push_back(v);
            // Random direction supported on the free voxels, plus 25 single components.
            std::vector<Comp5> dir(f.values.size(), Comp5{});
            for (std::size_t v : free)
                for (auto& x : dir[v]) x = u(rng);
            std::vector<std::vector<Comp5>> dirs{dir};
            std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
            for (int n = 0; n < 25; ++n) {
                std::vector<Comp5> d(f.values.size(), Comp5{});
                d[free[pick(rng)]][n % 5] = 1.0;
                dirs.push_back(d);
            }
            double num = 0.0, den = 0.0;
            for (const auto& d : dirs) {
                double analytic = 0.0;
                for (std::size_t v : free)
                    for (int i = 0; i < 5; ++i) analytic += grad[v][i] * d[v][i];
                const double t = 1e-5;
                auto shifted = [&](double sgn) {
                    Field h = f;
                    for (std::size_t v : free) {
                        Comp5 c = h.values[v].components();
                        for (int i = 0; i < 5; ++i) c[i] += sgn * t * d[v][i];
                        h.values[v] = QTensor::from_array(c);
                    }
                    return F.value(h);
                };
                double fd = (shifted(1.0) - shifted(-1.0)) / (2.0 * t);
                num = std::max(num, std::abs(fd - analytic));
                den = std::max(den, std::abs(analytic));
                ++checks;
            }
            worst = std::max(worst, num / den);
        }
    }
    note(o, worst < 1e-5, "worst relative gradient error " + g4(worst) + " over " + std::to_string(checks) + " directions");
    return o;
}

// ---------------------------------------------------------------- 9

Outcome c9()
{
    SweepConfig c = sweep("extension", kUnitBox, 1.25);
    return report_outcome(study_extension(c, analytic_field("smooth", c.domain)));
}

// ---------------------------------------------------------------- 10, 11

MinimizeConfig study_minimizer()
{
    MinimizeConfig m;
    m.direction = MinimizeConfig::Direction::ConjugateGradient;
    m.max_iters = 20000;
    m.grad_tol = 1e-6;
    return m;
}

Outcome c10()
{
    SweepConfig c = sweep("minimizer_convergence", kUnitBox, 1.25);
    c.eps_list = {0.25, 0.2, 0.125};
    c.grid_cap = 96;
    c.model.elastic = {1.0, 0.0, 0.0};
    c.model.bulk = BulkRp{0.5};
    c.model.surface = SurfaceRp{0.5, 1.5, 1.0, true};
    c.boundary = {0.5, {0.0, 0.0, 1.0}};
    c.minimize = study_minimizer();
    StudyReport r = study_minimizer_convergence(c);
    std::cout << r.to_csv();
    return report_outcome(r);
}

Outcome c11()
{
    SweepConfig c = sweep("phase_tuning", kUnitBox, 1.25);
    c.eps_list = {0.25, 0.2, 0.125};
    c.model.elastic = {1.0, 0.0, 0.0};
    c.model.bulk = BulkLdg{0.1, 1.0, 1.0};
    c.model.surface = SurfaceLdg{0.1, 0.1, 1.0, 1.0, 1.0, 1.0, 1.0};
    c.minimize = study_minimizer();
    // Steps of 0.01 straddling b^2/(24c) with a half-step offset.
    const double crit = 1.0 / 24.0;
    for (int k = -5; k <= 4; ++k) c.phase.a_prime.push_back(crit + (k + 0.5) * 0.01);
    StudyReport r = study_phase_tuning(c);
    std::cout << r.to_csv();
    return report_outcome(r);
}

}  // namespace

int main(int argc, char** argv)
{
    std::vector<Criterion> all{
        {1, "cayley_hamilton", 1.0, c1},       {2, "cube_surface_identities", 1.0, c2},
        {3, "homogenised_closed_forms", 2.0, c3}, {4, "scaffold_combinatorics", 30.0, c4},
        {5, "asymptotic_slopes", 10.0, c5},    {6, "flat_norm", 30.0, c6},
        {7, "J_convergence", 120.0, c7},       {8, "gradient_correctness", 30.0, c8},
        {9, "extension_operator", 60.0, c9},   {10, "minimizer_convergence", 600.0, c10},
        {11, "phase_tuning", 600.0, c11},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
    bool all_ok = true;
    for (const auto& c : all) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.passed = false;
            o.detail = std::string("exception: ") + e.what();
        }
        double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool in_time = dt < c.budget_s;
        bool ok = o.passed && in_time;
        all_ok = all_ok && ok;
        std::printf("[%s] criterion %d %s (%.2f s, budget %.0f s%s): %s\n", ok ? "PASS" : "FAIL", c.id, c.name, dt,
                    c.budget_s, in_time ? "" : " EXCEEDED", o.detail.c_str());
        std::fflush(stdout);
    }
    return all_ok ? 0 : 1;
}
