#include "nlat/field.hpp"

#include "nlat/error.hpp"
#include "nlat/numerics.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace nlat {

namespace {

constexpr double kGridTol = 1e-9;

std::array<std::size_t, 3> strides(const Grid& g)
{
    return {1, static_cast<std::size_t>(g.nx), static_cast<std::size_t>(g.nx) * g.ny};
}

std::array<int, 3> coords(const Grid& g, std::size_t v)
{
    int i = static_cast<int>(v % g.nx);
    int j = static_cast<int>((v / g.nx) % g.ny);
    int k = static_cast<int>(v / (static_cast<std::size_t>(g.nx) * g.ny));
    return {i, j, k};
}

// Stencil bits for every voxel: a neighbour is usable if it exists and `usable` accepts it.
template <class Pred>
std::vector<std::uint8_t> stencil_bits(const Grid& g, Pred usable)
{
    std::vector<std::uint8_t> bits(g.size(), 0);
    auto st = strides(g);
    auto dims = g.dims();
    for_blocks(g.size(), kReduceBlock, [&](std::size_t b, std::size_t e) {
        for (std::size_t v = b; v < e; ++v) {
            auto c = coords(g, v);
            std::uint8_t m = 0;
            for (int k = 0; k < 3; ++k) {
                if (c[k] > 0 && usable(v - st[k])) m |= static_cast<std::uint8_t>(1u << (2 * k));
                if (c[k] < dims[k] - 1 && usable(v + st[k])) m |= static_cast<std::uint8_t>(1u << (2 * k + 1));
            }
            bits[v] = m;
        }
    });
    return bits;
}

QTensor difference(const std::vector<QTensor>& q, std::size_t v, std::size_t stride, std::uint8_t bits, int k,
                   double h)
{
    bool m = (bits >> (2 * k)) & 1u;
    bool p = (bits >> (2 * k + 1)) & 1u;
    if (m && p) return (0.5 / h) * (q[v + stride] - q[v - stride]);
    if (p) return (1.0 / h) * (q[v + stride] - q[v]);
    if (m) return (1.0 / h) * (q[v] - q[v - stride]);
    return QTensor{};
}

GradQ gradient_at(const std::vector<QTensor>& q, const Grid& g, const std::array<std::size_t, 3>& st,
                  std::size_t v, std::uint8_t bits)
{
    GradQ D;
    for (int k = 0; k < 3; ++k) D.d[k] = difference(q, v, st[k], bits, k, g.h);
    return D;
}

double comp_norm2(const QTensor& q) { return trace_power(q, 2); }

void add_scaled(Comp5& dst, const Comp5& src, double s)
{
    for (int i = 0; i < 5; ++i) dst[i] += s * src[i];
}

void write_u64(std::ostream& os, std::uint64_t v)
{
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
    os.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& os, double d) { write_u64(os, std::bit_cast<std::uint64_t>(d)); }

std::uint64_t read_u64(std::istream& is)
{
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw std::runtime_error("snapshot: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double read_f64(std::istream& is) { return std::bit_cast<double>(read_u64(is)); }

constexpr char kMagic[8] = {'N', 'L', 'A', 'T', 'F', 'L', 'D', '1'};

}  // namespace

// ---------------------------------------------------------------- grid

void Grid::validate() const
{
    domain.validate();
    if (nx < 4 || ny < 4 || nz < 4) throw ValidationError("grid: need at least 4 cells per axis");
    if (!(h > 0.0)) throw ValidationError("grid: spacing must be positive");
    std::array<int, 3> n{nx, ny, nz};
    for (int k = 0; k < 3; ++k) {
        if (std::abs(n[k] * h - domain.extent(k)) > kGridTol * domain.extent(k))
            throw ValidationError("grid: spacing does not divide the domain side");
    }
}

bool Grid::same_as(const Grid& o) const
{
    return nx == o.nx && ny == o.ny && nz == o.nz && h == o.h && domain.lo == o.domain.lo &&
           domain.hi == o.domain.hi;
}

Grid Grid::with_cells(const Box& domain, int n_x)
{
    domain.validate();
    if (n_x < 4) throw ValidationError("grid: need at least 4 cells per axis");
    Grid g;
    g.domain = domain;
    g.nx = n_x;
    g.h = domain.extent(0) / n_x;
    auto fit = [&](int k) {
        double n = domain.extent(k) / g.h;
        long r = std::lround(n);
        if (std::abs(n - static_cast<double>(r)) > kGridTol * n) {
            std::ostringstream os;
            os << "grid: side " << k << " (" << domain.extent(k) << ") is not a multiple of h = " << g.h;
            throw ValidationError(os.str());
        }
        return static_cast<int>(r);
    };
    g.ny = fit(1);
    g.nz = fit(2);
    g.validate();
    return g;
}

Grid Grid::with_spacing(const Box& domain, double h_max)
{
    domain.validate();
    if (!(h_max > 0.0)) throw ValidationError("grid: spacing must be positive");
    int n0 = std::max(4, static_cast<int>(std::ceil(domain.extent(0) / h_max - kGridTol)));
    for (int n = n0; n <= 4 * n0; ++n) {
        try {
            return with_cells(domain, n);
        } catch (const ValidationError&) {
        }
    }
    throw ValidationError("grid: domain sides admit no common spacing near the requested one");
}

double scaffold_spacing(const ScaffoldParams& sp)
{
    return std::pow(sp.eps, sp.alpha) / (2.0 * std::max({sp.p, sp.q, sp.r}));
}

Grid grid_for_scaffold(const ScaffoldParams& sp, int cap)
{
    sp.validate();
    Grid g = Grid::with_spacing(sp.domain, scaffold_spacing(sp));
    if (g.nx > cap || g.ny > cap || g.nz > cap) {
        std::ostringstream os;
        os << "grid: resolving eps = " << sp.eps << " needs " << g.nx << "x" << g.ny << "x" << g.nz
           << " cells, above the cap of " << cap << " per axis";
        throw ValidationError(os.str());
    }
    return g;
}

const char* tag_name(VoxelTag t)
{
    switch (t) {
    case VoxelTag::LiquidCrystal: return "liquid_crystal";
    case VoxelTag::ScaffoldInterior: return "scaffold_interior";
    case VoxelTag::ScaffoldSurfaceShell: return "scaffold_surface_shell";
    case VoxelTag::DirichletShell: return "dirichlet_shell";
    }
    return "?";
}

std::size_t Field::count(VoxelTag t) const { return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), t)); }

std::vector<VoxelTag> build_mask(const Grid& grid, const Scaffold* scaffold)
{
    grid.validate();
    std::vector<VoxelTag> mask(grid.size(), VoxelTag::LiquidCrystal);
    auto st = strides(grid);
    auto dims = grid.dims();
    for_blocks(grid.size(), kReduceBlock, [&](std::size_t b, std::size_t e) {
        for (std::size_t v = b; v < e; ++v) {
            auto c = coords(grid, v);
            bool shell = false;
            for (int k = 0; k < 3; ++k) shell = shell || c[k] == 0 || c[k] == dims[k] - 1;
            if (shell)
                mask[v] = VoxelTag::DirichletShell;
            else if (scaffold && scaffold->contains(grid.center(c[0], c[1], c[2])) != Material::LiquidCrystal)
                mask[v] = VoxelTag::ScaffoldInterior;
        }
    });
    if (scaffold) {
        std::vector<VoxelTag> out = mask;
        for (std::size_t v = 0; v < mask.size(); ++v) {
            if (mask[v] != VoxelTag::ScaffoldInterior) continue;
            for (int k = 0; k < 3 && out[v] == VoxelTag::ScaffoldInterior; ++k)
                if (!is_scaffold(mask[v - st[k]]) || !is_scaffold(mask[v + st[k]]))
                    out[v] = VoxelTag::ScaffoldSurfaceShell;
        }
        mask.swap(out);
    }
    return mask;
}

Field make_field(const Grid& grid, const Scaffold* scaffold, const QSampler& g, const Initializer& init)
{
    grid.validate();
    if (scaffold) {
        const Box& d = scaffold->params().domain;
        for (int k = 0; k < 3; ++k)
            if (std::abs(d.lo[k] - grid.domain.lo[k]) > kGridTol || std::abs(d.hi[k] - grid.domain.hi[k]) > kGridTol)
                throw ValidationError("make_field: grid and scaffold domains differ");
        double hmax = scaffold_spacing(scaffold->params());
        if (grid.h > hmax * (1.0 + kGridTol)) {
            std::ostringstream os;
            os << "make_field: spacing h = " << grid.h << " does not resolve the scaffold; need h <= "
               << hmax << ", i.e. at least " << std::ceil(grid.domain.extent(0) / hmax - kGridTol)
               << " cells along x";
            throw ValidationError(os.str());
        }
    }
    Field f;
    f.grid = grid;
    f.mask = build_mask(grid, scaffold);
    f.values.assign(grid.size(), QTensor{});
    QTensor shell_sum;
    std::size_t n_shell = 0;
    for (std::size_t v = 0; v < grid.size(); ++v) {
        if (f.mask[v] != VoxelTag::DirichletShell) continue;
        auto c = coords(grid, v);
        f.values[v] = g(grid.center(c[0], c[1], c[2]));
        shell_sum += f.values[v];
        ++n_shell;
    }
    QTensor fill;
    switch (init.kind) {
    case Initializer::Kind::BoundaryConstant: fill = (1.0 / static_cast<double>(n_shell)) * shell_sum; break;
    case Initializer::Kind::Zero: fill = QTensor{}; break;
    case Initializer::Kind::Uniaxial: fill = uniaxial(init.uniaxial); break;
    }
    for (std::size_t v = 0; v < grid.size(); ++v)
        if (f.mask[v] != VoxelTag::DirichletShell) f.values[v] = fill;
    return f;
}

// ---------------------------------------------------------------- energies

void EnergyModel::validate() const
{
    elastic.validate();
    nlat::validate(bulk);
    nlat::validate(surface);
    if (quad_order < 1 || quad_order > 16) throw ValidationError("energy: quad_order must be in [1, 16]");
}

namespace {

Functional::SurfaceSample make_sample(const Vec3& x, const Vec3& nu, double weight, const Grid& g,
                                      const std::vector<std::uint8_t>& usable)
{
    auto dims = g.dims();
    for (int attempt = 0; attempt < 4; ++attempt) {
        Vec3 y{x[0] + attempt * g.h * nu[0], x[1] + attempt * g.h * nu[1], x[2] + attempt * g.h * nu[2]};
        std::array<int, 3> i0{};
        std::array<double, 3> t{};
        for (int k = 0; k < 3; ++k) {
            double u = (y[k] - g.domain.lo[k]) / g.h - 0.5;
            int base = std::clamp(static_cast<int>(std::floor(u)), 0, dims[k] - 2);
            i0[k] = base;
            t[k] = std::clamp(u - base, 0.0, 1.0);
        }
        Functional::SurfaceSample s;
        s.nu = nu;
        s.weight = weight;
        double total = 0.0;
        for (int c = 0; c < 8; ++c) {
            int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
            double w = (di ? t[0] : 1.0 - t[0]) * (dj ? t[1] : 1.0 - t[1]) * (dk ? t[2] : 1.0 - t[2]);
            std::size_t v = g.index(i0[0] + di, i0[1] + dj, i0[2] + dk);
            if (w <= 0.0 || !usable[v]) continue;
            s.voxel[s.n] = static_cast<std::uint32_t>(v);
            s.w[s.n] = w;
            ++s.n;
            total += w;
        }
        if (total > 1e-12) {
            for (int i = 0; i < s.n; ++i) s.w[i] /= total;
            return s;
        }
    }
    throw ValidationError("surface sampling: no liquid-crystal voxel near a scaffold face; refine the grid");
}

}  // namespace

Functional Functional::eps(const Field& layout, const EnergyModel& model, const Scaffold& scaffold)
{
    model.validate();
    layout.grid.validate();
    auto expected = build_mask(layout.grid, &scaffold);
    if (expected != layout.mask) throw ValidationError("F_eps: field mask is inconsistent with the scaffold");
    Functional F;
    F.kind_ = Kind::Eps;
    F.grid_ = layout.grid;
    F.model_ = model;
    const auto& sp = scaffold.params();
    F.p_ = sp.p;
    F.q_ = sp.q;
    F.r_ = sp.r;
    std::size_t n = layout.grid.size();
    F.active_.resize(n);
    F.free_.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        F.active_[v] = !is_scaffold(layout.mask[v]);
        F.free_[v] = layout.mask[v] == VoxelTag::LiquidCrystal;
    }
    F.stencil_ = stencil_bits(F.grid_, [&](std::size_t u) { return F.active_[u] != 0; });
    double pf = surface_prefactor(sp.eps, sp.alpha);
    auto build = [&](const std::vector<Face>& faces, std::vector<SurfaceSample>& out) {
        out.reserve(faces.size() * model.quad_order * model.quad_order);
        for (const Face& f : faces) {
            Vec3 nu = f.normal();
            for_face_nodes(f, model.quad_order, [&](const Vec3& x, double w) {
                out.push_back(make_sample(x, nu, pf * w, F.grid_, F.active_));
            });
        }
    };
    build(scaffold.t_faces(), F.t_samples_);
    if (model.include_s_faces) build(scaffold.s_faces(), F.s_samples_);
    return F;
}

Functional Functional::homogenised(const Field& layout, const EnergyModel& model, double p, double q, double r)
{
    model.validate();
    layout.grid.validate();
    for (double a : {p, q, r})
        if (!std::isfinite(a) || a < 1.0) throw ValidationError("F_0: anisotropy factors must be >= 1");
    Functional F;
    F.kind_ = Kind::Hom;
    F.grid_ = layout.grid;
    F.model_ = model;
    F.p_ = p;
    F.q_ = q;
    F.r_ = r;
    std::size_t n = layout.grid.size();
    F.active_.assign(n, 1);
    F.free_.resize(n);
    for (std::size_t v = 0; v < n; ++v) F.free_[v] = layout.mask[v] != VoxelTag::DirichletShell;
    F.stencil_ = stencil_bits(F.grid_, [](std::size_t) { return true; });
    return F;
}

void Functional::check(const Field& f) const
{
    if (!f.grid.same_as(grid_) || f.values.size() != grid_.size())
        throw ValidationError("energy: field grid does not match the functional");
}

double Functional::volume_terms(const Field& f, EnergyBreakdown* parts, std::vector<Comp5>* grad) const
{
    const Grid& g = grid_;
    const std::size_t n = g.size();
    const auto st = strides(g);
    const double vol = g.cell_volume();
    const bool hom = kind_ == Kind::Hom;
    std::size_t nblocks = (n + kReduceBlock - 1) / kReduceBlock;
    std::vector<double> pe(nblocks, 0.0), pb(nblocks, 0.0), ph(nblocks, 0.0);
    std::vector<std::array<Comp5, 3>> G;
    if (grad) G.assign(n, {});

    for_blocks(n, kReduceBlock, [&](std::size_t b, std::size_t e) {
        double se = 0.0, sb = 0.0, sh = 0.0;
        for (std::size_t v = b; v < e; ++v) {
            if (!active_[v]) continue;
            const QTensor& q = f.values[v];
            GradQ D = gradient_at(f.values, g, st, v, stencil_[v]);
            se += f_e(D, model_.elastic);
            sb += f_b(q, model_.bulk);
            if (hom) sh += nlat::f_hom(q, model_.surface, p_, q_, r_);
            if (grad) {
                G[v] = f_e_gradient(D, model_.elastic);
                Comp5 local{};
                if (free_[v]) {
                    local = f_b_gradient(q, model_.bulk);
                    if (hom) add_scaled(local, f_hom_gradient(q, model_.surface, p_, q_, r_), 1.0);
                    for (double& x : local) x *= vol;
                }
                (*grad)[v] = local;
            }
        }
        std::size_t blk = b / kReduceBlock;
        pe[blk] = se;
        pb[blk] = sb;
        ph[blk] = sh;
    });

    if (grad) {
        const double inv_h = 1.0 / g.h;
        const auto dims = g.dims();
        for_blocks(n, kReduceBlock, [&](std::size_t b, std::size_t e) {
            for (std::size_t w = b; w < e; ++w) {
                if (!free_[w]) continue;
                auto c = coords(g, w);
                Comp5& out = (*grad)[w];
                for (int k = 0; k < 3; ++k) {
                    std::uint8_t bw = stencil_[w];
                    bool wm = (bw >> (2 * k)) & 1u, wp = (bw >> (2 * k + 1)) & 1u;
                    double self = 0.0;
                    if (wp && !wm) self = -inv_h;
                    if (wm && !wp) self = inv_h;
                    if (self != 0.0) add_scaled(out, G[w][k], vol * self);
                    if (c[k] > 0 && active_[w - st[k]]) {
                        std::uint8_t bv = stencil_[w - st[k]];
                        bool vm = (bv >> (2 * k)) & 1u;
                        add_scaled(out, G[w - st[k]][k], vol * (vm ? 0.5 * inv_h : inv_h));
                    }
                    if (c[k] < dims[k] - 1 && active_[w + st[k]]) {
                        std::uint8_t bv = stencil_[w + st[k]];
                        bool vp = (bv >> (2 * k + 1)) & 1u;
                        add_scaled(out, G[w + st[k]][k], -vol * (vp ? 0.5 * inv_h : inv_h));
                    }
                }
            }
        });
    }

    double e = pairwise_sum(pe) * vol, bsum = pairwise_sum(pb) * vol, hsum = pairwise_sum(ph) * vol;
    if (parts) {
        parts->elastic = e;
        parts->bulk = bsum;
        parts->homogenised = hsum;
    }
    return e + bsum + hsum;
}

double Functional::surface_terms(const Field& f, const std::vector<SurfaceSample>& samples,
                                 std::vector<Comp5>* grad) const
{
    auto interp = [&](const SurfaceSample& s) {
        QTensor q;
        for (int i = 0; i < s.n; ++i) q += s.w[i] * f.values[s.voxel[i]];
        return q;
    };
    double total = reduce_sum(samples.size(), [&](std::size_t i) {
        const SurfaceSample& s = samples[i];
        return s.weight * f_s(interp(s), s.nu, model_.surface);
    });
    if (grad) {
        for (const SurfaceSample& s : samples) {
            Comp5 d = f_s_gradient(interp(s), s.nu, model_.surface);
            for (int i = 0; i < s.n; ++i)
                if (free_[s.voxel[i]]) add_scaled((*grad)[s.voxel[i]], d, s.weight * s.w[i]);
        }
    }
    return total;
}

EnergyBreakdown Functional::evaluate(const Field& f) const
{
    check(f);
    EnergyBreakdown parts;
    volume_terms(f, &parts, nullptr);
    if (kind_ == Kind::Eps) {
        parts.surface_t = surface_terms(f, t_samples_, nullptr);
        parts.surface_s = surface_terms(f, s_samples_, nullptr);
    }
    return parts;
}

double Functional::value_and_gradient(const Field& f, std::vector<Comp5>& grad) const
{
    check(f);
    grad.assign(grid_.size(), Comp5{});
    EnergyBreakdown parts;
    volume_terms(f, &parts, &grad);
    if (kind_ == Kind::Eps) {
        parts.surface_t = surface_terms(f, t_samples_, &grad);
        parts.surface_s = surface_terms(f, s_samples_, &grad);
    }
    return parts.total();
}

EnergyBreakdown discrete_F_eps(const Field& f, const EnergyModel& model, const Scaffold& scaffold)
{
    return Functional::eps(f, model, scaffold).evaluate(f);
}

EnergyBreakdown discrete_F_0(const Field& f, const EnergyModel& model, double p, double q, double r)
{
    return Functional::homogenised(f, model, p, q, r).evaluate(f);
}

std::vector<Comp5> energy_gradient(const Field& f, const Functional& F)
{
    std::vector<Comp5> g;
    F.value_and_gradient(f, g);
    return g;
}

// ---------------------------------------------------------------- minimizer

void MinimizeConfig::validate() const
{
    if (max_iters < 0) throw ValidationError("minimize: max_iters must be >= 0");
    if (!(grad_tol > 0.0)) throw ValidationError("minimize: grad_tol must be positive");
    if (step_rule == StepRule::Fixed && !(fixed_step > 0.0)) throw ValidationError("minimize: fixed_step must be positive");
    if (!(armijo.initial_step > 0.0)) throw ValidationError("minimize: armijo initial_step must be positive");
    if (!(armijo.shrink > 0.0 && armijo.shrink < 1.0)) throw ValidationError("minimize: armijo shrink must be in (0,1)");
    if (!(armijo.c1 > 0.0 && armijo.c1 < 1.0)) throw ValidationError("minimize: armijo c1 must be in (0,1)");
    if (!(armijo.growth >= 1.0)) throw ValidationError("minimize: armijo growth must be >= 1");
    if (armijo.max_backtracks < 1) throw ValidationError("minimize: armijo max_backtracks must be >= 1");
}

double gradient_sup_norm(const std::vector<Comp5>& grad, const Functional& F)
{
    double m = 0.0;
    const auto& fr = F.free_mask();
    for (std::size_t v = 0; v < grad.size(); ++v)
        if (fr[v])
            for (double x : grad[v]) m = std::max(m, std::abs(x));
    return m / F.grid().cell_volume();
}

namespace {

double dot_free(const std::vector<Comp5>& a, const std::vector<Comp5>& b, const std::vector<std::uint8_t>& fr)
{
    return reduce_sum(a.size(), [&](std::size_t v) {
        if (!fr[v]) return 0.0;
        double s = 0.0;
        for (int i = 0; i < 5; ++i) s += a[v][i] * b[v][i];
        return s;
    });
}

void step_to(const Field& x, const std::vector<Comp5>& d, double t, const std::vector<std::uint8_t>& fr,
             Field& out)
{
    for (std::size_t v = 0; v < x.values.size(); ++v) {
        if (!fr[v]) {
            out.values[v] = x.values[v];
            continue;
        }
        Comp5 c = x.values[v].components();
        for (int i = 0; i < 5; ++i) c[i] += t * d[v][i];
        out.values[v].components() = c;
    }
}

}  // namespace

MinimizeResult minimize(const Field& start, const Functional& F, const MinimizeConfig& cfg)
{
    cfg.validate();
    const auto& fr = F.free_mask();
    const double vol = F.grid().cell_volume();
    MinimizeResult res{start, {}};
    Field& x = res.field;
    Field trial = start;
    MinimizeReport& rep = res.report;

    std::vector<Comp5> g, g_prev, d, g_trial;
    double E = F.value_and_gradient(x, g);
    if (!std::isfinite(E)) throw DivergedError("minimize: initial energy is not finite");
    rep.initial_energy = E;
    rep.energy_trace.push_back(E);
    double t = cfg.armijo.initial_step;
    double gg_prev = 0.0;
    bool use_cg = cfg.direction == MinimizeConfig::Direction::ConjugateGradient;
    int stalled = 0;
    double best_gn = std::numeric_limits<double>::infinity();

    for (;;) {
        rep.grad_norm = gradient_sup_norm(g, F);
        if (rep.grad_norm <= cfg.grad_tol) {
            rep.converged = true;
            rep.stop_reason = "gradient tolerance reached";
            break;
        }
        if (rep.iterations >= cfg.max_iters) {
            rep.stop_reason = "iteration limit reached";
            break;
        }
        double gg = dot_free(g, g, fr) / vol;
        if (use_cg && !d.empty() && gg_prev > 0.0) {
            std::vector<Comp5> diff(g.size());
            for (std::size_t v = 0; v < g.size(); ++v)
                for (int i = 0; i < 5; ++i) diff[v][i] = g[v][i] - g_prev[v][i];
            double beta = std::max(0.0, dot_free(g, diff, fr) / vol / gg_prev);
            for (std::size_t v = 0; v < g.size(); ++v)
                for (int i = 0; i < 5; ++i) d[v][i] = -g[v][i] / vol + beta * d[v][i];
            if (dot_free(g, d, fr) >= 0.0) d.clear();
        } else {
            d.clear();
        }
        if (d.empty()) {
            d.resize(g.size());
            for (std::size_t v = 0; v < g.size(); ++v)
                for (int i = 0; i < 5; ++i) d[v][i] = -g[v][i] / vol;
        }
        double slope = dot_free(g, d, fr);

        double E_new = E;
        if (cfg.step_rule == MinimizeConfig::StepRule::Fixed) {
            step_to(x, d, cfg.fixed_step, fr, trial);
            E_new = F.value(trial);
            if (!std::isfinite(E_new)) {
                std::ostringstream os;
                os << "minimize: energy became non-finite at iteration " << rep.iterations + 1
                   << " (previous energy " << E << ", gradient norm " << rep.grad_norm << ")";
                throw DivergedError(os.str());
            }
        } else {
            double tt = std::max(t * cfg.armijo.growth, 1e-300);
            bool accepted = false, saw_nonfinite = false;
            // Below the rounding floor of E the sufficient-decrease test is meaningless; there the
            // step is judged by the directional derivative at the trial point instead, so the trace
            // is nonincreasing only up to that floor.
            const double noise = 1e-14 * std::max(1.0, std::abs(E));
            for (int b = 0; b < cfg.armijo.max_backtracks; ++b) {
                step_to(x, d, tt, fr, trial);
                E_new = F.value(trial);
                if (!std::isfinite(E_new)) saw_nonfinite = true;
                if (std::isfinite(E_new) && E_new <= E + cfg.armijo.c1 * tt * slope && E_new < E - noise) {
                    accepted = true;
                    break;
                }
                if (std::isfinite(E_new) && std::abs(E_new - E) <= noise) {
                    F.value_and_gradient(trial, g_trial);
                    double dphi = dot_free(g_trial, d, fr);
                    if (dphi >= 0.9 * slope && dphi <= (2.0 * cfg.armijo.c1 - 1.0) * slope) {
                        accepted = true;
                        break;
                    }
                    if (dphi < 0.9 * slope) {
                        // still descending steeply: a short step, but a valid one
                        accepted = true;
                        break;
                    }
                }
                tt *= cfg.armijo.shrink;
            }
            if (!accepted) {
                if (saw_nonfinite && !std::isfinite(E_new)) {
                    std::ostringstream os;
                    os << "minimize: line search only produced non-finite energies at iteration "
                       << rep.iterations + 1 << " (energy " << E << ", gradient norm " << rep.grad_norm << ")";
                    throw DivergedError(os.str());
                }
                if (use_cg && gg_prev > 0.0) {
                    gg_prev = 0.0;  // restart with steepest descent
                    continue;
                }
                rep.stop_reason = "line search made no progress";
                break;
            }
            t = tt;
        }
        std::swap(x.values, trial.values);
        g_prev.swap(g);
        gg_prev = gg;
        double E_old = E;
        E = F.value_and_gradient(x, g);
        if (!std::isfinite(E)) throw DivergedError("minimize: energy became non-finite");
        ++rep.iterations;
        rep.energy_trace.push_back(E);
        double gn = gradient_sup_norm(g, F);
        if (std::abs(E_old - E) <= 1e-15 * std::max(1.0, std::abs(E)) && gn >= best_gn) {
            if (++stalled >= 25) {
                rep.grad_norm = gn;
                rep.stop_reason = "energy stalled at machine precision";
                rep.converged = rep.grad_norm <= cfg.grad_tol;
                break;
            }
        } else {
            stalled = 0;
        }
        best_gn = std::min(best_gn, gn);
    }
    rep.final_energy = E;
    return res;
}

// ---------------------------------------------------------------- extension

ExtensionResult harmonic_extension(const Field& f, const Scaffold& scaffold, int max_sweeps, double tol)
{
    auto expected = build_mask(f.grid, &scaffold);
    if (expected != f.mask) throw ValidationError("harmonic_extension: field mask is inconsistent with the scaffold");
    ExtensionResult res{f, 0, 0.0, false, ""};
    Field& out = res.field;
    const Grid& g = f.grid;
    auto st = strides(g);
    std::array<std::vector<std::size_t>, 2> colour;
    QTensor bsum;
    std::size_t nb = 0;
    std::vector<std::uint8_t> seen(g.size(), 0);
    for (std::size_t v = 0; v < g.size(); ++v) {
        if (!is_scaffold(f.mask[v])) continue;
        auto c = coords(g, v);
        colour[(c[0] + c[1] + c[2]) & 1].push_back(v);
        for (int k = 0; k < 3; ++k)
            for (std::size_t u : {v - st[k], v + st[k]})
                if (!is_scaffold(f.mask[u]) && !seen[u]) {
                    seen[u] = 1;
                    bsum += f.values[u];
                    ++nb;
                }
    }
    if (colour[0].empty() && colour[1].empty()) {
        res.converged = true;
        return res;
    }
    QTensor start = (1.0 / static_cast<double>(std::max<std::size_t>(nb, 1))) * bsum;
    for (const auto& list : colour)
        for (std::size_t v : list) out.values[v] = start;

    for (res.sweeps = 0; res.sweeps < max_sweeps;) {
        double maxup = 0.0;
        for (const auto& list : colour) {
            for (std::size_t v : list) {
                QTensor acc;
                for (int k = 0; k < 3; ++k) {
                    acc += out.values[v - st[k]];
                    acc += out.values[v + st[k]];
                }
                acc *= 1.0 / 6.0;
                const Comp5& o = out.values[v].components();
                for (int i = 0; i < 5; ++i) maxup = std::max(maxup, std::abs(acc.components()[i] - o[i]));
                out.values[v] = acc;
            }
        }
        ++res.sweeps;
        res.max_update = maxup;
        if (maxup < tol) {
            res.converged = true;
            break;
        }
    }
    if (!res.converged) {
        std::ostringstream os;
        os << "harmonic_extension: no convergence after " << res.sweeps << " sweeps (last update "
           << res.max_update << ")";
        res.warning = os.str();
    }
    return res;
}

// ---------------------------------------------------------------- norms

FieldNorms norms(const Field& a, const Field& b)
{
    if (!a.grid.same_as(b.grid)) throw ValidationError("norms: grid mismatch");
    const Grid& g = a.grid;
    std::vector<QTensor> diff(g.size());
    for (std::size_t v = 0; v < g.size(); ++v) diff[v] = a.values[v] - b.values[v];
    auto bits = stencil_bits(g, [](std::size_t) { return true; });
    auto st = strides(g);
    double l2 = reduce_sum(g.size(), [&](std::size_t v) { return comp_norm2(diff[v]); });
    double gr = reduce_sum(g.size(), [&](std::size_t v) {
        GradQ D = gradient_at(diff, g, st, v, bits[v]);
        return comp_norm2(D.d[0]) + comp_norm2(D.d[1]) + comp_norm2(D.d[2]);
    });
    double vol = g.cell_volume();
    return {std::sqrt(l2 * vol), std::sqrt((l2 + gr) * vol)};
}

double gradient_l2(const Field& f, bool lc_only)
{
    const Grid& g = f.grid;
    auto st = strides(g);
    std::vector<std::uint8_t> bits =
        lc_only ? stencil_bits(g, [&](std::size_t u) { return !is_scaffold(f.mask[u]); })
                : stencil_bits(g, [](std::size_t) { return true; });
    double s = reduce_sum(g.size(), [&](std::size_t v) {
        if (lc_only && is_scaffold(f.mask[v])) return 0.0;
        GradQ D = gradient_at(f.values, g, st, v, bits[v]);
        return comp_norm2(D.d[0]) + comp_norm2(D.d[1]) + comp_norm2(D.d[2]);
    });
    return std::sqrt(s * g.cell_volume());
}

QTensor mean_q(const Field& f, bool exclude_scaffold)
{
    std::array<double, 5> acc{};
    std::size_t n = 0;
    for (std::size_t v = 0; v < f.values.size(); ++v) {
        if (exclude_scaffold && is_scaffold(f.mask[v])) continue;
        for (int i = 0; i < 5; ++i) acc[i] += f.values[v].components()[i];
        ++n;
    }
    if (n == 0) return {};
    for (double& x : acc) x /= static_cast<double>(n);
    return QTensor::from_array(acc);
}

// ---------------------------------------------------------------- snapshots

void write_snapshot(const Field& f, const std::filesystem::path& path, const std::string& config_hash)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("snapshot: cannot open " + path.string());
    os.write(kMagic, 8);
    write_u64(os, static_cast<std::uint64_t>(f.grid.nx));
    write_u64(os, static_cast<std::uint64_t>(f.grid.ny));
    write_u64(os, static_cast<std::uint64_t>(f.grid.nz));
    write_f64(os, f.grid.h);
    for (int k = 0; k < 3; ++k) write_f64(os, f.grid.domain.lo[k]);
    for (int k = 0; k < 3; ++k) write_f64(os, f.grid.domain.hi[k]);
    for (const QTensor& q : f.values)
        for (double c : q.components()) write_f64(os, c);
    if (!os) throw std::runtime_error("snapshot: write failed for " + path.string());
    std::filesystem::path side = path;
    side += ".json";
    std::ofstream js(side);
    js << mask_statistics_json(f, config_hash) << "\n";
    if (!js) throw std::runtime_error("snapshot: cannot write sidecar " + side.string());
}

Snapshot read_snapshot(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("snapshot: cannot open " + path.string());
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0) throw ValidationError("snapshot: bad magic in " + path.string());
    Snapshot s;
    s.grid.nx = static_cast<int>(read_u64(is));
    s.grid.ny = static_cast<int>(read_u64(is));
    s.grid.nz = static_cast<int>(read_u64(is));
    s.grid.h = read_f64(is);
    for (int k = 0; k < 3; ++k) s.grid.domain.lo[k] = read_f64(is);
    for (int k = 0; k < 3; ++k) s.grid.domain.hi[k] = read_f64(is);
    s.grid.validate();
    s.values.resize(s.grid.size());
    for (QTensor& q : s.values) {
        Comp5 c;
        for (double& x : c) x = read_f64(is);
        q = QTensor::from_array(c);
    }
    return s;
}

std::string mask_statistics_json(const Field& f, const std::string& config_hash)
{
    nlohmann::ordered_json j;
    if (!config_hash.empty()) j["config_hash"] = config_hash;
    j["format"] = "NLATFLD1: 8-byte magic, u64 nx ny nz, f64 h, f64 lo[3], f64 hi[3], then 5 f64 per voxel "
                  "(q11 q12 q13 q22 q23), x fastest, little-endian";
    j["dims"] = {f.grid.nx, f.grid.ny, f.grid.nz};
    j["h"] = f.grid.h;
    j["domain"] = {{"min", f.grid.domain.lo}, {"max", f.grid.domain.hi}};
    double n = static_cast<double>(f.grid.size());
    for (VoxelTag t : {VoxelTag::LiquidCrystal, VoxelTag::ScaffoldInterior, VoxelTag::ScaffoldSurfaceShell,
                       VoxelTag::DirichletShell}) {
        std::size_t c = f.count(t);
        j["mask"][tag_name(t)] = {{"count", c}, {"fraction", static_cast<double>(c) / n}};
    }
    return j.dump(2);
}

}  // namespace nlat
