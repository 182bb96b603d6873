#include "nlat/scaffold.hpp"

#include "nlat/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nlat {

namespace {

constexpr double kSnap = 1e-9;

struct AxisRange {
    long lo = 0;
    long n = 0;
};

AxisRange lattice_range(double lo, double hi, double eps)
{
    long a = static_cast<long>(std::ceil((lo + eps) / eps - kSnap));
    long b = static_cast<long>(std::floor((hi - eps) / eps + kSnap));
    return {a, std::max(0L, b - a + 1)};
}

Box centered_box(const Vec3& c, const Vec3& half)
{
    Box b;
    for (int k = 0; k < 3; ++k) {
        b.lo[k] = c[k] - half[k];
        b.hi[k] = c[k] + half[k];
    }
    return b;
}

Face box_face(const Box& b, Axis normal, int sign, Axis owner_axis, std::size_t owner)
{
    Face f;
    f.rect = b;
    int k = index(normal);
    double v = sign > 0 ? b.hi[k] : b.lo[k];
    f.rect.lo[k] = f.rect.hi[k] = v;
    f.normal_axis = normal;
    f.sign = sign;
    f.owner_axis = owner_axis;
    f.owner = owner;
    return f;
}

}  // namespace

void ScaffoldParams::validate() const
{
    std::ostringstream os;
    if (!std::isfinite(eps) || !(eps > 0.0)) {
        os << "eps must be positive and finite, got " << eps;
        throw ValidationError(os.str());
    }
    if (!(alpha > 1.0 && alpha < 1.5)) {
        os << "alpha must satisfy 1 < alpha < 3/2, got " << alpha;
        throw ValidationError(os.str());
    }
    for (int k = 0; k < 3; ++k) {
        double a = aniso(k);
        if (!std::isfinite(a) || a < 1.0) {
            os << "anisotropy factor " << "pqr"[k] << " must be >= 1, got " << a;
            throw ValidationError(os.str());
        }
    }
    double m = std::min({p, q, r});
    if (!(std::pow(eps, alpha - 1.0) < m)) {
        os << "eps^(alpha-1) = " << std::pow(eps, alpha - 1.0) << " must be < min(p,q,r) = " << m
           << " (connectors would have non-positive length)";
        throw ValidationError(os.str());
    }
    domain.validate();
}

double ScaffoldParams::node_half(int k) const { return std::pow(eps, alpha) / (2.0 * aniso(k)); }

Vec3 ScaffoldParams::connector_half(Axis axis) const
{
    double ea = std::pow(eps, alpha);
    Vec3 h{node_half(0), node_half(1), node_half(2)};
    int a = index(axis);
    h[a] = (aniso(a) * eps - ea) / (2.0 * aniso(a));
    return h;
}

const char* material_name(Material m)
{
    switch (m) {
    case Material::LiquidCrystal: return "LiquidCrystal";
    case Material::ScaffoldNode: return "ScaffoldNode";
    case Material::ScaffoldConnector: return "ScaffoldConnector";
    }
    return "?";
}

double Face::area() const
{
    int k = index(normal_axis);
    return rect.extent((k + 1) % 3) * rect.extent((k + 2) % 3);
}

std::size_t Scaffold::node_index(long i, long j, long k) const
{
    return static_cast<std::size_t>(i + idx_n_[0] * (j + idx_n_[1] * k));
}

std::vector<Vec3> build_lattice(const ScaffoldParams& params)
{
    params.validate();
    std::array<AxisRange, 3> ax;
    for (int k = 0; k < 3; ++k) ax[k] = lattice_range(params.domain.lo[k], params.domain.hi[k], params.eps);
    if (ax[0].n == 0 || ax[1].n == 0 || ax[2].n == 0) {
        std::ostringstream os;
        os << "no lattice point lies at distance >= eps = " << params.eps
           << " from the domain boundary; use a smaller eps or a larger domain";
        throw EmptyLattice(os.str());
    }
    std::vector<Vec3> pts;
    pts.reserve(static_cast<std::size_t>(ax[0].n * ax[1].n * ax[2].n));
    for (long k = 0; k < ax[2].n; ++k)
        for (long j = 0; j < ax[1].n; ++j)
            for (long i = 0; i < ax[0].n; ++i)
                pts.push_back({static_cast<double>(ax[0].lo + i) * params.eps,
                               static_cast<double>(ax[1].lo + j) * params.eps,
                               static_cast<double>(ax[2].lo + k) * params.eps});
    return pts;
}

Scaffold build_scaffold(const ScaffoldParams& params)
{
    Scaffold s;
    s.params_ = params;
    s.node_centers_ = build_lattice(params);
    for (int k = 0; k < 3; ++k) {
        AxisRange r = lattice_range(params.domain.lo[k], params.domain.hi[k], params.eps);
        s.idx_lo_[k] = r.lo;
        s.idx_n_[k] = r.n;
    }
    const auto& n = s.idx_n_;
    Vec3 nh{params.node_half(0), params.node_half(1), params.node_half(2)};
    s.node_boxes_.reserve(s.node_centers_.size());
    for (const Vec3& c : s.node_centers_) s.node_boxes_.push_back(centered_box(c, nh));

    for (int a = 0; a < 3; ++a) {
        Axis axis = axis_from_index(a);
        Vec3 ch = params.connector_half(axis);
        auto& list = s.connectors_[a];
        std::array<long, 3> step{0, 0, 0};
        step[a] = 1;
        for (long k = 0; k < n[2] - step[2]; ++k)
            for (long j = 0; j < n[1] - step[1]; ++j)
                for (long i = 0; i < n[0] - step[0]; ++i) {
                    Connector c;
                    c.node_a = s.node_index(i, j, k);
                    c.node_b = s.node_index(i + step[0], j + step[1], k + step[2]);
                    const Vec3& xa = s.node_centers_[c.node_a];
                    const Vec3& xb = s.node_centers_[c.node_b];
                    for (int d = 0; d < 3; ++d) c.center[d] = 0.5 * (xa[d] + xb[d]);
                    c.box = centered_box(c.center, ch);
                    list.push_back(c);
                }
    }

    s.t_begin_[0] = 0;
    for (int a = 0; a < 3; ++a) {
        Axis axis = axis_from_index(a);
        const auto& list = s.connectors_[a];
        for (std::size_t ci = 0; ci < list.size(); ++ci) {
            for (int d = 1; d <= 2; ++d) {
                Axis nrm = axis_from_index((a + d) % 3);
                s.t_faces_.push_back(box_face(list[ci].box, nrm, -1, axis, ci));
                s.t_faces_.push_back(box_face(list[ci].box, nrm, +1, axis, ci));
            }
        }
        s.t_begin_[a + 1] = s.t_faces_.size();
    }

    for (long k = 0; k < n[2]; ++k)
        for (long j = 0; j < n[1]; ++j)
            for (long i = 0; i < n[0]; ++i) {
                std::size_t id = s.node_index(i, j, k);
                std::array<long, 3> ijk{i, j, k};
                int exposed = 0;
                for (int a = 0; a < 3; ++a) {
                    for (int sg : {-1, 1}) {
                        long nb = ijk[a] + sg;
                        if (nb < 0 || nb >= n[a]) {
                            s.s_faces_.push_back(box_face(s.node_boxes_[id], axis_from_index(a), sg,
                                                          axis_from_index(a), id));
                            ++exposed;
                        }
                    }
                }
                if (exposed == 0)
                    ++s.counts_.interior;
                else
                    ++s.counts_.exposed;
            }

    s.counts_.nodes = s.node_centers_.size();
    for (int a = 0; a < 3; ++a) s.counts_.connectors[a] = s.connectors_[a].size();
    return s;
}

Material Scaffold::contains(const Vec3& x) const
{
    const Box& d = params_.domain;
    double tol = 1e-12 * std::max({1.0, std::abs(d.lo[0]), std::abs(d.hi[0]), std::abs(d.lo[1]),
                                   std::abs(d.hi[1]), std::abs(d.lo[2]), std::abs(d.hi[2])});
    if (!d.contains(x, tol)) {
        std::ostringstream os;
        os << "contains: point (" << x[0] << ", " << x[1] << ", " << x[2] << ") lies outside the domain";
        throw ValidationError(os.str());
    }
    const double eps = params_.eps;
    std::array<long, 3> nearest{};
    std::array<bool, 3> in_range{};
    for (int k = 0; k < 3; ++k) {
        nearest[k] = std::lround(x[k] / eps) - idx_lo_[k];
        in_range[k] = nearest[k] >= 0 && nearest[k] < idx_n_[k];
    }
    auto within = [&](int k, double center, double half) { return std::abs(x[k] - center) <= half; };

    if (in_range[0] && in_range[1] && in_range[2]) {
        const Box& b = node_boxes_[node_index(nearest[0], nearest[1], nearest[2])];
        if (b.contains(x)) return Material::ScaffoldNode;
    }
    for (int a = 0; a < 3; ++a) {
        int b1 = (a + 1) % 3, b2 = (a + 2) % 3;
        if (!in_range[b1] || !in_range[b2]) continue;
        long i = static_cast<long>(std::floor(x[a] / eps)) - idx_lo_[a];
        if (i < 0 || i + 1 >= idx_n_[a]) continue;
        Vec3 half = params_.connector_half(axis_from_index(a));
        double ca = (static_cast<double>(idx_lo_[a] + i) + 0.5) * eps;
        double c1 = static_cast<double>(idx_lo_[b1] + nearest[b1]) * eps;
        double c2 = static_cast<double>(idx_lo_[b2] + nearest[b2]) * eps;
        if (within(a, ca, half[a]) && within(b1, c1, half[b1]) && within(b2, c2, half[b2]))
            return Material::ScaffoldConnector;
    }
    return Material::LiquidCrystal;
}

double volume(const Scaffold& s)
{
    const ScaffoldParams& pr = s.params();
    double ea = std::pow(pr.eps, pr.alpha);
    double pqr = pr.p * pr.q * pr.r;
    const auto& c = s.counts();
    double v = static_cast<double>(c.nodes) * ea * ea * ea / pqr;
    for (int a = 0; a < 3; ++a)
        v += static_cast<double>(c.connectors[a]) * ea * ea * (pr.aniso(a) * pr.eps - ea) / pqr;
    return v;
}

SurfaceAreas surface_areas(const Scaffold& s)
{
    const ScaffoldParams& pr = s.params();
    double ea = std::pow(pr.eps, pr.alpha);
    SurfaceAreas out;
    for (int a = 0; a < 3; ++a) {
        int b1 = (a + 1) % 3, b2 = (a + 2) % 3;
        double len = (pr.aniso(a) * pr.eps - ea) / pr.aniso(a);
        double lateral = 2.0 * len * ea * (1.0 / pr.aniso(b1) + 1.0 / pr.aniso(b2));
        out.t += static_cast<double>(s.counts().connectors[a]) * lateral;
    }
    for (const Face& f : s.s_faces()) out.s += f.area();
    return out;
}

std::string to_obj(const Scaffold& s)
{
    std::string out;
    out.reserve(64 * 20 * (s.node_boxes().size() + 3 * s.connectors(Axis::X).size()));
    char buf[128];
    std::size_t base = 1;
    // 12 triangles per box, outward winding
    static constexpr int tri[12][3] = {{0, 2, 1}, {0, 3, 2}, {4, 5, 6}, {4, 6, 7}, {0, 1, 5}, {0, 5, 4},
                                       {2, 3, 7}, {2, 7, 6}, {1, 2, 6}, {1, 6, 5}, {0, 4, 7}, {0, 7, 3}};
    auto emit = [&](const Box& b) {
        for (int v = 0; v < 8; ++v) {
            double x = ((v & 1) ^ ((v >> 1) & 1)) ? b.hi[0] : b.lo[0];
            double y = (v & 2) ? b.hi[1] : b.lo[1];
            double z = (v & 4) ? b.hi[2] : b.lo[2];
            std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", x, y, z);
            out += buf;
        }
        for (const auto& t : tri) {
            std::snprintf(buf, sizeof buf, "f %zu %zu %zu\n", base + t[0], base + t[1], base + t[2]);
            out += buf;
        }
        base += 8;
    };
    out += "o nodes\n";
    for (const Box& b : s.node_boxes()) emit(b);
    for (int a = 0; a < 3; ++a) {
        out += std::string("o connectors_") + axis_name(axis_from_index(a)) + "\n";
        for (const Connector& c : s.connectors(axis_from_index(a))) emit(c.box);
    }
    return out;
}

void export_obj(const Scaffold& s, const std::filesystem::path& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("export_obj: cannot open " + path.string());
    std::string text = to_obj(s);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw std::runtime_error("export_obj: write failed for " + path.string());
}

std::string summary_json(const Scaffold& s)
{
    const ScaffoldParams& p = s.params();
    const auto& c = s.counts();
    SurfaceAreas a = surface_areas(s);
    nlohmann::ordered_json j;
    j["eps"] = p.eps;
    j["alpha"] = p.alpha;
    j["p"] = p.p;
    j["q"] = p.q;
    j["r"] = p.r;
    j["domain"] = {{"min", p.domain.lo}, {"max", p.domain.hi}};
    j["counts"] = {{"nodes", c.nodes},
                   {"interior_nodes", c.interior},
                   {"exposed_nodes", c.exposed},
                   {"connectors_x", c.connectors[0]},
                   {"connectors_y", c.connectors[1]},
                   {"connectors_z", c.connectors[2]},
                   {"t_faces", s.t_faces().size()},
                   {"s_faces", s.s_faces().size()}};
    j["volume"] = volume(s);
    j["area_t"] = a.t;
    j["area_s"] = a.s;
    return j.dump(2);
}

}  // namespace nlat
