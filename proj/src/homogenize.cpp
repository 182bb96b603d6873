#include "nlat/homogenize.hpp"

#include "nlat/error.hpp"
#include "nlat/numerics.hpp"

#include <cmath>

namespace nlat {

namespace {

std::array<double, 3> axis_weights(double p, double q, double r)
{
    return {(q + r) / (q * r), (p + r) / (p * r), (p + q) / (p * q)};
}

}  // namespace

double psi(const QTensor& q, Axis axis, const SurfaceModel& sm)
{
    return f_s(q, unit(axis, +1), sm) + f_s(q, unit(axis, -1), sm);
}

double psi_quadrature(const QTensor& q, Axis axis, const SurfaceModel& sm, int order)
{
    double total = 0.0;
    for (int sg : {-1, 1}) {
        Face f;
        f.rect = Box{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
        int k = index(axis);
        f.rect.lo[k] = f.rect.hi[k] = sg > 0 ? 1.0 : 0.0;
        f.normal_axis = axis;
        f.sign = sg;
        Vec3 nu = f.normal();
        for_face_nodes(f, order, [&](const Vec3&, double w) { total += w * f_s(q, nu, sm); });
    }
    return total;
}

double f_hom_general(const QTensor& q, const SurfaceModel& sm, double p, double q_, double r)
{
    auto w = axis_weights(p, q_, r);
    return w[0] * psi(q, Axis::X, sm) + w[1] * psi(q, Axis::Y, sm) + w[2] * psi(q, Axis::Z, sm);
}

double f_hom_constant(const SurfaceModel& sm, double p, double q_, double r)
{
    if (!std::holds_alternative<SurfaceRp>(sm)) return 0.0;
    return f_hom_general(QTensor{}, sm, p, q_, r);
}

double f_hom(const QTensor& q, const SurfaceModel& sm, double p, double q_, double r)
{
    double v = f_hom_general(q, sm, p, q_, r);
    if (const auto* rp = std::get_if<SurfaceRp>(&sm); rp && !rp->include_constant)
        v -= f_hom_constant(sm, p, q_, r);
    return v;
}

Comp5 f_hom_gradient(const QTensor& q, const SurfaceModel& sm, double p, double q_, double r)
{
    auto w = axis_weights(p, q_, r);
    Comp5 g{};
    for (int a = 0; a < 3; ++a) {
        Axis ax = axis_from_index(a);
        for (int sg : {-1, 1}) {
            Comp5 d = f_s_gradient(q, unit(ax, sg), sm);
            for (int i = 0; i < 5; ++i) g[i] += w[a] * d[i];
        }
    }
    return g;
}

double f_hom_ldg(const QTensor& q, double a, double ap, double b, double bp, double c, double cp)
{
    double t2 = trace_power(q, 2);
    return (ap - a) * t2 - (bp - b) * trace_power(q, 3) + (cp - c) * t2 * t2;
}

double f_hom_rp(const QTensor& q, double a, double ap, bool include_constant)
{
    double v = (ap - a) * trace_power(q, 2);
    if (include_constant) v += 2.0 / 3.0 * (ap - a);
    return v;
}

std::vector<double> merge_gen_coefficients(const std::vector<double>& bulk, const std::vector<double>& surface)
{
    std::vector<double> c(std::max(bulk.size(), surface.size()), 0.0);
    for (std::size_t k = 0; k < bulk.size(); ++k) c[k] += bulk[k];
    for (std::size_t k = 0; k < surface.size(); ++k) c[k] += surface[k];
    return c;
}

double f_hom_gen(const QTensor& q, const std::vector<double>& bulk, const std::vector<double>& surface)
{
    auto c = merge_gen_coefficients(bulk, surface);
    double v = 0.0;
    for (std::size_t k = 2; k < c.size(); ++k)
        if (c[k] != 0.0) v += c[k] * trace_power(q, static_cast<int>(k));
    return v;
}

namespace {

// tr(A Q^k) for diagonal A
double trace_diag(const std::array<double, 3>& A, const Mat3& qk)
{
    return A[0] * qk(0, 0) + A[1] * qk(1, 1) + A[2] * qk(2, 2);
}

double asym_anisotropic(const QTensor& q, double da, double db, double dc, double p, double q_, double r)
{
    AsymMatrices m = asym_matrices(p, q_, r);
    Mat3 Q = q.matrix();
    Mat3 Q2 = Q * Q;
    Mat3 Q3 = Q2 * Q;
    Mat3 Q4 = Q2 * Q2;
    return (da * trace_diag(m.A, Q2) - db * trace_diag(m.A, Q3) + dc * trace_diag(m.A, Q4)) / m.omega;
}

}  // namespace

double f_hom_asym(const QTensor& q, double a, double ap, double b, double bp, double c, double cp, double p,
                  double q_, double r)
{
    double iso = (ap - a) * trace_power(q, 2) - (bp - b) * trace_power(q, 3) + (cp - c) * trace_power(q, 4);
    return iso + asym_anisotropic(q, ap - a, bp - b, cp - c, p, q_, r);
}

double f_hom_asym_squared(const QTensor& q, double a, double ap, double b, double bp, double c, double cp,
                          double p, double q_, double r)
{
    double t2 = trace_power(q, 2);
    double iso = (ap - a) * t2 - (bp - b) * trace_power(q, 3) + 0.5 * (cp - c) * t2 * t2;
    return iso + asym_anisotropic(q, ap - a, bp - b, cp - c, p, q_, r);
}

double cube_surface_moment(const QTensor& q, int k)
{
    if (k < 2) throw ValidationError("cube_surface_moment: k must be >= 2");
    double total = 0.0;
    for (int a = 0; a < 3; ++a)
        for (int sg : {-1, 1}) total += normal_moment(q, unit(axis_from_index(a), sg), k);
    return total;
}

double cube_surface_rp(const QTensor& q)
{
    double total = 0.0;
    for (int a = 0; a < 3; ++a)
        for (int sg : {-1, 1}) {
            QTensor d = q - uniaxial(1.0, unit(axis_from_index(a), sg));
            total += trace_power(d, 2);
        }
    return total;
}

double integrate_box(const std::function<double(const Vec3&)>& f, const Box& domain, const VolumeQuadrature& vq)
{
    if (vq.cells < 1) throw ValidationError("volume quadrature: cells must be >= 1");
    domain.validate();
    const GaussRule& g = gauss_legendre(vq.order);
    std::array<double, 3> hc{};
    for (int k = 0; k < 3; ++k) hc[k] = domain.extent(k) / vq.cells;
    std::size_t n = static_cast<std::size_t>(vq.cells);
    double cell_w = hc[0] * hc[1] * hc[2] / 8.0;
    return reduce_sum(n * n * n, [&](std::size_t idx) {
        std::size_t ci = idx % n, cj = (idx / n) % n, ck = idx / (n * n);
        Vec3 c{domain.lo[0] + (ci + 0.5) * hc[0], domain.lo[1] + (cj + 0.5) * hc[1],
               domain.lo[2] + (ck + 0.5) * hc[2]};
        double acc = 0.0;
        for (int i = 0; i < vq.order; ++i)
            for (int j = 0; j < vq.order; ++j)
                for (int k = 0; k < vq.order; ++k) {
                    Vec3 x{c[0] + 0.5 * hc[0] * g.nodes[i], c[1] + 0.5 * hc[1] * g.nodes[j],
                           c[2] + 0.5 * hc[2] * g.nodes[k]};
                    acc += g.weights[i] * g.weights[j] * g.weights[k] * f(x);
                }
        return acc * cell_w;
    });
}

double J_0(const QSampler& Q, const SurfaceModel& sm, double p, double q_, double r, const Box& domain,
           const VolumeQuadrature& vq)
{
    validate(sm);
    return integrate_box([&](const Vec3& x) { return f_hom_general(Q(x), sm, p, q_, r); }, domain, vq);
}

}  // namespace nlat
