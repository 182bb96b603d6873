#include "nlat/energy.hpp"

#include "nlat/error.hpp"
#include "nlat/numerics.hpp"

#include <cmath>
#include <sstream>

namespace nlat {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_poly(const std::vector<double>& c, const char* what)
{
    if (c.size() < 3) throw ValidationError(std::string(what) + ": need coefficients up to at least k = 2");
    if (c[0] != 0.0 || c[1] != 0.0)
        throw ValidationError(std::string(what) + ": coefficients for k = 0 and k = 1 must be zero");
    for (double v : c)
        if (!std::isfinite(v)) throw ValidationError(std::string(what) + ": non-finite coefficient");
    std::size_t n = c.size() - 1;
    while (n > 2 && c[n] == 0.0) --n;
    if (n % 2 != 0 || !(c[n] > 0.0)) {
        std::ostringstream os;
        os << what << ": the leading coefficient must have even degree and be positive (degree " << n
           << ", coefficient " << c[n]
           << "); other polynomials may still admit a local minimum, inspect them numerically";
        throw ValidationError(os.str());
    }
}

void require_finite(std::initializer_list<double> v, const char* what)
{
    for (double x : v)
        if (!std::isfinite(x)) throw ValidationError(std::string(what) + ": non-finite coefficient");
}

// Q^m nu for m = 0..k
std::vector<Vec3> krylov(const Mat3& q, const Vec3& nu, int k)
{
    std::vector<Vec3> v(static_cast<std::size_t>(k) + 1);
    v[0] = nu;
    for (int m = 1; m <= k; ++m) v[m] = q.apply(v[m - 1]);
    return v;
}

double moment_from(const std::vector<Vec3>& v, int k) { return dot(v[(k + 1) / 2], v[k / 2]); }

// adds w * d(nu.Q^k nu)/dQ to g
void add_moment_derivative(Mat3& g, const std::vector<Vec3>& v, int k, double w)
{
    for (int m = 0; m < k; ++m) {
        const Vec3& x = v[m];
        const Vec3& y = v[k - 1 - m];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) g(a, b) += w * x[a] * y[b];
    }
}

double omega_of(double p, double q, double r) { return 2.0 / 3.0 * (1.0 / p + 1.0 / q + 1.0 / r); }

// nu (x) nu - I/3 without re-validating nu
Mat3 anchoring_target(const Vec3& nu)
{
    Mat3 t;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) t(a, b) = nu[a] * nu[b] - (a == b ? 1.0 / 3.0 : 0.0);
    return t;
}

}  // namespace

void ElasticParams::validate() const
{
    std::ostringstream os;
    if (!std::isfinite(L1) || !std::isfinite(L2) || !std::isfinite(L3)) {
        throw ValidationError("elastic: non-finite constant");
    }
    if (!(L1 > 0.0)) {
        os << "elastic: L1 must be positive, got " << L1;
        throw ValidationError(os.str());
    }
    if (!(-L1 < L3 && L3 < 2.0 * L1)) {
        os << "elastic: need -L1 < L3 < 2 L1, got L1=" << L1 << " L3=" << L3;
        throw ValidationError(os.str());
    }
    if (!(L2 > -0.6 * L1 - 0.1 * L3)) {
        os << "elastic: need L2 > -(3/5) L1 - (1/10) L3, got L2=" << L2;
        throw ValidationError(os.str());
    }
}

void validate(const BulkModel& bm)
{
    std::visit(overloaded{
                   [](const BulkLdg& m) {
                       require_finite({m.a, m.b, m.c}, "bulk ldg");
                       if (!(m.c > 0.0)) throw ValidationError("bulk ldg: c must be positive");
                   },
                   [](const BulkRp& m) { require_finite({m.a}, "bulk rp"); },
                   [](const BulkGen& m) { require_poly(m.a, "bulk gen"); },
               },
               bm);
}

void validate(const SurfaceModel& sm)
{
    auto check_p = [](double p, const char* what) {
        if (!std::isfinite(p) || p < 1.0) throw ValidationError(std::string(what) + ": p must be >= 1");
    };
    std::visit(overloaded{
                   [&](const SurfaceLdg& m) {
                       require_finite({m.a, m.ap, m.b, m.bp, m.c, m.cp}, "surface ldg");
                       check_p(m.p, "surface ldg");
                   },
                   [&](const SurfaceRp& m) {
                       require_finite({m.a, m.ap}, "surface rp");
                       check_p(m.p, "surface rp");
                   },
                   [&](const SurfaceGen& m) {
                       require_poly(m.b, "surface gen");
                       check_p(m.p, "surface gen");
                   },
                   [&](const SurfaceAsym& m) {
                       require_finite({m.a, m.ap, m.b, m.bp, m.c, m.cp}, "surface asym");
                       if (!(m.c > 0.0) || !(m.cp > 0.0))
                           throw ValidationError("surface asym: c and c' must be positive");
                       check_p(m.p, "surface asym");
                       check_p(m.q, "surface asym (q)");
                       check_p(m.r, "surface asym (r)");
                   },
               },
               sm);
}

std::vector<std::string> warnings(const SurfaceModel& sm)
{
    std::vector<std::string> w;
    std::visit(overloaded{
                   [&](const SurfaceRp& m) {
                       if (m.ap < m.a)
                           w.push_back("surface rp: a' < a gives a negative anchoring strength");
                   },
                   [&](const SurfaceLdg& m) {
                       if (m.ap < m.a) w.push_back("surface ldg: a' < a, the quadratic anchoring term is negative");
                       if (m.cp < m.c) w.push_back("surface ldg: c' < c, the quartic anchoring term is negative");
                   },
                   [&](const SurfaceAsym& m) {
                       if (m.ap < m.a) w.push_back("surface asym: a' < a, the quadratic anchoring term is negative");
                       if (m.cp < m.c) w.push_back("surface asym: c' < c, the quartic anchoring term is negative");
                   },
                   [](const SurfaceGen&) {},
               },
               sm);
    return w;
}

double f_e(const GradQ& D, const ElasticParams& ep)
{
    std::array<Mat3, 3> M{D.d[0].matrix(), D.d[1].matrix(), D.d[2].matrix()};
    double t1 = 0.0;
    for (int k = 0; k < 3; ++k) t1 += frobenius_inner(M[k], M[k]);
    double t2 = 0.0;
    for (int i = 0; i < 3; ++i) {
        double v = M[0](i, 0) + M[1](i, 1) + M[2](i, 2);
        t2 += v * v;
    }
    double t3 = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) t3 += M[j](i, k) * M[k](i, j);
    return ep.L1 * t1 + ep.L2 * t2 + ep.L3 * t3;
}

std::array<Comp5, 3> f_e_gradient(const GradQ& D, const ElasticParams& ep)
{
    std::array<Mat3, 3> M{D.d[0].matrix(), D.d[1].matrix(), D.d[2].matrix()};
    Vec3 v{};
    for (int i = 0; i < 3; ++i) v[i] = M[0](i, 0) + M[1](i, 1) + M[2](i, 2);
    std::array<Comp5, 3> out{};
    for (int c = 0; c < 3; ++c) {
        Mat3 g;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                double val = 2.0 * ep.L1 * M[c](a, b) + 2.0 * ep.L3 * M[b](a, c);
                if (b == c) val += 2.0 * ep.L2 * v[a];
                g(a, b) = val;
            }
        out[c] = reduce_matrix_derivative(g);
    }
    return out;
}

double f_b(const QTensor& q, const BulkModel& bm)
{
    return std::visit(overloaded{
                          [&](const BulkLdg& m) {
                              double t2 = trace_power(q, 2);
                              return m.a * t2 - m.b * trace_power(q, 3) + m.c * t2 * t2;
                          },
                          [&](const BulkRp& m) { return m.a * trace_power(q, 2); },
                          [&](const BulkGen& m) {
                              double s = 0.0;
                              for (std::size_t k = 2; k < m.a.size(); ++k)
                                  if (m.a[k] != 0.0) s += m.a[k] * trace_power(q, static_cast<int>(k));
                              return s;
                          },
                      },
                      bm);
}

Comp5 f_b_gradient(const QTensor& q, const BulkModel& bm)
{
    Mat3 m = q.matrix();
    Mat3 m2 = m * m;
    Mat3 g = std::visit(overloaded{
                            [&](const BulkLdg& b) {
                                double t2 = m2.trace();
                                return (2.0 * b.a + 4.0 * b.c * t2) * m - (3.0 * b.b) * m2;
                            },
                            [&](const BulkRp& b) { return (2.0 * b.a) * m; },
                            [&](const BulkGen& b) {
                                Mat3 acc;
                                Mat3 pw = Mat3::identity();  // Q^{k-1}
                                for (std::size_t k = 2; k < b.a.size(); ++k) {
                                    pw = pw * m;
                                    if (b.a[k] != 0.0) acc = acc + (static_cast<double>(k) * b.a[k]) * pw;
                                }
                                return acc;
                            },
                        },
                        bm);
    return reduce_matrix_derivative(g);
}

double normal_moment(const QTensor& q, const Vec3& nu, int k)
{
    if (k < 0) throw ValidationError("normal_moment: k must be >= 0");
    return moment_from(krylov(q.matrix(), nu, (k + 1) / 2), k);
}

double f_s(const QTensor& q, const Vec3& nu, const SurfaceModel& sm)
{
    require_unit(nu, "f_s normal", 1e-10);
    Mat3 m = q.matrix();
    return std::visit(overloaded{
                          [&](const SurfaceLdg& s) {
                              auto v = krylov(m, nu, 2);
                              return s.p / 4.0 *
                                     ((s.ap - s.a) * moment_from(v, 2) - (s.bp - s.b) * moment_from(v, 3) +
                                      2.0 * (s.cp - s.c) * moment_from(v, 4));
                          },
                          [&](const SurfaceRp& s) {
                              Mat3 d = m - anchoring_target(nu);
                              return s.p / 12.0 * (s.ap - s.a) * frobenius_inner(d, d);
                          },
                          [&](const SurfaceGen& s) {
                              int kmax = static_cast<int>(s.b.size()) - 1;
                              auto v = krylov(m, nu, (kmax + 1) / 2);
                              double acc = 0.0;
                              for (int k = 2; k <= kmax; ++k)
                                  if (s.b[k] != 0.0) acc += s.b[k] * moment_from(v, k);
                              return s.p / 4.0 * acc;
                          },
                          [&](const SurfaceAsym& s) {
                              auto v = krylov(m, nu, 2);
                              double w = omega_of(s.p, s.q, s.r);
                              return 1.0 / (2.0 * w) *
                                     ((s.ap - s.a) * moment_from(v, 2) - (s.bp - s.b) * moment_from(v, 3) +
                                      (s.cp - s.c) * moment_from(v, 4));
                          },
                      },
                      sm);
}

Comp5 f_s_gradient(const QTensor& q, const Vec3& nu, const SurfaceModel& sm)
{
    require_unit(nu, "f_s normal", 1e-10);
    Mat3 m = q.matrix();
    Mat3 g;
    std::visit(overloaded{
                   [&](const SurfaceLdg& s) {
                       auto v = krylov(m, nu, 3);
                       add_moment_derivative(g, v, 2, s.p / 4.0 * (s.ap - s.a));
                       add_moment_derivative(g, v, 3, -s.p / 4.0 * (s.bp - s.b));
                       add_moment_derivative(g, v, 4, s.p / 2.0 * (s.cp - s.c));
                   },
                   [&](const SurfaceRp& s) {
                       Mat3 d = m - anchoring_target(nu);
                       g = (s.p / 6.0 * (s.ap - s.a)) * d;
                   },
                   [&](const SurfaceGen& s) {
                       int kmax = static_cast<int>(s.b.size()) - 1;
                       auto v = krylov(m, nu, std::max(kmax - 1, 0));
                       for (int k = 2; k <= kmax; ++k)
                           if (s.b[k] != 0.0) add_moment_derivative(g, v, k, s.p / 4.0 * s.b[k]);
                   },
                   [&](const SurfaceAsym& s) {
                       auto v = krylov(m, nu, 3);
                       double w = 1.0 / (2.0 * omega_of(s.p, s.q, s.r));
                       add_moment_derivative(g, v, 2, w * (s.ap - s.a));
                       add_moment_derivative(g, v, 3, -w * (s.bp - s.b));
                       add_moment_derivative(g, v, 4, w * (s.cp - s.c));
                   },
               },
               sm);
    return reduce_matrix_derivative(g);
}

double surface_prefactor(double eps, double alpha)
{
    if (!std::isfinite(eps) || !(eps > 0.0) || !(eps < 1.0)) {
        std::ostringstream os;
        os << "surface prefactor: need 0 < eps < 1, got " << eps;
        throw ValidationError(os.str());
    }
    if (!std::isfinite(alpha) || !(alpha > 1.0)) {
        std::ostringstream os;
        os << "surface prefactor: need alpha > 1, got " << alpha;
        throw ValidationError(os.str());
    }
    return std::pow(eps, 3.0 - alpha) / (eps - std::pow(eps, alpha));
}

void for_face_nodes(const Face& f, int order, const std::function<void(const Vec3&, double)>& fn)
{
    const GaussRule& g = gauss_legendre(order);
    int k = index(f.normal_axis);
    int u = (k + 1) % 3, w = (k + 2) % 3;
    double cu = 0.5 * (f.rect.lo[u] + f.rect.hi[u]), hu = 0.5 * f.rect.extent(u);
    double cw = 0.5 * (f.rect.lo[w] + f.rect.hi[w]), hw = 0.5 * f.rect.extent(w);
    Vec3 x{};
    x[k] = f.rect.lo[k];
    for (int i = 0; i < order; ++i) {
        x[u] = cu + hu * g.nodes[i];
        for (int j = 0; j < order; ++j) {
            x[w] = cw + hw * g.nodes[j];
            fn(x, g.weights[i] * g.weights[j] * hu * hw);
        }
    }
}

namespace {

double face_range_integral(const QSampler& Q, const std::vector<Face>& faces, std::size_t b, std::size_t e,
                           const SurfaceModel& sm, int order)
{
    return reduce_sum(e - b, [&](std::size_t i) {
        const Face& f = faces[b + i];
        Vec3 nu = f.normal();
        double acc = 0.0;
        for_face_nodes(f, order, [&](const Vec3& x, double w) { acc += w * f_s(Q(x), nu, sm); });
        return acc;
    });
}

}  // namespace

std::array<double, 3> J_eps_T_axes(const QSampler& Q, const Scaffold& s, const SurfaceModel& sm, int quad_order)
{
    validate(sm);
    double pf = surface_prefactor(s.params().eps, s.params().alpha);
    std::array<double, 3> out{};
    for (int a = 0; a < 3; ++a) {
        Axis ax = axis_from_index(a);
        out[a] = pf * face_range_integral(Q, s.t_faces(), s.t_face_begin(ax), s.t_face_end(ax), sm, quad_order);
    }
    return out;
}

double J_eps_T(const QSampler& Q, const Scaffold& s, const SurfaceModel& sm, int quad_order)
{
    auto j = J_eps_T_axes(Q, s, sm, quad_order);
    return j[0] + j[1] + j[2];
}

double J_eps_S(const QSampler& Q, const Scaffold& s, const SurfaceModel& sm, int quad_order)
{
    validate(sm);
    double pf = surface_prefactor(s.params().eps, s.params().alpha);
    return pf * face_range_integral(Q, s.s_faces(), 0, s.s_faces().size(), sm, quad_order);
}

double J_tilde_eps(const QSampler& Q, const Scaffold& s, const SurfaceModel& sm)
{
    validate(sm);
    double pf = surface_prefactor(s.params().eps, s.params().alpha);
    double total = 0.0;
    for (int a = 0; a < 3; ++a) {
        Axis ax = axis_from_index(a);
        const auto& conns = s.connectors(ax);
        std::size_t fb = s.t_face_begin(ax);
        total += reduce_sum(conns.size(), [&](std::size_t ci) {
            QTensor qc = Q(conns[ci].center);
            double acc = 0.0;
            for (std::size_t f = fb + 4 * ci; f < fb + 4 * ci + 4; ++f) {
                const Face& face = s.t_faces()[f];
                acc += face.area() * f_s(qc, face.normal(), sm);
            }
            return acc;
        });
    }
    return pf * total;
}

}  // namespace nlat
