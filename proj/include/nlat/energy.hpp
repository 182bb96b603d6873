#pragma once

#include "nlat/qtensor.hpp"
#include "nlat/scaffold.hpp"

#include <array>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace nlat {

struct ElasticParams {
    double L1 = 1.0;
    double L2 = 0.0;
    double L3 = 0.0;

    void validate() const;
};

// d[k] holds dQ/dx_k.
struct GradQ {
    std::array<QTensor, 3> d{};
};

struct BulkLdg {
    double a = 0.0, b = 0.0, c = 1.0;
};
struct BulkRp {
    double a = 0.0;
};
// a[k] multiplies tr(Q^k); entries 0 and 1 must be zero.
struct BulkGen {
    std::vector<double> a;
};
using BulkModel = std::variant<BulkLdg, BulkRp, BulkGen>;

struct SurfaceLdg {
    double a = 0.0, ap = 0.0, b = 0.0, bp = 0.0, c = 1.0, cp = 1.0, p = 1.0;
};
struct SurfaceRp {
    double a = 0.0, ap = 0.0, p = 1.0;
    bool include_constant = false;  // only affects the homogenised density
};
// b[k] multiplies nu.Q^k nu; entries 0 and 1 must be zero.
struct SurfaceGen {
    std::vector<double> b;
    double p = 1.0;
};
struct SurfaceAsym {
    double a = 0.0, ap = 0.0, b = 0.0, bp = 0.0, c = 1.0, cp = 1.0, p = 1.0, q = 1.0, r = 1.0;
};
using SurfaceModel = std::variant<SurfaceLdg, SurfaceRp, SurfaceGen, SurfaceAsym>;

void validate(const BulkModel& bm);
void validate(const SurfaceModel& sm);
// Non-fatal admissibility notes, e.g. negative anchoring strength.
std::vector<std::string> warnings(const SurfaceModel& sm);

double f_e(const GradQ& D, const ElasticParams& ep);
// d f_e / d(dQ/dx_k) in stored components, one entry per k.
std::array<Comp5, 3> f_e_gradient(const GradQ& D, const ElasticParams& ep);

double f_b(const QTensor& q, const BulkModel& bm);
Comp5 f_b_gradient(const QTensor& q, const BulkModel& bm);

double f_s(const QTensor& q, const Vec3& nu, const SurfaceModel& sm);
Comp5 f_s_gradient(const QTensor& q, const Vec3& nu, const SurfaceModel& sm);

// nu . Q^k nu
double normal_moment(const QTensor& q, const Vec3& nu, int k);

double surface_prefactor(double eps, double alpha);

using QSampler = std::function<QTensor(const Vec3&)>;

// Calls fn(point, weight) for each tensor-product Gauss-Legendre node on the face; weights sum to the area.
void for_face_nodes(const Face& f, int order, const std::function<void(const Vec3&, double)>& fn);

// Prefactor times the face integrals of f_s over the contact faces, per connector axis.
std::array<double, 3> J_eps_T_axes(const QSampler& Q, const Scaffold& s, const SurfaceModel& sm, int quad_order = 3);
double J_eps_T(const QSampler& Q, const Scaffold& s, const SurfaceModel& sm, int quad_order = 3);
double J_eps_S(const QSampler& Q, const Scaffold& s, const SurfaceModel& sm, int quad_order = 3);
// Q frozen at each connector center.
double J_tilde_eps(const QSampler& Q, const Scaffold& s, const SurfaceModel& sm);

}  // namespace nlat
