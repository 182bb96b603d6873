#pragma once

#include "nlat/energy.hpp"

#include <array>

namespace nlat {

// Diagonal entries only; A and B are diagonal.
template <class T>
struct AsymMatricesT {
    std::array<T, 3> A{};
    std::array<T, 3> B{};
    T omega{};
};
using AsymMatrices = AsymMatricesT<double>;

// Works for double and for exact rational types.
template <class T>
AsymMatricesT<T> asym_matrices(T p, T q, T r)
{
    const T one(1), two(2), three(3);
    T ip = one / p, iq = one / q, ir = one / r;
    AsymMatricesT<T> m;
    m.A = {(-two * ip + iq + ir) / three, (ip - two * iq + ir) / three, (ip + iq - two * ir) / three};
    m.B = {iq + ir, ip + ir, ip + iq};
    m.omega = two / three * (ip + iq + ir);
    return m;
}

double psi(const QTensor& q, Axis axis, const SurfaceModel& sm);
// Same integral evaluated by Gauss-Legendre quadrature over the two faces.
double psi_quadrature(const QTensor& q, Axis axis, const SurfaceModel& sm, int order = 3);

double f_hom_general(const QTensor& q, const SurfaceModel& sm, double p, double q_, double r);
// f_hom_general minus the additive constant when the model asks for it to be dropped.
double f_hom(const QTensor& q, const SurfaceModel& sm, double p, double q_, double r);
Comp5 f_hom_gradient(const QTensor& q, const SurfaceModel& sm, double p, double q_, double r);
// Additive constant carried by f_hom_general (non-zero only for Rapini-Papoular).
double f_hom_constant(const SurfaceModel& sm, double p, double q_, double r);

double f_hom_ldg(const QTensor& q, double a, double ap, double b, double bp, double c, double cp);
double f_hom_rp(const QTensor& q, double a, double ap, bool include_constant);
// Merged polynomial sum_k c_k tr(Q^k); returns c_k.
std::vector<double> merge_gen_coefficients(const std::vector<double>& bulk, const std::vector<double>& surface);
double f_hom_gen(const QTensor& q, const std::vector<double>& bulk, const std::vector<double>& surface);
// Uses tr(Q^4) as the isotropic quartic.
double f_hom_asym(const QTensor& q, double a, double ap, double b, double bp, double c, double cp, double p,
                  double q_, double r);
// Same density written with (tr Q^2)^2 / 2 in place of tr(Q^4).
double f_hom_asym_squared(const QTensor& q, double a, double ap, double b, double bp, double c, double cp,
                          double p, double q_, double r);

double cube_surface_moment(const QTensor& q, int k);
double cube_surface_rp(const QTensor& q);

struct VolumeQuadrature {
    int cells = 8;  // per axis
    int order = 1;  // Gauss points per cell per axis; 1 is the midpoint rule
};

double integrate_box(const std::function<double(const Vec3&)>& f, const Box& domain, const VolumeQuadrature& vq);

double J_0(const QSampler& Q, const SurfaceModel& sm, double p, double q_, double r, const Box& domain,
           const VolumeQuadrature& vq);

}  // namespace nlat
