#include "nlat/qtensor.hpp"

#include "nlat/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace nlat {

QTensor QTensor::from_components(double q11, double q12, double q13, double q22, double q23)
{
    return from_array({q11, q12, q13, q22, q23});
}

QTensor QTensor::from_array(const Comp5& c)
{
    for (double v : c) {
        if (!std::isfinite(v)) throw ValidationError("QTensor: non-finite component");
    }
    QTensor q;
    q.c_ = c;
    return q;
}

QTensor QTensor::from_matrix(const Mat3& m, double tol)
{
    double scale = 0.0;
    for (double v : m.a) scale = std::max(scale, std::abs(v));
    double lim = tol * std::max(1.0, scale);
    if (std::abs(m(0, 1) - m(1, 0)) > lim || std::abs(m(0, 2) - m(2, 0)) > lim ||
        std::abs(m(1, 2) - m(2, 1)) > lim)
        throw ValidationError("QTensor: matrix is not symmetric");
    if (std::abs(m.trace()) > lim) throw ValidationError("QTensor: matrix is not traceless");
    return from_components(m(0, 0), 0.5 * (m(0, 1) + m(1, 0)), 0.5 * (m(0, 2) + m(2, 0)), m(1, 1),
                           0.5 * (m(1, 2) + m(2, 1)));
}

double QTensor::operator()(int i, int j) const
{
    if (i > j) std::swap(i, j);
    switch (3 * i + j) {
    case 0: return c_[0];
    case 1: return c_[1];
    case 2: return c_[2];
    case 4: return c_[3];
    case 5: return c_[4];
    default: return q33();
    }
}

Mat3 QTensor::matrix() const
{
    Mat3 m;
    m(0, 0) = c_[0];
    m(0, 1) = m(1, 0) = c_[1];
    m(0, 2) = m(2, 0) = c_[2];
    m(1, 1) = c_[3];
    m(1, 2) = m(2, 1) = c_[4];
    m(2, 2) = q33();
    return m;
}

QTensor& QTensor::operator+=(const QTensor& o)
{
    for (int i = 0; i < 5; ++i) c_[i] += o.c_[i];
    return *this;
}

QTensor& QTensor::operator-=(const QTensor& o)
{
    for (int i = 0; i < 5; ++i) c_[i] -= o.c_[i];
    return *this;
}

QTensor& QTensor::operator*=(double s)
{
    for (double& v : c_) v *= s;
    return *this;
}

QTensor operator+(QTensor a, const QTensor& b) { return a += b; }
QTensor operator-(QTensor a, const QTensor& b) { return a -= b; }
QTensor operator*(double s, QTensor a) { return a *= s; }

void require_unit(const Vec3& n, const char* what, double tol)
{
    double len = norm(n);
    if (!std::isfinite(len) || std::abs(len - 1.0) > tol) {
        std::ostringstream os;
        os << what << ": expected a unit vector, got length " << len;
        throw ValidationError(os.str());
    }
}

QTensor uniaxial(const UniaxialSpec& spec)
{
    if (!std::isfinite(spec.s)) throw ValidationError("uniaxial: non-finite order parameter");
    require_unit(spec.n, "uniaxial director");
    const Vec3& n = spec.n;
    double s = spec.s;
    return QTensor::from_components(s * (n[0] * n[0] - 1.0 / 3.0), s * n[0] * n[1], s * n[0] * n[2],
                                    s * (n[1] * n[1] - 1.0 / 3.0), s * n[1] * n[2]);
}

QTensor uniaxial(double s, const Vec3& n) { return uniaxial(UniaxialSpec{s, n}); }

double trace_power(const QTensor& q, int k)
{
    if (k < 1) throw ValidationError("trace_power: k must be >= 1");
    if (k == 1) return 0.0;
    Mat3 m = q.matrix();
    Mat3 m2 = m * m;
    double t2 = m2.trace();
    if (k == 2) return t2;
    double t3 = frobenius_inner(m2, m);  // m symmetric, so <m2, m> = tr(m^3)
    if (k == 3) return t3;
    double t4 = frobenius_inner(m2, m2);
    if (k == 4) return t4;
    // tr(Q^j) = t2/2 tr(Q^{j-2}) + t3/3 tr(Q^{j-3})
    std::array<double, 3> w{t2, t3, t4};  // tr Q^{j-3}, tr Q^{j-2}, tr Q^{j-1}
    for (int j = 5; j <= k; ++j) {
        double next = 0.5 * t2 * w[1] + t3 / 3.0 * w[0];
        w = {w[1], w[2], next};
    }
    return w[2];
}

std::array<double, 3> eigenvalues(const QTensor& q)
{
    double j2 = 0.5 * trace_power(q, 2);
    if (j2 <= 0.0) return {0.0, 0.0, 0.0};
    double j3 = trace_power(q, 3) / 3.0;  // det Q for traceless Q
    double r = std::sqrt(j2 / 3.0);
    double arg = 0.5 * j3 / (r * r * r);
    arg = std::clamp(arg, -1.0, 1.0);
    double theta = std::acos(arg) / 3.0;
    constexpr double tp = 2.0 * std::numbers::pi / 3.0;
    std::array<double, 3> lam{2.0 * r * std::cos(theta), 2.0 * r * std::cos(theta + 2.0 * tp),
                              2.0 * r * std::cos(theta + tp)};
    std::sort(lam.begin(), lam.end(), std::greater<>());
    return lam;
}

double frobenius(const QTensor& q) { return std::sqrt(std::max(0.0, trace_power(q, 2))); }

double contract(const QTensor& a, const QTensor& b)
{
    const Comp5& x = a.components();
    const Comp5& y = b.components();
    return x[0] * y[0] + x[3] * y[3] + a.q33() * b.q33() + 2.0 * (x[1] * y[1] + x[2] * y[2] + x[4] * y[4]);
}

Comp5 reduce_matrix_derivative(const Mat3& g)
{
    return {g(0, 0) - g(2, 2), g(0, 1) + g(1, 0), g(0, 2) + g(2, 0), g(1, 1) - g(2, 2), g(1, 2) + g(2, 1)};
}

}  // namespace nlat
