#include "nlat/geometry.hpp"

#include "nlat/error.hpp"

#include <algorithm>
#include <sstream>

namespace nlat {

const char* axis_name(Axis a)
{
    switch (a) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    case Axis::Z: return "z";
    }
    return "?";
}

double Box::surface_area() const
{
    return 2.0 * (extent(0) * extent(1) + extent(1) * extent(2) + extent(0) * extent(2));
}

Vec3 Box::center() const
{
    return {0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])};
}

bool Box::contains(const Vec3& x, double tol) const
{
    for (int k = 0; k < 3; ++k) {
        if (x[k] < lo[k] - tol || x[k] > hi[k] + tol) return false;
    }
    return true;
}

double Box::boundary_distance(const Vec3& x) const
{
    double d = x[0] - lo[0];
    for (int k = 0; k < 3; ++k) {
        d = std::min({d, x[k] - lo[k], hi[k] - x[k]});
    }
    return d;
}

void Box::validate() const
{
    for (int k = 0; k < 3; ++k) {
        if (!std::isfinite(lo[k]) || !std::isfinite(hi[k]) || !(hi[k] > lo[k])) {
            std::ostringstream os;
            os << "domain: axis " << k << " has empty or non-finite extent [" << lo[k] << ", " << hi[k]
               << "]";
            throw ValidationError(os.str());
        }
    }
}

Mat3 Mat3::identity()
{
    Mat3 m;
    m(0, 0) = m(1, 1) = m(2, 2) = 1.0;
    return m;
}

Mat3 Mat3::transpose() const
{
    Mat3 t;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) t(i, j) = (*this)(j, i);
    return t;
}

Vec3 Mat3::apply(const Vec3& v) const
{
    Vec3 r{};
    for (int i = 0; i < 3; ++i) r[i] = a[3 * i] * v[0] + a[3 * i + 1] * v[1] + a[3 * i + 2] * v[2];
    return r;
}

Mat3 operator*(const Mat3& x, const Mat3& y)
{
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = x(i, 0) * y(0, j) + x(i, 1) * y(1, j) + x(i, 2) * y(2, j);
    return r;
}

Mat3 operator+(const Mat3& x, const Mat3& y)
{
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.a[i] = x.a[i] + y.a[i];
    return r;
}

Mat3 operator-(const Mat3& x, const Mat3& y)
{
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.a[i] = x.a[i] - y.a[i];
    return r;
}

Mat3 operator*(double s, const Mat3& x)
{
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.a[i] = s * x.a[i];
    return r;
}

double frobenius_inner(const Mat3& x, const Mat3& y)
{
    double s = 0.0;
    for (int i = 0; i < 9; ++i) s += x.a[i] * y.a[i];
    return s;
}

}  // namespace nlat
