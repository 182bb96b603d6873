#pragma once

#include <array>
#include <cmath>
#include <string>

namespace nlat {

using Vec3 = std::array<double, 3>;

enum class Axis : int { X = 0, Y = 1, Z = 2 };

constexpr int index(Axis a) { return static_cast<int>(a); }
constexpr Axis axis_from_index(int i) { return static_cast<Axis>(i); }
const char* axis_name(Axis a);

inline Vec3 unit(Axis a, int sign = 1)
{
    Vec3 v{0.0, 0.0, 0.0};
    v[index(a)] = sign >= 0 ? 1.0 : -1.0;
    return v;
}

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

// Axis-aligned closed box [lo, hi].
struct Box {
    Vec3 lo{0.0, 0.0, 0.0};
    Vec3 hi{1.0, 1.0, 1.0};

    double extent(int k) const { return hi[k] - lo[k]; }
    double volume() const { return extent(0) * extent(1) * extent(2); }
    double surface_area() const;
    Vec3 center() const;
    bool contains(const Vec3& x, double tol = 0.0) const;
    // Distance from an interior point to the boundary.
    double boundary_distance(const Vec3& x) const;
    void validate() const;
};

// Small dense 3x3 matrix used for the trace algebra of Q-tensors.
struct Mat3 {
    std::array<double, 9> a{};

    double& operator()(int i, int j) { return a[3 * i + j]; }
    double operator()(int i, int j) const { return a[3 * i + j]; }

    static Mat3 identity();
    double trace() const { return a[0] + a[4] + a[8]; }
    Mat3 transpose() const;
    Vec3 apply(const Vec3& v) const;
};

Mat3 operator*(const Mat3& x, const Mat3& y);
Mat3 operator+(const Mat3& x, const Mat3& y);
Mat3 operator-(const Mat3& x, const Mat3& y);
Mat3 operator*(double s, const Mat3& x);
double frobenius_inner(const Mat3& x, const Mat3& y);

}  // namespace nlat
