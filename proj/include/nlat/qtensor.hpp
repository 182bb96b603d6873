#pragma once

#include "nlat/geometry.hpp"

#include <array>

namespace nlat {

// Five stored components in the order (q11, q12, q13, q22, q23).
using Comp5 = std::array<double, 5>;

// Symmetric traceless 3x3 tensor. q33 is derived as -q11 - q22.
class QTensor {
public:
    constexpr QTensor() = default;

    static QTensor from_components(double q11, double q12, double q13, double q22, double q23);
    static QTensor from_array(const Comp5& c);
    // Reads the upper triangle of a symmetric traceless matrix; rejects asymmetric or traced input.
    static QTensor from_matrix(const Mat3& m, double tol = 1e-10);

    double q11() const { return c_[0]; }
    double q12() const { return c_[1]; }
    double q13() const { return c_[2]; }
    double q22() const { return c_[3]; }
    double q23() const { return c_[4]; }
    double q33() const { return -c_[0] - c_[3]; }

    double operator()(int i, int j) const;
    const Comp5& components() const { return c_; }
    Comp5& components() { return c_; }
    Mat3 matrix() const;

    QTensor& operator+=(const QTensor& o);
    QTensor& operator-=(const QTensor& o);
    QTensor& operator*=(double s);

private:
    Comp5 c_{};
};

QTensor operator+(QTensor a, const QTensor& b);
QTensor operator-(QTensor a, const QTensor& b);
QTensor operator*(double s, QTensor a);

struct UniaxialSpec {
    double s = 0.0;
    Vec3 n{0.0, 0.0, 1.0};
};

QTensor uniaxial(const UniaxialSpec& spec);
QTensor uniaxial(double s, const Vec3& n);

double trace_power(const QTensor& q, int k);
// Sorted descending.
std::array<double, 3> eigenvalues(const QTensor& q);
double frobenius(const QTensor& q);
// tr(PQ)
double contract(const QTensor& a, const QTensor& b);

// Chain rule from a derivative with respect to the nine matrix entries to the five stored components.
Comp5 reduce_matrix_derivative(const Mat3& g);

// Throws ValidationError if |n| deviates from 1 by more than tol.
void require_unit(const Vec3& n, const char* what, double tol = 1e-12);

}  // namespace nlat
