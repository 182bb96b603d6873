#include "nlat/error.hpp"
#include "nlat/qtensor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace nlat;

namespace {

QTensor random_q(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return QTensor::from_components(u(rng), u(rng), u(rng), u(rng), u(rng));
}

}  // namespace

TEST(QTensor, UniaxialTraces)
{
    QTensor q = uniaxial(1.0, {1.0, 0.0, 0.0});
    EXPECT_NEAR(trace_power(q, 1), 0.0, 1e-15);
    EXPECT_NEAR(trace_power(q, 2), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(trace_power(q, 3), 2.0 / 9.0, 1e-15);
    EXPECT_NEAR(trace_power(q, 4), 2.0 / 9.0, 1e-15);
    EXPECT_NEAR(frobenius(q), std::sqrt(2.0 / 3.0), 1e-15);
    auto ev = eigenvalues(q);
    EXPECT_NEAR(ev[0], 2.0 / 3.0, 1e-14);
    EXPECT_NEAR(ev[1], -1.0 / 3.0, 1e-14);
    EXPECT_NEAR(ev[2], -1.0 / 3.0, 1e-14);
}

TEST(QTensor, TracelessAndSymmetric)
{
    std::mt19937_64 rng(7);
    for (int t = 0; t < 100; ++t) {
        QTensor q = random_q(rng);
        Mat3 m = q.matrix();
        EXPECT_NEAR(m(0, 0) + m(1, 1) + m(2, 2), 0.0, 1e-15);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) EXPECT_EQ(m(i, j), m(j, i));
    }
}

TEST(QTensor, CayleyHamiltonQuartic)
{
    std::mt19937_64 rng(11);
    for (int t = 0; t < 200; ++t) {
        QTensor q = random_q(rng);
        double t2 = trace_power(q, 2);
        EXPECT_NEAR(2.0 * trace_power(q, 4), t2 * t2, 1e-12 * (1.0 + t2 * t2));
    }
}

TEST(QTensor, EigenvaluesMatchTraces)
{
    std::mt19937_64 rng(3);
    for (int t = 0; t < 100; ++t) {
        QTensor q = random_q(rng);
        auto ev = eigenvalues(q);
        EXPECT_GE(ev[0], ev[1]);
        EXPECT_GE(ev[1], ev[2]);
        for (int k = 2; k <= 3; ++k) {
            double s = std::pow(ev[0], k) + std::pow(ev[1], k) + std::pow(ev[2], k);
            EXPECT_NEAR(s, trace_power(q, k), 1e-12);
        }
    }
}

TEST(QTensor, ContractIsFrobeniusInner)
{
    std::mt19937_64 rng(5);
    QTensor a = random_q(rng), b = random_q(rng);
    EXPECT_NEAR(contract(a, b), frobenius_inner(a.matrix(), b.matrix()), 1e-14);
    EXPECT_NEAR(contract(a, a), frobenius(a) * frobenius(a), 1e-14);
}

TEST(QTensor, Arithmetic)
{
    QTensor a = QTensor::from_components(1, 2, 3, 4, 5);
    QTensor b = QTensor::from_components(0.5, 0.5, 0.5, 0.5, 0.5);
    QTensor c = a - b + 2.0 * b;
    EXPECT_DOUBLE_EQ(c.q11(), 1.5);
    EXPECT_DOUBLE_EQ(c.q33(), -6.0);
}

TEST(QTensor, FromMatrixRejectsBadInput)
{
    Mat3 m;
    m(0, 0) = 1.0;
    EXPECT_THROW(QTensor::from_matrix(m), ValidationError);
    m(1, 1) = -1.0;
    m(0, 1) = 0.3;
    EXPECT_THROW(QTensor::from_matrix(m), ValidationError);
    m(1, 0) = 0.3;
    QTensor q = QTensor::from_matrix(m);
    EXPECT_DOUBLE_EQ(q.q12(), 0.3);
}

TEST(QTensor, RequireUnit)
{
    EXPECT_THROW(require_unit({1.0, 1.0, 0.0}, "n"), ValidationError);
    EXPECT_NO_THROW(require_unit({0.0, 0.6, 0.8}, "n"));
    EXPECT_THROW(uniaxial(0.5, {0.0, 0.0, 2.0}), ValidationError);
}

TEST(QTensor, ReduceMatrixDerivative)
{
    // d tr(Q^2)/dq via the chain rule against finite differences
    std::mt19937_64 rng(9);
    QTensor q = random_q(rng);
    Mat3 g = 2.0 * q.matrix();
    Comp5 d = reduce_matrix_derivative(g);
    for (int c = 0; c < 5; ++c) {
        QTensor qp = q, qm = q;
        qp.components()[c] += 1e-6;
        qm.components()[c] -= 1e-6;
        double fd = (trace_power(qp, 2) - trace_power(qm, 2)) / 2e-6;
        EXPECT_NEAR(d[c], fd, 1e-8);
    }
}
