#include "nlat/numerics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

using namespace nlat;

TEST(Numerics, GaussLegendreExactness)
{
    for (int n = 1; n <= 8; ++n) {
        const GaussRule& g = gauss_legendre(n);
        ASSERT_EQ(g.nodes.size(), static_cast<std::size_t>(n));
        for (int d = 0; d <= 2 * n - 1; ++d) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += g.weights[i] * std::pow(g.nodes[i], d);
            double exact = d % 2 ? 0.0 : 2.0 / (d + 1);
            EXPECT_NEAR(s, exact, 1e-14) << "n=" << n << " d=" << d;
        }
    }
}

TEST(Numerics, PairwiseSum)
{
    std::vector<double> v(10001, 0.1);
    EXPECT_NEAR(pairwise_sum(v), 1000.1, 1e-10);
    EXPECT_EQ(pairwise_sum(std::vector<double>{}), 0.0);
}

TEST(Numerics, ReduceSumIndependentOfThreads)
{
    auto term = [](std::size_t i) { return std::sin(0.001 * static_cast<double>(i)); };
    set_thread_count(1);
    double a = reduce_sum(50000, term);
    set_thread_count(3);
    double b = reduce_sum(50000, term);
    set_thread_count(1);
    EXPECT_EQ(a, b);
}

TEST(Numerics, FitLogLog)
{
    std::vector<double> x{0.5, 0.25, 0.125, 0.0625};
    std::vector<double> y;
    for (double e : x) y.push_back(3.0 * e * e);
    LinearFit f = fit_loglog(x, y);
    EXPECT_NEAR(f.slope, 2.0, 1e-13);
    EXPECT_NEAR(f.intercept, std::log(3.0), 1e-13);
    EXPECT_NEAR(f.residual, 0.0, 1e-13);
}
