#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace nlat {

struct GaussRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;  // sum to 2
};

// Gauss-Legendre rule with n points, cached per n.
const GaussRule& gauss_legendre(int n);

// Deterministic pairwise summation.
double pairwise_sum(std::span<const double> v);

// Fixed block size for parallel reductions. Results do not depend on the thread count.
inline constexpr std::size_t kReduceBlock = 2048;

void set_thread_count(int n);
int thread_count();

// Runs fn(begin, end) over fixed blocks of [0, n), possibly on several threads.
void for_blocks(std::size_t n, std::size_t block, const std::function<void(std::size_t, std::size_t)>& fn);

// Sum of term(i) for i in [0, n): sequential within each block, pairwise across blocks.
double reduce_sum(std::size_t n, const std::function<double(std::size_t)>& term);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // root-mean-square residual in log space
};

// Least-squares fit of log(y) against log(x).
LinearFit fit_loglog(std::span<const double> x, std::span<const double> y);

}  // namespace nlat
