#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace degen {

/// Pairwise summation; the result depends only on the order of the input.
inline double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 8) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    std::size_t half = x.size() / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

struct Estimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;

    /// |mean - target| within k standard errors (plus an absolute slack).
    bool agrees_with(double target, double k = 3.0, double slack = 0.0) const {
        return std::abs(mean - target) <= k * stderr_ + slack;
    }
};

inline Estimate mean_estimate(std::span<const double> x) {
    Estimate e;
    e.n = x.size();
    if (x.empty()) return e;
    e.mean = pairwise_sum(x) / static_cast<double>(x.size());
    if (x.size() > 1) {
        std::vector<double> sq(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) sq[i] = (x[i] - e.mean) * (x[i] - e.mean);
        double var = pairwise_sum(sq) / static_cast<double>(x.size() - 1);
        e.stderr_ = std::sqrt(var / static_cast<double>(x.size()));
    }
    return e;
}

/// Estimate of a probability from a 0/1 sample (binomial standard error).
inline Estimate fraction_estimate(std::size_t hits, std::size_t n) {
    Estimate e;
    e.n = n;
    if (n == 0) return e;
    double p = static_cast<double>(hits) / static_cast<double>(n);
    e.mean = p;
    e.stderr_ = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    return e;
}

}  // namespace degen
