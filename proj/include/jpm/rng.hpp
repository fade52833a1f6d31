#pragma once

// Deterministic random streams. std::mt19937_64 supplies raw bits; all
// variate transforms are implemented here so that sequences are identical
// across platforms and standard libraries.

#include <cstdint>
#include <random>
#include <vector>

namespace jpm {

/// splitmix64 step; used to whiten seeds before feeding the engine.
std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent stream seed from a master seed and a stream index.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01();

    /// Uniform on [lo, hi).
    double uniform_real(double lo, double hi);

    /// Uniform integer in [0, n); n must be positive. Rejection sampled,
    /// so the result is unbiased for every n.
    std::int64_t uniform_below(std::int64_t n);

    bool bernoulli(double p);

    /// Polar Box-Muller, one variate per call (no cached spare).
    double normal(double mean = 0.0, double stddev = 1.0);

    /// Inverse-CDF exponential with the given scale (mean).
    double exponential(double scale);

    /// Marsaglia-Tsang for shape >= 1; boosted for shape < 1.
    double gamma(double shape, double scale);

    /// Ratio of two gammas; Beta(1/2, 1/2) uses the arcsine inverse CDF.
    double beta(double a, double b);

    double triangular(double lo, double mode, double hi);

    /// Standard Pareto with x_m = 1: inverse CDF u^(-1/alpha).
    double pareto(double alpha);

    double logistic(double location, double scale);

    double cauchy(double location, double scale);

    /// Weibull with the given shape and unit scale.
    double weibull(double shape);

    /// Flat Dirichlet over n categories via normalized exponentials.
    std::vector<double> dirichlet_flat(int n);

    /// Index drawn from an (unnormalized) nonnegative weight vector.
    int categorical(const std::vector<double>& weights);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace jpm
