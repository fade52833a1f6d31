#include "jpm/rng.hpp"

#include <cmath>
#include <limits>

#include "jpm/error.hpp"

namespace jpm {

namespace {
constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;
constexpr double kPi = 3.14159265358979323846;
}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
    x += kGoldenGamma;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return master ^ (kGoldenGamma * index);
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

double RngStream::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_real(double lo, double hi) {
    if (!(lo < hi)) throw ConfigError("uniform_real: empty interval");
    return lo + (hi - lo) * uniform01();
}

std::int64_t RngStream::uniform_below(std::int64_t n) {
    if (n <= 0) throw ConfigError("uniform_below: n must be positive");
    const auto un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % un;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return static_cast<std::int64_t>(x % un);
}

bool RngStream::bernoulli(double p) {
    if (p < 0.0 || p > 1.0) throw ConfigError("bernoulli: p outside [0, 1]");
    return uniform01() < p;
}

double RngStream::normal(double mean, double stddev) {
    double u, v, s;
    do {
        u = 2.0 * uniform01() - 1.0;
        v = 2.0 * uniform01() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    return mean + stddev * u * std::sqrt(-2.0 * std::log(s) / s);
}

double RngStream::exponential(double scale) {
    if (!(scale > 0.0)) throw ConfigError("exponential: scale must be positive");
    double u;
    do {
        u = uniform01();
    } while (u == 0.0);
    return -scale * std::log(u);
}

double RngStream::gamma(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0))
        throw ConfigError("gamma: shape and scale must be positive");
    if (shape < 1.0) {
        double u;
        do {
            u = uniform01();
        } while (u == 0.0);
        return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / (3.0 * std::sqrt(d));
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform01();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
            return d * v * scale;
    }
}

double RngStream::beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("beta: parameters must be positive");
    if (a == 0.5 && b == 0.5) {
        const double s = std::sin(0.5 * kPi * uniform01());
        return s * s;
    }
    const double x = gamma(a, 1.0);
    const double y = gamma(b, 1.0);
    return x / (x + y);
}

double RngStream::triangular(double lo, double mode, double hi) {
    if (!(lo <= mode && mode <= hi && lo < hi))
        throw ConfigError("triangular: require lo <= mode <= hi with lo < hi");
    const double u = uniform01();
    const double fc = (mode - lo) / (hi - lo);
    if (u < fc) return lo + std::sqrt(u * (hi - lo) * (mode - lo));
    return hi - std::sqrt((1.0 - u) * (hi - lo) * (hi - mode));
}

double RngStream::pareto(double alpha) {
    if (!(alpha > 0.0)) throw ConfigError("pareto: alpha must be positive");
    double u;
    do {
        u = uniform01();
    } while (u == 0.0);
    return std::pow(u, -1.0 / alpha);
}

double RngStream::logistic(double location, double scale) {
    if (!(scale > 0.0)) throw ConfigError("logistic: scale must be positive");
    double u;
    do {
        u = uniform01();
    } while (u == 0.0 || u == 1.0);
    return location + scale * std::log(u / (1.0 - u));
}

double RngStream::cauchy(double location, double scale) {
    if (!(scale > 0.0)) throw ConfigError("cauchy: scale must be positive");
    double u;
    do {
        u = uniform01();
    } while (u == 0.0);
    return location + scale * std::tan(kPi * (u - 0.5));
}

double RngStream::weibull(double shape) {
    if (!(shape > 0.0)) throw ConfigError("weibull: shape must be positive");
    double u;
    do {
        u = uniform01();
    } while (u == 0.0);
    return std::pow(-std::log(u), 1.0 / shape);
}

std::vector<double> RngStream::dirichlet_flat(int n) {
    if (n <= 0) throw ConfigError("dirichlet_flat: n must be positive");
    std::vector<double> w(static_cast<std::size_t>(n));
    double total = 0.0;
    for (auto& x : w) {
        x = exponential(1.0);
        total += x;
    }
    for (auto& x : w) x /= total;
    return w;
}

int RngStream::categorical(const std::vector<double>& weights) {
    if (weights.empty()) throw ConfigError("categorical: empty weight vector");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w))
            throw ConfigError("categorical: weights must be finite and nonnegative");
        total += w;
    }
    if (!(total > 0.0)) throw ConfigError("categorical: weights sum to zero");
    const double u = uniform01() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size() - 1);
}

}  // namespace jpm
