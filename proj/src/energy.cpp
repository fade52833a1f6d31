#include "jpm/energy.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>

#include "jpm/sampling.hpp"

namespace jpm {

namespace {

double logaddexp(double a, double b) {
    if (a < b) std::swap(a, b);
    if (b == -std::numeric_limits<double>::infinity()) return a;
    return a + std::log1p(std::exp(b - a));
}

/// log(1 / (1 + exp(-s))), stable for large |s|.
double log_sigmoid(double s) {
    if (s < 0.0) return s - std::log1p(std::exp(s));
    return -std::log1p(std::exp(-s));
}

double sigmoid(double s) {
    if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
    const double e = std::exp(s);
    return e / (1.0 + e);
}

struct ConcaveObjective {
    std::function<double(const std::vector<double>&)> value;
    std::function<std::vector<double>(const std::vector<double>&)> gradient;
    // full negative Hessian (positive semidefinite), row-major n*n
    std::function<std::vector<double>(const std::vector<double>&)> neg_hessian;
};

/// In-place Cholesky solve of the symmetric positive-definite system
/// a x = b (a row-major n*n, both overwritten); returns false if a pivot
/// collapses.
bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            if (i == j) {
                if (s <= 0.0) return false;
                a[i * n + i] = std::sqrt(s);
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
        b[i] = s / a[i * n + i];
    }
    return true;
}

/// Projected Newton ascent with backtracking (Armijo) line search on the
/// box [-cap, cap]^n. Each iteration solves the ridge-damped Newton system
/// on the free coordinates (those not pinned at the box with an outward
/// gradient); if the Newton step stalls, one diagonally-preconditioned
/// gradient step is tried instead. The full solve matters: saturating
/// chains (items whose relative order is never contradicted) make the
/// Hessian ill-conditioned in coupled directions that a diagonal
/// preconditioner cannot see, and first-order steps then need millions of
/// iterations to push the gradient below tolerance. Convergence is judged
/// on the raw projected gradient. The likelihood gradients sum to zero, so
/// iterates stay on the sum-zero gauge manifold except where the box clips
/// them.
std::vector<double> maximize_concave(int n, const ConcaveObjective& obj,
                                     const FitOptions& opts, double cap,
                                     const char* label) {
    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    if (n == 0) return x;
    double fx = obj.value(x);
    std::vector<double> g = obj.gradient(x);
    std::vector<double> pg(x.size()), dir(x.size()), cand(x.size());
    bool converged = false;

    auto project_gradient = [&]() {
        double norm = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double gi = g[i];
            if (x[i] >= cap && gi > 0.0) gi = 0.0;
            if (x[i] <= -cap && gi < 0.0) gi = 0.0;
            pg[i] = gi;
            norm = std::max(norm, std::abs(gi));
        }
        return norm;
    };

    // Backtracks cand = clip(x + t dir) until the Armijo test passes;
    // returns false when the step underflows without progress.
    auto line_search = [&]() {
        for (double t = 1.0; t >= 1e-14; t *= 0.5) {
            double predicted = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                double c = x[i] + t * dir[i];
                if (c > cap) c = cap;
                if (c < -cap) c = -cap;
                cand[i] = c;
                predicted += g[i] * (c - x[i]);
            }
            if (!(predicted > 0.0)) continue;
            const double fc = obj.value(cand);
            if (fc >= fx + 1e-4 * predicted) {
                x = cand;
                fx = fc;
                return true;
            }
        }
        return false;
    };

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        if (project_gradient() < opts.tol) {
            converged = true;
            break;
        }
        const std::vector<double> hess = obj.neg_hessian(x);
        std::vector<std::size_t> free_idx;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (pg[i] != 0.0 || (x[i] < cap && x[i] > -cap)) free_idx.push_back(i);
        const std::size_t nf = free_idx.size();
        std::vector<double> a(nf * nf), b(nf);
        double diag_max = 1.0;
        for (std::size_t r = 0; r < nf; ++r)
            diag_max = std::max(diag_max, hess[free_idx[r] * x.size() + free_idx[r]]);
        for (std::size_t r = 0; r < nf; ++r) {
            b[r] = g[free_idx[r]];
            for (std::size_t c = 0; c < nf; ++c)
                a[r * nf + c] = hess[free_idx[r] * x.size() + free_idx[c]];
            a[r * nf + r] += 1e-8 * diag_max;
        }
        bool advanced = false;
        if (nf > 0 && cholesky_solve(a, b, nf)) {
            std::fill(dir.begin(), dir.end(), 0.0);
            for (std::size_t r = 0; r < nf; ++r) dir[free_idx[r]] = b[r];
            advanced = line_search();
        }
        if (!advanced) {
            for (std::size_t i = 0; i < x.size(); ++i)
                dir[i] = pg[i] / (hess[i * x.size() + i] + 1e-10);
            advanced = line_search();
        }
        if (!advanced) break;
        g = obj.gradient(x);
    }
    if (!converged && project_gradient() < opts.tol) converged = true;
    if (!converged)
        throw FitError(std::string(label) + ": no convergence within iteration budget", x);

    // Re-center onto the sum-zero gauge when the box allows it.
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    bool fits = true;
    for (double v : x)
        if (std::abs(v - mean) > cap + 1e-12) fits = false;
    if (fits)
        for (auto& v : x) v -= mean;
    return x;
}

}  // namespace

PairwiseModel fit_pairwise(const RankingProblem& problem) {
    problem.validate();
    const int m = problem.universe_size();
    PairwiseModel model;
    model.m = m;
    model.weights.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0);
    for (const auto& partial : problem.partials) {
        for (std::size_t a = 0; a < partial.items.size(); ++a) {
            for (std::size_t b = a + 1; b < partial.items.size(); ++b) {
                const int i = partial.items[a];
                const int j = partial.items[b];
                model.weights[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                              static_cast<std::size_t>(j)] += partial.weight;
                model.weights[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) +
                              static_cast<std::size_t>(i)] -= partial.weight;
            }
        }
    }
    return model;
}

double energy_pairwise(const PairwiseModel& model, const AggregateRanking& sigma) {
    if (sigma.size() != model.m)
        throw ConfigError("energy_pairwise: ranking size does not match model");
    double e = 0.0;
    const auto& order = sigma.order();
    for (std::size_t p = 0; p < order.size(); ++p)
        for (std::size_t q = p + 1; q < order.size(); ++q)
            e -= model.weight(order[p], order[q]);
    return e;
}

std::vector<long long> pair_counts(const RankingProblem& problem) {
    const int m = problem.universe_size();
    std::vector<long long> counts(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0);
    for (const auto& partial : problem.partials) {
        for (std::size_t a = 0; a < partial.items.size(); ++a)
            for (std::size_t b = a + 1; b < partial.items.size(); ++b)
                ++counts[static_cast<std::size_t>(partial.items[a]) * static_cast<std::size_t>(m) +
                         static_cast<std::size_t>(partial.items[b])];
    }
    return counts;
}

double bt_log_likelihood(const std::vector<long long>& counts, const std::vector<double>& theta) {
    const std::size_t m = theta.size();
    double ll = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const long long cij = counts[i * m + j];
            const long long cji = counts[j * m + i];
            if (cij == 0 && cji == 0) continue;
            const double s = theta[i] - theta[j];
            ll += static_cast<double>(cij) * log_sigmoid(s) +
                  static_cast<double>(cji) * log_sigmoid(-s);
        }
    }
    return ll;
}

std::vector<double> bt_gradient(const std::vector<long long>& counts, const std::vector<double>& theta) {
    const std::size_t m = theta.size();
    std::vector<double> g(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const long long cij = counts[i * m + j];
            const long long cji = counts[j * m + i];
            if (cij == 0 && cji == 0) continue;
            const double p = sigmoid(theta[i] - theta[j]);  // P(i before j)
            const double d = static_cast<double>(cij) * (1.0 - p) - static_cast<double>(cji) * p;
            g[i] += d;
            g[j] -= d;
        }
    }
    return g;
}

namespace {

std::vector<double> bt_neg_hessian(const std::vector<long long>& counts,
                                   const std::vector<double>& theta) {
    const std::size_t m = theta.size();
    std::vector<double> h(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const long long n = counts[i * m + j] + counts[j * m + i];
            if (n == 0) continue;
            const double p = sigmoid(theta[i] - theta[j]);
            const double w = static_cast<double>(n) * p * (1.0 - p);
            h[i * m + i] += w;
            h[j * m + j] += w;
            h[i * m + j] -= w;
            h[j * m + i] -= w;
        }
    }
    return h;
}

std::vector<double> pl_neg_hessian(const RankingProblem& problem,
                                   const std::vector<double>& alpha) {
    const std::size_t m = alpha.size();
    std::vector<double> h(m * m, 0.0);
    std::vector<double> p;
    for (const auto& partial : problem.partials) {
        const std::size_t n = partial.items.size();
        std::vector<double> lse(n);
        double suffix = -std::numeric_limits<double>::infinity();
        for (std::size_t t = n; t-- > 0;) {
            suffix = logaddexp(suffix, alpha[static_cast<std::size_t>(partial.items[t])]);
            lse[t] = suffix;
        }
        // Each choice step contributes diag(p) - p p^T over the remaining items.
        for (std::size_t t = 0; t + 1 < n; ++t) {
            p.assign(n - t, 0.0);
            for (std::size_t j = t; j < n; ++j)
                p[j - t] = std::exp(alpha[static_cast<std::size_t>(partial.items[j])] - lse[t]);
            for (std::size_t j = t; j < n; ++j) {
                const std::size_t ij = static_cast<std::size_t>(partial.items[j]);
                h[ij * m + ij] += p[j - t];
                for (std::size_t k = t; k < n; ++k) {
                    const std::size_t ik = static_cast<std::size_t>(partial.items[k]);
                    h[ij * m + ik] -= p[j - t] * p[k - t];
                }
            }
        }
    }
    return h;
}

}  // namespace

BradleyTerryModel fit_bradley_terry(const RankingProblem& problem, const FitOptions& opts) {
    problem.validate();
    const int m = problem.universe_size();
    BradleyTerryModel model;
    model.counts = pair_counts(problem);
    ConcaveObjective obj{
        [&model](const std::vector<double>& th) { return bt_log_likelihood(model.counts, th); },
        [&model](const std::vector<double>& th) { return bt_gradient(model.counts, th); },
        [&model](const std::vector<double>& th) { return bt_neg_hessian(model.counts, th); }};
    model.strengths = maximize_concave(m, obj, opts, kStrengthCap, "fit_bradley_terry");
    return model;
}

double bradley_terry_prob(const BradleyTerryModel& model, int i, int j) {
    return sigmoid(model.strengths[static_cast<std::size_t>(i)] -
                   model.strengths[static_cast<std::size_t>(j)]);
}

double energy_bradley_terry(const BradleyTerryModel& model, const AggregateRanking& sigma) {
    if (sigma.size() != model.size())
        throw ConfigError("energy_bradley_terry: ranking size does not match model");
    double e = 0.0;
    const auto& order = sigma.order();
    for (std::size_t p = 0; p < order.size(); ++p)
        for (std::size_t q = p + 1; q < order.size(); ++q)
            e -= log_sigmoid(model.strengths[static_cast<std::size_t>(order[p])] -
                             model.strengths[static_cast<std::size_t>(order[q])]);
    return e;
}

double pl_log_likelihood(const RankingProblem& problem, const std::vector<double>& alpha) {
    double ll = 0.0;
    for (const auto& partial : problem.partials) {
        const std::size_t n = partial.items.size();
        double suffix = -std::numeric_limits<double>::infinity();
        std::vector<double> lse(n);
        for (std::size_t t = n; t-- > 0;) {
            suffix = logaddexp(suffix, alpha[static_cast<std::size_t>(partial.items[t])]);
            lse[t] = suffix;
        }
        for (std::size_t t = 0; t < n; ++t)
            ll += alpha[static_cast<std::size_t>(partial.items[t])] - lse[t];
    }
    return ll;
}

std::vector<double> pl_gradient(const RankingProblem& problem, const std::vector<double>& alpha) {
    std::vector<double> g(alpha.size(), 0.0);
    for (const auto& partial : problem.partials) {
        const std::size_t n = partial.items.size();
        std::vector<double> lse(n);
        double suffix = -std::numeric_limits<double>::infinity();
        for (std::size_t t = n; t-- > 0;) {
            suffix = logaddexp(suffix, alpha[static_cast<std::size_t>(partial.items[t])]);
            lse[t] = suffix;
        }
        for (std::size_t t = 0; t < n; ++t) {
            g[static_cast<std::size_t>(partial.items[t])] += 1.0;
            // softmax of the remaining items at step t
            for (std::size_t j = t; j < n; ++j)
                g[static_cast<std::size_t>(partial.items[j])] -=
                    std::exp(alpha[static_cast<std::size_t>(partial.items[j])] - lse[t]);
        }
    }
    return g;
}

PlackettLuceModel fit_plackett_luce(const RankingProblem& problem, const FitOptions& opts) {
    problem.validate();
    const int m = problem.universe_size();
    ConcaveObjective obj{
        [&problem](const std::vector<double>& a) { return pl_log_likelihood(problem, a); },
        [&problem](const std::vector<double>& a) { return pl_gradient(problem, a); },
        [&problem](const std::vector<double>& a) { return pl_neg_hessian(problem, a); }};
    PlackettLuceModel model;
    model.scores = maximize_concave(m, obj, opts, kStrengthCap, "fit_plackett_luce");
    return model;
}

double energy_plackett_luce(const PlackettLuceModel& model, const AggregateRanking& sigma) {
    if (sigma.size() != model.size())
        throw ConfigError("energy_plackett_luce: ranking size does not match model");
    const auto& order = sigma.order();
    const std::size_t m = order.size();
    double e = 0.0;
    double suffix = model.scores[static_cast<std::size_t>(order[m - 1])];
    for (std::size_t t = m - 1; t-- > 0;) {
        const double a = model.scores[static_cast<std::size_t>(order[t])];
        suffix = logaddexp(a, suffix);
        e += suffix - a;
    }
    return e;
}

MallowsModel fit_mallows_bt_informed(const RankingProblem& problem, double dispersion,
                                     long mcmc_iters, RngStream& rng, const FitOptions& opts) {
    if (!(dispersion > 0.0))
        throw ConfigError("fit_mallows_bt_informed: dispersion must be positive");
    const BradleyTerryModel bt = fit_bradley_terry(problem, opts);
    MhConfig cfg;
    cfg.iterations = mcmc_iters;
    cfg.return_mode = ReturnMode::Best;
    const SampleTrace trace = mh_minimize(
        [&bt](const AggregateRanking& s) { return energy_bradley_terry(bt, s); },
        problem.universe_size(), cfg, rng);
    MallowsModel model;
    model.central = trace.best;
    model.dispersion = dispersion;
    return model;
}

double energy_mallows(const MallowsModel& model, const AggregateRanking& sigma) {
    return model.dispersion * kendall_tau_normalized(sigma, model.central);
}

double energy_of(const EnergyModel& model, const AggregateRanking& sigma) {
    return std::visit(
        [&sigma](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, PairwiseModel>) return energy_pairwise(m, sigma);
            else if constexpr (std::is_same_v<T, BradleyTerryModel>) return energy_bradley_terry(m, sigma);
            else if constexpr (std::is_same_v<T, PlackettLuceModel>) return energy_plackett_luce(m, sigma);
            else return energy_mallows(m, sigma);
        },
        model);
}

}  // namespace jpm
