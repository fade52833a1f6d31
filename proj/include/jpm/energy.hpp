#pragma once

// Energy functions over aggregate rankings and the maximum-likelihood fits
// that parameterize them from a set of partial rankings. Lower energy means
// a ranking is more consistent with the observed partial orders.

#include <variant>
#include <vector>

#include "jpm/error.hpp"
#include "jpm/ranking.hpp"
#include "jpm/rng.hpp"

namespace jpm {

/// Net pairwise preference weights: weight(i, j) > 0 favors i before j.
struct PairwiseModel {
    int m = 0;
    std::vector<double> weights;  // row-major m*m, zero diagonal

    double weight(int i, int j) const {
        return weights[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                       static_cast<std::size_t>(j)];
    }
};

struct BradleyTerryModel {
    std::vector<double> strengths;        // gauge: sums to 0
    std::vector<long long> counts;        // row-major m*m; counts[i*m+j] = #(i before j)

    int size() const { return static_cast<int>(strengths.size()); }
    long long count(int i, int j) const {
        return counts[static_cast<std::size_t>(i) * strengths.size() +
                      static_cast<std::size_t>(j)];
    }
};

struct PlackettLuceModel {
    std::vector<double> scores;  // gauge: sums to 0

    int size() const { return static_cast<int>(scores.size()); }
};

struct MallowsModel {
    AggregateRanking central;
    double dispersion = 1.0;
};

using EnergyModel =
    std::variant<PairwiseModel, BradleyTerryModel, PlackettLuceModel, MallowsModel>;

/// Thrown when a likelihood fit fails to reach tolerance; carries the last
/// parameter iterate for diagnosis.
class FitError : public NumericalError {
public:
    FitError(const std::string& what, std::vector<double> last)
        : NumericalError(what), last_iterate(std::move(last)) {}
    std::vector<double> last_iterate;
};

struct FitOptions {
    double tol = 1e-6;      // max-norm of the (projected) gradient
    int max_iter = 10000;
};

/// Strength/score magnitude cap for degenerate comparison graphs (an item
/// that wins or loses every observed comparison has an unbounded MLE).
inline constexpr double kStrengthCap = 20.0;

PairwiseModel fit_pairwise(const RankingProblem& problem);
double energy_pairwise(const PairwiseModel& model, const AggregateRanking& sigma);

/// Pair precedence counts pooled over all partials: counts[i*m+j] = number
/// of partials ranking i before j (both present).
std::vector<long long> pair_counts(const RankingProblem& problem);

BradleyTerryModel fit_bradley_terry(const RankingProblem& problem,
                                    const FitOptions& opts = {});
double energy_bradley_terry(const BradleyTerryModel& model, const AggregateRanking& sigma);

/// P(i before j) under the fitted strengths.
double bradley_terry_prob(const BradleyTerryModel& model, int i, int j);

PlackettLuceModel fit_plackett_luce(const RankingProblem& problem,
                                    const FitOptions& opts = {});
double energy_plackett_luce(const PlackettLuceModel& model, const AggregateRanking& sigma);

/// Central ranking from a Metropolis-Hastings minimization of the fitted
/// Bradley-Terry energy; dispersion is stored as supplied, never estimated.
MallowsModel fit_mallows_bt_informed(const RankingProblem& problem, double dispersion,
                                     long mcmc_iters, RngStream& rng,
                                     const FitOptions& opts = {});
double energy_mallows(const MallowsModel& model, const AggregateRanking& sigma);

double energy_of(const EnergyModel& model, const AggregateRanking& sigma);

/// Log-likelihood of the problem's partials under Bradley-Terry strengths
/// (pair factorization) or Plackett-Luce scores (sequential choice).
double bt_log_likelihood(const std::vector<long long>& counts, const std::vector<double>& theta);
double pl_log_likelihood(const RankingProblem& problem, const std::vector<double>& alpha);

/// Gradients of the above, same gauge; exposed for derivative checks.
std::vector<double> bt_gradient(const std::vector<long long>& counts, const std::vector<double>& theta);
std::vector<double> pl_gradient(const RankingProblem& problem, const std::vector<double>& alpha);

}  // namespace jpm
