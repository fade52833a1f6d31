#pragma once

// Event-based-model data likelihood and participant staging. A participant
// at stage k has the biomarkers in the first k positions of the progression
// ranking in their diseased state (theta distribution) and the rest healthy
// (phi distribution); the stage is marginalized under a uniform prior.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "jpm/ranking.hpp"
#include "jpm/sampling.hpp"

namespace jpm {

struct BiomarkerDist {
    double theta_mean = 0.0;
    double theta_std = 1.0;
    double phi_mean = 0.0;
    double phi_std = 1.0;

    void validate() const;
};

struct Participant {
    std::string id;
    bool diseased = false;
    std::optional<double> stage;   // ground truth, synthetic cohorts only
    std::vector<double> values;    // aligned with Cohort::biomarker_ids
};

struct Cohort {
    std::vector<Participant> participants;
    std::vector<int> biomarker_ids;
    std::vector<std::string> biomarker_names;  // aligned with biomarker_ids

    int size() const { return static_cast<int>(biomarker_ids.size()); }
    void validate() const;
};

struct StagePosterior {
    std::vector<std::vector<double>> probs;  // per participant, stages 0..m

    double point_estimate(std::size_t j) const;  // posterior mean stage
    std::size_t size() const { return probs.size(); }
};

/// Precomputes per-participant, per-biomarker Gaussian log-densities so one
/// likelihood evaluation costs O(J * m) additions. Log-densities are floored
/// at log(1e-300).
class EbmEvaluator {
public:
    EbmEvaluator(const Cohort& cohort, const std::vector<BiomarkerDist>& dists);

    /// sigma is over column indices 0..m-1.
    double log_likelihood(const AggregateRanking& sigma) const;
    StagePosterior posteriors(const AggregateRanking& sigma) const;

    int columns() const { return m_; }

private:
    int m_ = 0;
    std::size_t rows_ = 0;
    std::vector<double> theta_lp_;  // rows_ x m_
    std::vector<double> phi_lp_;    // rows_ x m_
    std::vector<double> phi_sum_;   // per participant
    std::vector<std::string> participant_ids_;

    std::vector<double> stage_log_liks(std::size_t j, const std::vector<int>& order) const;
};

/// Data log-likelihood of the cohort given a progression over the cohort's
/// biomarker item ids.
double ebm_log_likelihood(const Cohort& cohort, const AggregateRanking& sigma,
                          const std::vector<BiomarkerDist>& dists);

StagePosterior stage_posteriors(const Cohort& cohort, const AggregateRanking& sigma,
                                const std::vector<BiomarkerDist>& dists);

/// Mean absolute error of posterior-mean stages against ground truth.
double staging_mae(const StagePosterior& posteriors, const std::vector<double>& truth);

/// Single-disease pipeline: moment-estimate theta/phi from the diseased /
/// healthy labels, search orderings by likelihood (MH), refine the moments
/// with MAP-stage assignments, then search again. Returns the best ordering
/// (as the cohort's item ids) and the refined distributions.
std::pair<PartialRanking, std::vector<BiomarkerDist>> estimate_partial_ranking(
    const Cohort& cohort, const MhConfig& cfg);

}  // namespace jpm
