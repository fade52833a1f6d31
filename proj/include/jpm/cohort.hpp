#pragma once

// Synthetic cohort generation: randomized partial-ranking problems over the
// biomarker registry, stage sampling under the nine experiment
// configurations, and per-biomarker value sampling (normal, non-normal
// mixtures, or sigmoid-shifted trajectories).

#include <cstdint>
#include <vector>

#include "jpm/ebm.hpp"
#include "jpm/ranking.hpp"
#include "jpm/registry.hpp"
#include "jpm/rng.hpp"
#include "jpm/sampling.hpp"

namespace jpm {

enum class StageDistribution {
    DirichletMultinomial,  // per-cohort flat Dirichlet weights over stages 1..m
    UniformDiscrete,       // uniform over 1..m
    ContinuousUniform,     // uniform real in (0, m]
    ContinuousBeta,        // m * Beta(5, 2)
};

enum class BiomarkerMode {
    Normal,           // state Gaussian
    NonNormal,        // registry mixture family for the state, noised + clipped
    SigmoidDiseased,  // diseased: sigmoid-shifted healthy Gaussian; healthy: plain
};

bool stage_distribution_is_continuous(StageDistribution dist);

struct ExperimentConfig {
    int experiment_id = 1;  // 1..9
    StageDistribution stage_distribution = StageDistribution::DirichletMultinomial;
    BiomarkerMode biomarker_mode = BiomarkerMode::Normal;
    int participants = 50;       // J
    double healthy_ratio = 0.5;  // R

    void validate() const;

    /// The nine canonical (stage distribution, biomarker mode) rows.
    static ExperimentConfig preset(int experiment_id, int participants, double healthy_ratio);
};

struct GenerationSpec {
    int min_partials = 2;
    int max_partials = 4;
    int min_length = 6;
    int max_length = 12;
    GenVariant variant = GenVariant::PP;
    double dispersion = 1.0;  // Mallows only
    std::uint64_t master_seed = 0;

    void validate() const;
};

/// Draws K ~ U[min_partials, max_partials] partial rankings, each a uniform
/// ordered subset of the registry with length ~ U[min_length, max_length].
/// Items are relabeled densely; labels carry the registry names.
RankingProblem random_partial_rankings(const BiomarkerRegistry& registry,
                                       const GenerationSpec& spec, RngStream& rng);

/// Stages for the diseased participants only; healthy are always stage 0.
std::vector<double> sample_stages(const ExperimentConfig& config, int m, int n_diseased,
                                  RngStream& rng);

enum class EventState { Pre, Post };  // healthy (phi) vs diseased (theta)

/// One biomarker value for the given state. Normal mode draws the state
/// Gaussian; NonNormal mode draws the registry mixture for the state's
/// (mean, std), perturbs with N(0, (0.2 std)^2) noise, and clips.
double sample_biomarker_value(const BiomarkerSpec& biomarker, EventState state,
                              BiomarkerMode mode, RngStream& rng);

/// Sigmoid trajectory pieces: slope rho = max(1, |R| / sqrt(var_theta +
/// var_phi)) with R = theta_mean - phi_mean; the additive shift at stage k
/// with inflection xi is (+-R) / (1 + exp(-rho (k - xi))).
double sigmoid_slope(const BiomarkerDist& dist);
double sigmoid_shift(const BiomarkerDist& dist, double stage, double inflection, bool flip);
double sample_sigmoid_value(const BiomarkerDist& dist, double stage, double inflection,
                            bool flip, RngStream& rng);

/// J participants, round(J * R) healthy listed first. Diseased stages come
/// from sample_stages; a biomarker at 1-based position p of the aggregate is
/// post-event iff p <= stage (ordinal) or p <= ceil(stage) (continuous).
/// Sigmoid mode shifts diseased values with inflection = event position and
/// one direction flip per biomarker per cohort.
Cohort generate_cohort(const BiomarkerRegistry& registry, const RankingProblem& problem,
                       const AggregateRanking& aggregate, const ExperimentConfig& config,
                       RngStream& rng);

}  // namespace jpm
