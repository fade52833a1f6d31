#pragma once

// Analysis suite: calibration of prior energies against ranking distance,
// separation and sharpness of generated aggregate rankings, partial-ranking
// structure features, and the published linear sharpness predictor.

#include <optional>
#include <string>
#include <vector>

#include "jpm/inference.hpp"
#include "jpm/ranking.hpp"
#include "jpm/rng.hpp"
#include "jpm/sampling.hpp"

namespace jpm {

struct MeanCi {
    double mean = 0.0;
    double ci95 = 0.0;  // half-width, normal approximation
    int n = 0;
};

MeanCi mean_ci(const std::vector<double>& values);

struct PartialRankingFeatures {
    int n_pr = 0;
    double mean_len = 0.0;
    double conflict = 0.0;
    double overlap_rate = 0.0;
};

/// Mean restricted Kendall distance over all unordered partial pairs.
double conflict(const RankingProblem& problem);

/// Fraction of universe items appearing in at least two partials.
double overlap(const RankingProblem& problem);

PartialRankingFeatures ranking_features(const RankingProblem& problem);

enum class SharpnessModel { PL, BT, PP, MallowsTheta1, MallowsTheta10 };

std::string sharpness_model_name(SharpnessModel model);
SharpnessModel sharpness_model_from_name(const std::string& name);

/// Published linear predictor of sharpness from ranking features; outputs
/// are reported unclamped (the linear model may leave [0, 1]).
double predict_sharpness(const PartialRankingFeatures& features, SharpnessModel model);

/// P(low < high) + 0.5 P(low = high) over all cross pairs.
double auroc(const std::vector<double>& lows, const std::vector<double>& highs);

/// Draws n_random uniform permutations, groups them by their discrete
/// normalized Kendall distance to sigma_gt, and returns the Spearman
/// correlation between the distance levels and the mean fitted-prior energy
/// within each level. A constant-energy prior raises NumericalError.
double calibration(const RankingProblem& problem, const AggregateRanking& sigma_gt,
                   InferenceVariant inference_variant, int n_random, RngStream& rng,
                   double dispersion = 1.0);

/// Draws n_samples aggregate rankings with the variant (model fitted once,
/// one chain per sample on seeds derived from cfg.seed) plus n_samples
/// uniform permutations from rng, and returns the energy AUROC.
double separation(const RankingProblem& problem, GenVariant variant,
                  std::optional<double> dispersion, int n_samples, const MhConfig& cfg,
                  RngStream& rng);

/// Kendall's W of n_samples variant-generated aggregate rankings.
double sharpness(const RankingProblem& problem, GenVariant variant,
                 std::optional<double> dispersion, int n_samples, const MhConfig& cfg);

/// Normalized Kendall distance between an estimate and the ground truth.
double ordering_error(const AggregateRanking& estimated, const AggregateRanking& truth);

}  // namespace jpm
