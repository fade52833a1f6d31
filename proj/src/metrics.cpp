#include "jpm/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <utility>

#include "jpm/energy.hpp"
#include "jpm/error.hpp"

namespace jpm {
namespace {

// Iteration budget for the Mallows central-ranking search when fitting an
// inference prior inside calibration.
constexpr long kCalibrationCentralIters = 20000;

struct DrawnAggregates {
    EnergyModel model;
    std::vector<AggregateRanking> samples;
};

// Fits the generation model once (fit stream derived from cfg.seed), then
// draws n aggregates: direct sequential draws for PLDirect, otherwise one
// chain per sample on seeds derived from cfg.seed, state picked by
// cfg.return_mode.
DrawnAggregates draw_aggregates(const RankingProblem& problem, GenVariant variant,
                                std::optional<double> dispersion, int n, const MhConfig& cfg) {
    cfg.validate();
    problem.validate();
    if (n < 1) throw ConfigError("draw_aggregates: n_samples must be positive");
    const int m = problem.universe_size();
    RngStream fit_rng(derive_seed(cfg.seed, 1));
    DrawnAggregates out{fit_generation_model(problem, variant, dispersion, cfg.iterations, fit_rng),
                        {}};
    out.samples.reserve(static_cast<std::size_t>(n));
    const std::uint64_t sample_base = derive_seed(cfg.seed, 2);
    if (variant == GenVariant::PLDirect) {
        const auto& pl = std::get<PlackettLuceModel>(out.model);
        RngStream draw_rng(sample_base);
        for (int i = 0; i < n; ++i) out.samples.push_back(sample_plackett_luce(pl, draw_rng));
        return out;
    }
    const EnergyFn energy = [&out](const AggregateRanking& s) { return energy_of(out.model, s); };
    for (int i = 0; i < n; ++i) {
        RngStream chain_rng(derive_seed(sample_base, static_cast<std::uint64_t>(i)));
        const SampleTrace trace = mh_minimize(energy, m, cfg, chain_rng);
        out.samples.push_back(trace.selected(cfg.return_mode));
    }
    return out;
}

// Fit target for each inference variant's prior; PL scores are identical
// whether the model is later sampled directly or through a chain.
GenVariant inference_fit_variant(InferenceVariant variant) {
    switch (variant) {
        case InferenceVariant::PP: return GenVariant::PP;
        case InferenceVariant::BT: return GenVariant::BT;
        case InferenceVariant::PL: return GenVariant::PLDirect;
        case InferenceVariant::Mallows: return GenVariant::Mallows;
        case InferenceVariant::None: break;
    }
    throw ConfigError("calibration: inference variant carries no energy model");
}

}  // namespace

MeanCi mean_ci(const std::vector<double>& values) {
    if (values.empty()) throw ConfigError("mean_ci: no values");
    const int n = static_cast<int>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / n;
    if (n == 1) return {mean, 0.0, 1};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / (n - 1)) / std::sqrt(static_cast<double>(n));
    return {mean, 1.96 * se, n};
}

double conflict(const RankingProblem& problem) {
    problem.validate();
    const int k = static_cast<int>(problem.partials.size());
    if (k < 2) throw ConfigError("conflict: need at least two partial rankings");
    double sum = 0.0;
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
            sum += kendall_tau_restricted(problem.partials[i], problem.partials[j]);
    return sum / (0.5 * k * (k - 1));
}

double overlap(const RankingProblem& problem) {
    problem.validate();
    std::map<int, int> appearances;
    for (const PartialRanking& pr : problem.partials)
        for (int item : pr.items) ++appearances[item];
    int shared = 0;
    for (const auto& [item, count] : appearances)
        if (count >= 2) ++shared;
    return static_cast<double>(shared) / problem.universe_size();
}

PartialRankingFeatures ranking_features(const RankingProblem& problem) {
    PartialRankingFeatures f;
    f.n_pr = static_cast<int>(problem.partials.size());
    double len_sum = 0.0;
    for (const PartialRanking& pr : problem.partials) len_sum += static_cast<double>(pr.items.size());
    f.mean_len = f.n_pr > 0 ? len_sum / f.n_pr : 0.0;
    f.conflict = conflict(problem);
    f.overlap_rate = overlap(problem);
    return f;
}

std::string sharpness_model_name(SharpnessModel model) {
    switch (model) {
        case SharpnessModel::PL: return "pl";
        case SharpnessModel::BT: return "bt";
        case SharpnessModel::PP: return "pp";
        case SharpnessModel::MallowsTheta1: return "m1";
        case SharpnessModel::MallowsTheta10: return "m10";
    }
    throw ConfigError("sharpness_model_name: unknown model");
}

SharpnessModel sharpness_model_from_name(const std::string& name) {
    if (name == "pl") return SharpnessModel::PL;
    if (name == "bt") return SharpnessModel::BT;
    if (name == "pp") return SharpnessModel::PP;
    if (name == "m1") return SharpnessModel::MallowsTheta1;
    if (name == "m10") return SharpnessModel::MallowsTheta10;
    throw ConfigError("sharpness_model_from_name: unknown model '" + name + "'");
}

double predict_sharpness(const PartialRankingFeatures& features, SharpnessModel model) {
    // Coefficient rows: intercept, n_pr, mean_len, conflict, overlap_rate.
    double c0 = 0.0, c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
    switch (model) {
        case SharpnessModel::PL:
            c0 = 1.142, c1 = -0.003, c2 = 0.004, c3 = -0.257, c4 = -0.567;
            break;
        case SharpnessModel::BT:
            c0 = 1.013, c1 = -0.000, c2 = 0.001, c3 = -0.030, c4 = -0.073;
            break;
        case SharpnessModel::PP:
            c0 = 0.942, c1 = 0.001, c2 = 0.002, c3 = -0.116, c4 = -0.095;
            break;
        case SharpnessModel::MallowsTheta1:
            c0 = 1.082, c1 = -0.113, c2 = -0.047, c3 = -0.001, c4 = 0.283;
            break;
        case SharpnessModel::MallowsTheta10:
            c0 = 1.240, c1 = -0.121, c2 = -0.048, c3 = 0.002, c4 = 0.292;
            break;
    }
    // Deliberately unclamped: the linear model may leave [0, 1].
    return c0 + c1 * features.n_pr + c2 * features.mean_len + c3 * features.conflict +
           c4 * features.overlap_rate;
}

double auroc(const std::vector<double>& lows, const std::vector<double>& highs) {
    if (lows.empty() || highs.empty()) throw ConfigError("auroc: empty sample");
    std::vector<double> sorted_lows = lows;
    std::sort(sorted_lows.begin(), sorted_lows.end());
    double score = 0.0;
    for (double h : highs) {
        const auto lo = std::lower_bound(sorted_lows.begin(), sorted_lows.end(), h);
        const auto hi = std::upper_bound(lo, sorted_lows.end(), h);
        score += static_cast<double>(lo - sorted_lows.begin()) + 0.5 * static_cast<double>(hi - lo);
    }
    return score / (static_cast<double>(lows.size()) * static_cast<double>(highs.size()));
}

double calibration(const RankingProblem& problem, const AggregateRanking& sigma_gt,
                   InferenceVariant inference_variant, int n_random, RngStream& rng,
                   double dispersion) {
    problem.validate();
    const int m = problem.universe_size();
    if (static_cast<int>(sigma_gt.order().size()) != m)
        throw ConfigError("calibration: ground-truth ranking does not cover the problem universe");
    if (n_random < 2) throw ConfigError("calibration: need at least two random rankings");
    std::vector<double> energies, distances;
    energies.reserve(static_cast<std::size_t>(n_random));
    distances.reserve(static_cast<std::size_t>(n_random));
    if (inference_variant == InferenceVariant::None) {
        // No prior: flat energies over uniform permutations, rejected as
        // zero-variance inside spearman_rho.
        for (int i = 0; i < n_random; ++i) {
            energies.push_back(0.0);
            distances.push_back(kendall_tau_normalized(random_permutation(m, rng), sigma_gt));
        }
        return spearman_rho(energies, distances);
    }
    const GenVariant gv = inference_fit_variant(inference_variant);
    const std::optional<double> disp =
        gv == GenVariant::Mallows ? std::optional<double>(dispersion) : std::nullopt;
    const EnergyModel model =
        fit_generation_model(problem, gv, disp, kCalibrationCentralIters, rng);
    // Normalized Kendall distances are multiples of 1/C(m, 2), so the
    // permutations group into discrete distance levels. Averaging the energies
    // within each level removes the pointwise scatter that would otherwise
    // drown the trend when sigma_gt sits away from the model's mode.
    std::map<double, std::pair<double, int>> levels;
    for (int i = 0; i < n_random; ++i) {
        const AggregateRanking perm = random_permutation(m, rng);
        auto& acc = levels[kendall_tau_normalized(perm, sigma_gt)];
        acc.first += energy_of(model, perm);
        acc.second += 1;
    }
    for (const auto& [distance, acc] : levels) {
        distances.push_back(distance);
        energies.push_back(acc.first / acc.second);
    }
    // A constant mean-energy profile (e.g. the empty prior) fails inside
    // spearman_rho with a zero-variance error.
    return spearman_rho(energies, distances);
}

double separation(const RankingProblem& problem, GenVariant variant,
                  std::optional<double> dispersion, int n_samples, const MhConfig& cfg,
                  RngStream& rng) {
    const DrawnAggregates drawn = draw_aggregates(problem, variant, dispersion, n_samples, cfg);
    std::vector<double> model_energies, random_energies;
    model_energies.reserve(drawn.samples.size());
    random_energies.reserve(drawn.samples.size());
    for (const AggregateRanking& s : drawn.samples)
        model_energies.push_back(energy_of(drawn.model, s));
    const int m = problem.universe_size();
    for (int i = 0; i < n_samples; ++i)
        random_energies.push_back(energy_of(drawn.model, random_permutation(m, rng)));
    return auroc(model_energies, random_energies);
}

double sharpness(const RankingProblem& problem, GenVariant variant,
                 std::optional<double> dispersion, int n_samples, const MhConfig& cfg) {
    if (n_samples < 2) throw ConfigError("sharpness: need at least two samples");
    return kendalls_w(draw_aggregates(problem, variant, dispersion, n_samples, cfg).samples);
}

double ordering_error(const AggregateRanking& estimated, const AggregateRanking& truth) {
    return kendall_tau_normalized(estimated, truth);
}

}  // namespace jpm
