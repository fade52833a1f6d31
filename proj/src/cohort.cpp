#include "jpm/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "jpm/error.hpp"

namespace jpm {

bool stage_distribution_is_continuous(StageDistribution dist) {
    return dist == StageDistribution::ContinuousUniform ||
           dist == StageDistribution::ContinuousBeta;
}

void ExperimentConfig::validate() const {
    const ExperimentConfig row = preset(experiment_id, participants, healthy_ratio);
    if (row.stage_distribution != stage_distribution || row.biomarker_mode != biomarker_mode)
        throw ConfigError("ExperimentConfig: experiment " + std::to_string(experiment_id) +
                          " does not match its canonical stage/biomarker row");
    if (participants < 1) throw ConfigError("ExperimentConfig: participants must be positive");
    if (!(healthy_ratio >= 0.0) || !(healthy_ratio <= 1.0))
        throw ConfigError("ExperimentConfig: healthy ratio must lie in [0, 1]");
}

ExperimentConfig ExperimentConfig::preset(int experiment_id, int participants,
                                          double healthy_ratio) {
    ExperimentConfig cfg;
    cfg.experiment_id = experiment_id;
    cfg.participants = participants;
    cfg.healthy_ratio = healthy_ratio;
    switch (experiment_id) {
        case 1: cfg.stage_distribution = StageDistribution::DirichletMultinomial; cfg.biomarker_mode = BiomarkerMode::Normal; break;
        case 2: cfg.stage_distribution = StageDistribution::DirichletMultinomial; cfg.biomarker_mode = BiomarkerMode::NonNormal; break;
        case 3: cfg.stage_distribution = StageDistribution::UniformDiscrete; cfg.biomarker_mode = BiomarkerMode::Normal; break;
        case 4: cfg.stage_distribution = StageDistribution::UniformDiscrete; cfg.biomarker_mode = BiomarkerMode::NonNormal; break;
        case 5: cfg.stage_distribution = StageDistribution::ContinuousUniform; cfg.biomarker_mode = BiomarkerMode::Normal; break;
        case 6: cfg.stage_distribution = StageDistribution::ContinuousUniform; cfg.biomarker_mode = BiomarkerMode::NonNormal; break;
        case 7: cfg.stage_distribution = StageDistribution::ContinuousBeta; cfg.biomarker_mode = BiomarkerMode::NonNormal; break;
        case 8: cfg.stage_distribution = StageDistribution::ContinuousUniform; cfg.biomarker_mode = BiomarkerMode::SigmoidDiseased; break;
        case 9: cfg.stage_distribution = StageDistribution::ContinuousBeta; cfg.biomarker_mode = BiomarkerMode::SigmoidDiseased; break;
        default:
            throw ConfigError("ExperimentConfig: experiment id must be 1..9, got " +
                              std::to_string(experiment_id));
    }
    return cfg;
}

void GenerationSpec::validate() const {
    if (min_partials < 1 || max_partials < min_partials)
        throw ConfigError("GenerationSpec: bad partial-count range");
    if (min_length < 2 || max_length < min_length)
        throw ConfigError("GenerationSpec: bad partial-length range");
    if (variant == GenVariant::Mallows && !(dispersion > 0.0))
        throw ConfigError("GenerationSpec: Mallows dispersion must be positive");
}

RankingProblem random_partial_rankings(const BiomarkerRegistry& registry,
                                       const GenerationSpec& spec, RngStream& rng) {
    spec.validate();
    if (registry.size() < spec.max_length)
        throw ConfigError("random_partial_rankings: registry smaller than the maximum "
                          "partial length");
    const int k = spec.min_partials +
                  static_cast<int>(rng.uniform_below(spec.max_partials - spec.min_partials + 1));
    std::vector<std::vector<int>> drawn;  // registry indices, ranked order
    for (int p = 0; p < k; ++p) {
        const int len = spec.min_length +
                        static_cast<int>(rng.uniform_below(spec.max_length - spec.min_length + 1));
        const std::vector<int> perm = random_permutation(registry.size(), rng).order();
        drawn.emplace_back(perm.begin(), perm.begin() + len);
    }

    // Dense relabeling: union of registry indices, ascending, becomes 0..m-1.
    std::map<int, int> local;
    for (const auto& items : drawn)
        for (int idx : items) local.emplace(idx, 0);
    int next = 0;
    for (auto& [reg_idx, local_id] : local) local_id = next++;

    RankingProblem problem;
    problem.labels.resize(local.size());
    for (const auto& [reg_idx, local_id] : local)
        problem.labels[static_cast<std::size_t>(local_id)] = registry.at(reg_idx).name;
    for (const auto& items : drawn) {
        PartialRanking partial;
        partial.weight = 1.0;
        for (int idx : items) partial.items.push_back(local.at(idx));
        problem.partials.push_back(std::move(partial));
    }
    problem.validate();
    return problem;
}

std::vector<double> sample_stages(const ExperimentConfig& config, int m, int n_diseased,
                                  RngStream& rng) {
    if (m < 1) throw ConfigError("sample_stages: need at least one biomarker");
    if (n_diseased < 0) throw ConfigError("sample_stages: negative diseased count");
    std::vector<double> stages;
    stages.reserve(static_cast<std::size_t>(n_diseased));
    switch (config.stage_distribution) {
        case StageDistribution::DirichletMultinomial: {
            const std::vector<double> weights = rng.dirichlet_flat(m);  // stages 1..m
            for (int j = 0; j < n_diseased; ++j)
                stages.push_back(static_cast<double>(1 + rng.categorical(weights)));
            break;
        }
        case StageDistribution::UniformDiscrete:
            for (int j = 0; j < n_diseased; ++j)
                stages.push_back(static_cast<double>(1 + rng.uniform_below(m)));
            break;
        case StageDistribution::ContinuousUniform:
            for (int j = 0; j < n_diseased; ++j)
                stages.push_back(static_cast<double>(m) * (1.0 - rng.uniform01()));  // (0, m]
            break;
        case StageDistribution::ContinuousBeta:
            for (int j = 0; j < n_diseased; ++j)
                stages.push_back(static_cast<double>(m) * rng.beta(5.0, 2.0));
            break;
    }
    return stages;
}

namespace {

double mixture_draw(const BiomarkerSpec& biomarker, double mu, double sigma, RngStream& rng) {
    switch (biomarker.family) {
        case MixtureFamily::TriGaussExp:
            switch (rng.uniform_below(3)) {
                case 0: return rng.triangular(mu - 2.0 * sigma, mu - 1.5 * sigma, mu);
                case 1: return rng.normal(mu + sigma, 0.3 * sigma);
                default: return rng.exponential(0.7 * sigma) + (mu - 0.5 * sigma);
            }
        case MixtureFamily::ParetoUniformLogistic:
            switch (rng.uniform_below(3)) {
                case 0: return rng.pareto(1.5) * sigma + (mu - 2.0 * sigma);
                case 1: return rng.uniform_real(mu - 1.5 * sigma, mu + 1.5 * sigma);
                default: return rng.logistic(mu, sigma);
            }
        case MixtureFamily::BetaExpSpike:
            switch (rng.uniform_below(3)) {
                case 0: return rng.beta(0.5, 0.5) * 4.0 * sigma + (mu - 2.0 * sigma);
                case 1: return mu + (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.exponential(0.4 * sigma);
                default:
                    return rng.normal(mu, 0.5 * sigma) + (rng.bernoulli(0.5) ? 2.0 * sigma : 0.0);
            }
        case MixtureFamily::GammaWeibullBimodal:
            switch (rng.uniform_below(3)) {
                case 0: return rng.gamma(2.0, 0.5 * sigma) + (mu - sigma);
                case 1: return rng.weibull(1.0) * sigma + (mu - sigma);
                default: return rng.normal(mu, 0.5 * sigma) + (rng.bernoulli(0.5) ? sigma : -sigma);
            }
        case MixtureFamily::CauchyClipped:
            return rng.cauchy(mu, sigma);
        case MixtureFamily::SpikeLogistic:
            return rng.bernoulli(0.1) ? rng.normal(mu, 0.2 * sigma)
                                      : rng.logistic(mu + sigma, 2.0 * sigma);
    }
    throw ConfigError("unknown mixture family value");
}

}  // namespace

double sample_biomarker_value(const BiomarkerSpec& biomarker, EventState state,
                              BiomarkerMode mode, RngStream& rng) {
    const auto& d = biomarker.dist;
    const double mu = state == EventState::Post ? d.theta_mean : d.phi_mean;
    const double sigma = state == EventState::Post ? d.theta_std : d.phi_std;
    if (mode == BiomarkerMode::Normal) return rng.normal(mu, sigma);
    if (mode != BiomarkerMode::NonNormal)
        throw ConfigError("sample_biomarker_value: sigmoid values need a stage; use "
                          "sample_sigmoid_value");
    double x = mixture_draw(biomarker, mu, sigma, rng);
    x += rng.normal(0.0, 0.2 * sigma);
    // The Cauchy row carries its own, tighter clip window; the global clip is
    // then vacuous.
    const double half_width =
        biomarker.family == MixtureFamily::CauchyClipped ? 4.0 * sigma : 5.0 * sigma;
    return std::clamp(x, mu - half_width, mu + half_width);
}

double sigmoid_slope(const BiomarkerDist& dist) {
    const double r = dist.theta_mean - dist.phi_mean;
    const double spread = std::sqrt(dist.theta_std * dist.theta_std + dist.phi_std * dist.phi_std);
    return std::max(1.0, std::abs(r) / spread);
}

double sigmoid_shift(const BiomarkerDist& dist, double stage, double inflection, bool flip) {
    const double r = dist.theta_mean - dist.phi_mean;
    const double rho = sigmoid_slope(dist);
    const double logistic = 1.0 / (1.0 + std::exp(-rho * (stage - inflection)));
    return (flip ? -r : r) * logistic;
}

double sample_sigmoid_value(const BiomarkerDist& dist, double stage, double inflection,
                            bool flip, RngStream& rng) {
    return rng.normal(dist.phi_mean, dist.phi_std) + sigmoid_shift(dist, stage, inflection, flip);
}

Cohort generate_cohort(const BiomarkerRegistry& registry, const RankingProblem& problem,
                       const AggregateRanking& aggregate, const ExperimentConfig& config,
                       RngStream& rng) {
    problem.validate();
    config.validate();
    const int m = problem.universe_size();
    if (aggregate.size() != m)
        throw ConfigError("generate_cohort: aggregate does not cover the problem universe");

    std::vector<const BiomarkerSpec*> specs;
    specs.reserve(static_cast<std::size_t>(m));
    for (const auto& label : problem.labels) specs.push_back(&registry.by_name(label));

    std::vector<int> event_position(static_cast<std::size_t>(m));  // item -> 1-based rank
    for (int p = 0; p < m; ++p)
        event_position[static_cast<std::size_t>(aggregate.order()[static_cast<std::size_t>(p)])] =
            p + 1;

    const bool sigmoid = config.biomarker_mode == BiomarkerMode::SigmoidDiseased;
    std::vector<bool> flip(static_cast<std::size_t>(m), false);
    if (sigmoid)
        for (int b = 0; b < m; ++b) flip[static_cast<std::size_t>(b)] = rng.bernoulli(0.5);

    const int n_healthy =
        static_cast<int>(std::lround(config.participants * config.healthy_ratio));
    const int n_diseased = config.participants - n_healthy;
    const std::vector<double> stages = sample_stages(config, m, n_diseased, rng);
    const bool continuous = stage_distribution_is_continuous(config.stage_distribution);

    Cohort cohort;
    for (int b = 0; b < m; ++b) {
        cohort.biomarker_ids.push_back(b);
        cohort.biomarker_names.push_back(problem.labels[static_cast<std::size_t>(b)]);
    }
    cohort.participants.reserve(static_cast<std::size_t>(config.participants));

    int width = 1;
    for (int v = config.participants - 1; v >= 10; v /= 10) ++width;
    const auto participant_id = [width](int j) {
        std::string digits = std::to_string(j);
        return "p" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
    };

    for (int j = 0; j < config.participants; ++j) {
        Participant part;
        part.id = participant_id(j);
        part.diseased = j >= n_healthy;
        const double stage = part.diseased ? stages[static_cast<std::size_t>(j - n_healthy)] : 0.0;
        part.stage = stage;
        const double event_cut = continuous ? std::ceil(stage) : stage;
        part.values.reserve(static_cast<std::size_t>(m));
        for (int b = 0; b < m; ++b) {
            const auto& spec = *specs[static_cast<std::size_t>(b)];
            const double xi = static_cast<double>(event_position[static_cast<std::size_t>(b)]);
            double value;
            if (sigmoid) {
                value = part.diseased
                            ? sample_sigmoid_value(spec.dist, stage, xi,
                                                   flip[static_cast<std::size_t>(b)], rng)
                            : rng.normal(spec.dist.phi_mean, spec.dist.phi_std);
            } else {
                const EventState state =
                    part.diseased && xi <= event_cut ? EventState::Post : EventState::Pre;
                value = sample_biomarker_value(spec, state, config.biomarker_mode, rng);
            }
            part.values.push_back(value);
        }
        cohort.participants.push_back(std::move(part));
    }
    cohort.validate();
    return cohort;
}

}  // namespace jpm
