#include "jpm/sampling.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "jpm/error.hpp"

namespace jpm {

void MhConfig::validate() const {
    if (iterations < 1) throw ConfigError("MhConfig: iterations must be >= 1");
    if (burn_in < 0 || burn_in >= iterations)
        throw ConfigError("MhConfig: burn_in must be in [0, iterations)");
    if (thinning < 1) throw ConfigError("MhConfig: thinning must be >= 1");
}

MhConfig MhConfig::generation(std::uint64_t seed) {
    MhConfig cfg;
    cfg.iterations = 500;
    cfg.burn_in = 0;
    cfg.thinning = 1;
    cfg.seed = seed;
    cfg.return_mode = ReturnMode::Final;
    return cfg;
}

MhConfig MhConfig::inference(std::uint64_t seed) {
    MhConfig cfg;
    cfg.iterations = 20000;
    cfg.burn_in = 500;
    cfg.thinning = 1;
    cfg.seed = seed;
    cfg.return_mode = ReturnMode::Best;
    return cfg;
}

AggregateRanking sample_plackett_luce(const PlackettLuceModel& model, RngStream& rng) {
    const int m = model.size();
    if (m < 1) throw ConfigError("sample_plackett_luce: empty model");
    std::vector<int> remaining(static_cast<std::size_t>(m));
    std::iota(remaining.begin(), remaining.end(), 0);
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(m));
    std::vector<double> weights;
    while (!remaining.empty()) {
        weights.clear();
        double max_score = -std::numeric_limits<double>::infinity();
        for (int item : remaining)
            max_score = std::max(max_score, model.scores[static_cast<std::size_t>(item)]);
        for (int item : remaining)
            weights.push_back(std::exp(model.scores[static_cast<std::size_t>(item)] - max_score));
        const int pick = rng.categorical(weights);
        order.push_back(remaining[static_cast<std::size_t>(pick)]);
        remaining.erase(remaining.begin() + pick);
    }
    return AggregateRanking(std::move(order));
}

SampleTrace mh_minimize(const EnergyFn& energy, int m, const MhConfig& cfg, RngStream& rng) {
    cfg.validate();
    if (m < 2) throw ConfigError("mh_minimize: need at least two items");

    AggregateRanking current = random_permutation(m, rng);
    double cur_e = energy(current);

    SampleTrace trace;
    trace.best = current;
    trace.best_energy = cur_e;
    if (cfg.record_chain) {
        trace.chain.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
        trace.chain.push_back({0, cur_e, true});
    }

    AggregateRanking proposal = current;
    for (long t = 1; t <= cfg.iterations; ++t) {
        const int a = static_cast<int>(rng.uniform_below(m));
        int b = static_cast<int>(rng.uniform_below(m - 1));
        if (b >= a) ++b;
        proposal = current;
        proposal.swap_positions(a, b);
        const double prop_e = energy(proposal);
        const double p = std::min(1.0, std::exp(cur_e - prop_e));
        const bool accepted = rng.uniform01() < p;
        if (accepted) {
            current = proposal;
            cur_e = prop_e;
        }
        if (cur_e < trace.best_energy) {
            trace.best = current;
            trace.best_energy = cur_e;
        }
        if (cfg.record_chain) trace.chain.push_back({t, cur_e, accepted});
        if (cfg.keep_samples && t > cfg.burn_in && (t - cfg.burn_in) % cfg.thinning == 0)
            trace.samples.push_back(current);
    }
    trace.final = current;
    trace.final_energy = cur_e;
    return trace;
}

SampleTrace sample_mh(const EnergyModel& model, int m, const MhConfig& cfg) {
    RngStream rng(cfg.seed);
    return mh_minimize([&model](const AggregateRanking& s) { return energy_of(model, s); }, m,
                       cfg, rng);
}

EnergyModel fit_generation_model(const RankingProblem& problem, GenVariant variant,
                                 std::optional<double> dispersion, long central_search_iters,
                                 RngStream& rng) {
    if (variant == GenVariant::Mallows && !dispersion)
        throw ConfigError("fit_generation_model: Mallows requires a dispersion");
    if (variant != GenVariant::Mallows && dispersion)
        throw ConfigError("fit_generation_model: dispersion only applies to Mallows");
    switch (variant) {
        case GenVariant::PP: return fit_pairwise(problem);
        case GenVariant::BT: return fit_bradley_terry(problem);
        case GenVariant::PLDirect:
        case GenVariant::PLMcmc: return fit_plackett_luce(problem);
        case GenVariant::Mallows:
            return fit_mallows_bt_informed(problem, *dispersion, central_search_iters, rng);
    }
    throw ConfigError("fit_generation_model: unknown variant");
}

AggregateRanking generate_aggregate(const RankingProblem& problem, GenVariant variant,
                                    std::optional<double> dispersion, const MhConfig& cfg) {
    cfg.validate();
    problem.validate();
    RngStream fit_rng(derive_seed(cfg.seed, 1));
    const EnergyModel model =
        fit_generation_model(problem, variant, dispersion, cfg.iterations, fit_rng);
    RngStream sample_rng(derive_seed(cfg.seed, 2));
    if (variant == GenVariant::PLDirect)
        return sample_plackett_luce(std::get<PlackettLuceModel>(model), sample_rng);
    const SampleTrace trace = mh_minimize(
        [&model](const AggregateRanking& s) { return energy_of(model, s); },
        problem.universe_size(), cfg, sample_rng);
    return trace.selected(cfg.return_mode);
}

}  // namespace jpm
