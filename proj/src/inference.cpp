#include "jpm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <unordered_map>
#include <utility>

#include "jpm/error.hpp"

namespace jpm {

namespace {

constexpr std::size_t kCacheCapacity = 1000000;

struct Evaluation {
    double loglik = 0.0;
    double objective = 0.0;
};

struct OrderHash {
    std::size_t operator()(const std::vector<int>& order) const {
        std::size_t h = 1469598103934665603ull;
        for (int v : order) {
            h ^= static_cast<std::size_t>(static_cast<unsigned>(v));
            h *= 1099511628211ull;
        }
        return h;
    }
};

/// LRU-bounded memo of per-permutation (loglik, objective) pairs; chains
/// revisit states constantly.
class EvalCache {
public:
    const Evaluation* find(const std::vector<int>& key) {
        auto it = map_.find(key);
        if (it == map_.end()) return nullptr;
        recency_.splice(recency_.begin(), recency_, it->second);
        return &it->second->second;
    }

    const Evaluation& insert(std::vector<int> key, Evaluation value) {
        if (map_.size() >= kCacheCapacity) {
            map_.erase(recency_.back().first);
            recency_.pop_back();
        }
        recency_.emplace_front(std::move(key), value);
        map_[recency_.front().first] = recency_.begin();
        return recency_.front().second;
    }

private:
    std::list<std::pair<std::vector<int>, Evaluation>> recency_;
    std::unordered_map<std::vector<int>, decltype(recency_)::iterator, OrderHash> map_;
};

GenVariant to_gen_variant(InferenceVariant variant) {
    switch (variant) {
        case InferenceVariant::PP: return GenVariant::PP;
        case InferenceVariant::BT: return GenVariant::BT;
        case InferenceVariant::PL: return GenVariant::PLMcmc;
        case InferenceVariant::Mallows: return GenVariant::Mallows;
        case InferenceVariant::None: break;
    }
    throw ConfigError("no generation model for the baseline variant");
}

/// Column permutation of the cohort for an item-space ranking.
std::vector<int> column_order(const std::vector<int>& col_of_item,
                              const std::vector<int>& item_order) {
    std::vector<int> cols;
    cols.reserve(item_order.size());
    for (int item : item_order) cols.push_back(col_of_item[static_cast<std::size_t>(item)]);
    return cols;
}

InferenceResult run_chain(const Cohort& cohort, const EnergyFn& prior_energy,
                          const InferenceConfig& cfg, const std::vector<BiomarkerDist>& dists) {
    const int m = cohort.size();
    std::vector<int> col_of_item(static_cast<std::size_t>(m), -1);
    for (int c = 0; c < m; ++c) {
        const int item = cohort.biomarker_ids[static_cast<std::size_t>(c)];
        if (item < 0 || item >= m)
            throw ConfigError("inference: cohort biomarker ids must form a dense universe");
        col_of_item[static_cast<std::size_t>(item)] = c;
    }

    const EbmEvaluator evaluator(cohort, dists);
    EvalCache cache;
    const auto evaluate = [&](const AggregateRanking& sigma) -> Evaluation {
        if (const Evaluation* hit = cache.find(sigma.order())) return *hit;
        Evaluation eval;
        eval.loglik =
            evaluator.log_likelihood(AggregateRanking(column_order(col_of_item, sigma.order())));
        eval.objective = eval.loglik - prior_energy(sigma);
        return cache.insert(sigma.order(), eval);
    };

    const MhConfig& mc = cfg.mcmc;
    mc.validate();
    RngStream rng(derive_seed(mc.seed, 2));
    AggregateRanking sigma = random_permutation(m, rng);

    const double neg_inf = -std::numeric_limits<double>::infinity();
    double objective = neg_inf;  // the initial state is never evaluated
    double loglik = neg_inf;
    AggregateRanking best = sigma;
    double best_objective = neg_inf;
    double best_loglik = neg_inf;

    InferenceResult result;
    if (mc.record_chain) {
        result.trace.chain.reserve(static_cast<std::size_t>(mc.iterations));
        result.chain_data_loglik.reserve(static_cast<std::size_t>(mc.iterations));
    }

    for (long t = 1; t <= mc.iterations; ++t) {
        AggregateRanking proposal = sigma;
        const int a = static_cast<int>(rng.uniform_below(m));
        int b = static_cast<int>(rng.uniform_below(m - 1));
        if (b >= a) ++b;
        proposal.swap_positions(a, b);
        const Evaluation prop = evaluate(proposal);
        const double p = std::min(1.0, std::exp(prop.objective - objective));
        const bool accepted = rng.uniform01() < p;
        if (accepted) {
            sigma = std::move(proposal);
            objective = prop.objective;
            loglik = prop.loglik;
        }
        if (objective > best_objective) {
            best_objective = objective;
            best_loglik = loglik;
            best = sigma;
        }
        if (mc.record_chain) {
            result.trace.chain.push_back(ChainRecord{t, -objective, accepted});
            result.chain_data_loglik.push_back(loglik);
        }
        if (mc.keep_samples && t > mc.burn_in && (t - mc.burn_in) % mc.thinning == 0)
            result.trace.samples.push_back(sigma);
    }

    result.best_ranking = best;
    result.best_objective = best_objective;
    result.data_loglik = best_loglik;
    result.trace.best = best;
    result.trace.best_energy = -best_objective;
    result.trace.final = sigma;
    result.trace.final_energy = -objective;
    result.posteriors =
        evaluator.posteriors(AggregateRanking(column_order(col_of_item, best.order())));
    result.seed_used = mc.seed;
    return result;
}

}  // namespace

std::string inference_variant_name(InferenceVariant variant) {
    switch (variant) {
        case InferenceVariant::None: return "none";
        case InferenceVariant::PP: return "pp";
        case InferenceVariant::BT: return "bt";
        case InferenceVariant::PL: return "pl";
        case InferenceVariant::Mallows: return "mallows";
    }
    throw ConfigError("unknown inference variant value");
}

InferenceVariant inference_variant_from_name(const std::string& name) {
    if (name == "none") return InferenceVariant::None;
    if (name == "pp") return InferenceVariant::PP;
    if (name == "bt") return InferenceVariant::BT;
    if (name == "pl") return InferenceVariant::PL;
    if (name == "mallows") return InferenceVariant::Mallows;
    throw ConfigError("unknown inference variant: " + name);
}

void InferenceConfig::validate() const {
    mcmc.validate();
    if (n_seeds < 1) throw ConfigError("InferenceConfig: n_seeds must be at least 1");
    if (variant == InferenceVariant::Mallows && (!std::isfinite(dispersion) || dispersion < 0.0))
        throw ConfigError("InferenceConfig: Mallows dispersion must be finite and nonnegative");
}

InferenceResult jpm_infer(const Cohort& cohort, const RankingProblem& problem,
                          const InferenceConfig& cfg, const std::vector<BiomarkerDist>& dists) {
    cfg.validate();
    problem.validate();
    if (cohort.size() != problem.universe_size())
        throw ConfigError("jpm_infer: cohort biomarkers do not match the problem universe");

    // A zero-dispersion Mallows prior is exactly flat, like the baseline.
    const bool flat = cfg.variant == InferenceVariant::None ||
                      (cfg.variant == InferenceVariant::Mallows && cfg.dispersion == 0.0);
    EnergyFn prior = [](const AggregateRanking&) { return 0.0; };
    if (!flat) {
        RngStream fit_rng(derive_seed(cfg.mcmc.seed, 1));
        std::optional<double> dispersion;
        if (cfg.variant == InferenceVariant::Mallows) dispersion = cfg.dispersion;
        EnergyModel model = fit_generation_model(problem, to_gen_variant(cfg.variant), dispersion,
                                                 cfg.mcmc.iterations, fit_rng);
        prior = [model = std::move(model)](const AggregateRanking& sigma) {
            return energy_of(model, sigma);
        };
    }
    return run_chain(cohort, prior, cfg, dists);
}

InferenceResult multi_seed_infer(const Cohort& cohort, const RankingProblem& problem,
                                 const InferenceConfig& cfg,
                                 const std::vector<BiomarkerDist>& dists) {
    cfg.validate();
    InferenceResult best;
    bool have = false;
    for (int i = 0; i < cfg.n_seeds; ++i) {
        InferenceConfig sub = cfg;
        sub.mcmc.seed = derive_seed(cfg.mcmc.seed, static_cast<std::uint64_t>(i));
        InferenceResult run = jpm_infer(cohort, problem, sub, dists);
        if (!have || run.data_loglik > best.data_loglik) {
            best = std::move(run);
            have = true;
        }
    }
    return best;
}

InferenceResult baseline_infer(const Cohort& cohort, const InferenceConfig& cfg,
                               const std::vector<BiomarkerDist>& dists) {
    cfg.validate();
    return run_chain(cohort, [](const AggregateRanking&) { return 0.0; }, cfg, dists);
}

}  // namespace jpm
