#pragma once

// Aggregate-ranking generation: direct sequential sampling for Plackett-Luce
// and Metropolis-Hastings over permutations (uniform random transposition
// proposals) for every energy model.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "jpm/energy.hpp"
#include "jpm/ranking.hpp"
#include "jpm/rng.hpp"

namespace jpm {

enum class ReturnMode { Best, Final };

struct MhConfig {
    long iterations = 500;
    long burn_in = 0;
    long thinning = 1;
    std::uint64_t seed = 0;
    ReturnMode return_mode = ReturnMode::Final;
    bool record_chain = false;   // keep per-iteration (iter, energy, accepted)
    bool keep_samples = false;   // retain post-burn-in, thinned states

    void validate() const;

    /// 500 iterations, no burn-in; the knobs used when generating data.
    static MhConfig generation(std::uint64_t seed);

    /// 20,000 iterations, 500 burn-in, best-state selection; the knobs used
    /// when searching for a maximum-posterior ranking.
    static MhConfig inference(std::uint64_t seed);
};

struct ChainRecord {
    long iteration = 0;
    double energy = 0.0;
    bool accepted = false;
};

struct SampleTrace {
    AggregateRanking best;
    double best_energy = 0.0;
    AggregateRanking final;
    double final_energy = 0.0;
    std::vector<ChainRecord> chain;            // present iff record_chain
    std::vector<AggregateRanking> samples;     // present iff keep_samples

    const AggregateRanking& selected(ReturnMode mode) const {
        return mode == ReturnMode::Best ? best : final;
    }
};

using EnergyFn = std::function<double(const AggregateRanking&)>;

/// Sequential choice without replacement, probability proportional to
/// exp(score) over the remaining items.
AggregateRanking sample_plackett_luce(const PlackettLuceModel& model, RngStream& rng);

/// Random-transposition Metropolis-Hastings targeting exp(-energy). Starts
/// from a uniform random permutation; `best` tracks the minimum-energy state
/// visited (the initial state included, recorded as iteration 0).
SampleTrace sample_mh(const EnergyModel& model, int m, const MhConfig& cfg);

/// Same chain driven by an arbitrary energy callback and an external stream.
SampleTrace mh_minimize(const EnergyFn& energy, int m, const MhConfig& cfg, RngStream& rng);

enum class GenVariant { PP, BT, PLDirect, PLMcmc, Mallows };

/// Fits the requested model from the problem's partial rankings. Mallows
/// consumes the stream for its central-ranking search; other variants do not.
EnergyModel fit_generation_model(const RankingProblem& problem, GenVariant variant,
                                 std::optional<double> dispersion, long central_search_iters,
                                 RngStream& rng);

/// Fit-then-sample in one call: a direct draw for PLDirect, otherwise one
/// MH chain with the state picked by cfg.return_mode.
AggregateRanking generate_aggregate(const RankingProblem& problem, GenVariant variant,
                                    std::optional<double> dispersion, const MhConfig& cfg);

}  // namespace jpm
