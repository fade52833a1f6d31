#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "jpm/cohort.hpp"
#include "jpm/error.hpp"
#include "jpm/inference.hpp"
#include "jpm/registry.hpp"

using namespace jpm;

namespace {

BiomarkerRegistry uniform_registry(int m, double theta_mean, double theta_std = 1.0) {
    BiomarkerRegistry reg;
    for (int i = 0; i < m; ++i)
        reg.add(BiomarkerSpec{"X" + std::to_string(i),
                              BiomarkerDist{theta_mean, theta_std, 0.0, 1.0},
                              MixtureFamily::TriGaussExp});
    return reg;
}

RankingProblem single_partial_problem(const BiomarkerRegistry& reg,
                                      const std::vector<int>& order) {
    RankingProblem problem;
    for (int i = 0; i < reg.size(); ++i) problem.labels.push_back(reg.at(i).name);
    problem.partials.push_back(PartialRanking{order, 1.0});
    return problem;
}

std::vector<BiomarkerDist> registry_dists(const BiomarkerRegistry& reg) {
    std::vector<BiomarkerDist> dists;
    for (int i = 0; i < reg.size(); ++i) dists.push_back(reg.at(i).dist);
    return dists;
}

Cohort gaussian_cohort(const BiomarkerRegistry& reg, const std::vector<int>& truth, int J,
                       std::uint64_t seed) {
    const RankingProblem problem = single_partial_problem(reg, truth);
    RngStream rng(seed);
    return generate_cohort(reg, problem, AggregateRanking(truth),
                           ExperimentConfig::preset(3, J, 0.5), rng);
}

}  // namespace

TEST_CASE("flat-prior inference equals the likelihood-only baseline") {
    const BiomarkerRegistry reg = uniform_registry(5, 4.0);
    const std::vector<int> truth{2, 0, 4, 1, 3};
    const Cohort cohort = gaussian_cohort(reg, truth, 60, 11);
    const auto dists = registry_dists(reg);
    const RankingProblem problem = single_partial_problem(reg, truth);

    InferenceConfig cfg;
    cfg.variant = InferenceVariant::None;
    cfg.mcmc = MhConfig::inference(321);
    cfg.mcmc.iterations = 400;
    cfg.mcmc.burn_in = 0;
    cfg.mcmc.record_chain = true;

    const InferenceResult none = jpm_infer(cohort, problem, cfg, dists);
    const InferenceResult base = baseline_infer(cohort, cfg, dists);
    REQUIRE(none.trace.chain.size() == base.trace.chain.size());
    for (std::size_t i = 0; i < none.trace.chain.size(); ++i) {
        CHECK(none.trace.chain[i].energy == base.trace.chain[i].energy);
        CHECK(none.trace.chain[i].accepted == base.trace.chain[i].accepted);
        CHECK(none.chain_data_loglik[i] == base.chain_data_loglik[i]);
    }
    CHECK(none.best_ranking == base.best_ranking);
    CHECK(none.best_objective == base.best_objective);

    InferenceConfig mallows0 = cfg;
    mallows0.variant = InferenceVariant::Mallows;
    mallows0.dispersion = 0.0;
    const InferenceResult flat = jpm_infer(cohort, problem, mallows0, dists);
    for (std::size_t i = 0; i < flat.trace.chain.size(); ++i) {
        CHECK(flat.trace.chain[i].accepted == base.trace.chain[i].accepted);
        CHECK(flat.trace.chain[i].energy == base.trace.chain[i].energy);
    }
}

TEST_CASE("recorded objectives decompose into likelihood minus energy") {
    const BiomarkerRegistry reg = uniform_registry(5, 3.0);
    const std::vector<int> truth{0, 3, 1, 4, 2};
    const Cohort cohort = gaussian_cohort(reg, truth, 40, 19);
    const auto dists = registry_dists(reg);
    const RankingProblem problem = single_partial_problem(reg, truth);

    InferenceConfig cfg;
    cfg.variant = InferenceVariant::BT;
    cfg.mcmc = MhConfig::inference(77);
    cfg.mcmc.iterations = 200;
    cfg.mcmc.burn_in = 0;
    cfg.mcmc.record_chain = true;
    cfg.mcmc.keep_samples = true;

    const InferenceResult result = jpm_infer(cohort, problem, cfg, dists);
    REQUIRE(result.trace.samples.size() == result.trace.chain.size());

    RngStream fit_rng(derive_seed(77, 1));
    const EnergyModel model =
        fit_generation_model(problem, GenVariant::BT, std::nullopt, cfg.mcmc.iterations, fit_rng);
    double max_objective = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < result.trace.samples.size(); ++i) {
        const AggregateRanking& sigma = result.trace.samples[i];
        const double ll = ebm_log_likelihood(cohort, sigma, dists);
        const double e = energy_of(model, sigma);
        CHECK(-result.trace.chain[i].energy == doctest::Approx(ll - e).epsilon(1e-9));
        CHECK(result.chain_data_loglik[i] == doctest::Approx(ll).epsilon(1e-9));
        max_objective = std::max(max_objective, -result.trace.chain[i].energy);
    }
    CHECK(result.best_objective == max_objective);
}

TEST_CASE("strong concordant prior recovers the truth across seeds") {
    const BiomarkerRegistry reg = uniform_registry(4, 5.0);
    const std::vector<int> truth{1, 3, 0, 2};
    const Cohort cohort = gaussian_cohort(reg, truth, 800, 23);
    const auto dists = registry_dists(reg);
    const RankingProblem problem = single_partial_problem(reg, truth);

    int hits = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        InferenceConfig cfg;
        cfg.variant = InferenceVariant::Mallows;
        cfg.dispersion = 10.0;
        cfg.mcmc = MhConfig::inference(derive_seed(404, seed));
        cfg.mcmc.iterations = 2000;
        const InferenceResult result = jpm_infer(cohort, problem, cfg, dists);
        if (result.best_ranking.order() == truth) ++hits;
    }
    CHECK(hits >= 9);
}

TEST_CASE("prior strength pulls the answer toward the prior's center") {
    // Weakly separated small cohort so a strong prior can override the data.
    const BiomarkerRegistry reg = uniform_registry(4, 1.0);
    const std::vector<int> data_order{0, 1, 2, 3};
    const std::vector<int> prior_center{3, 2, 1, 0};
    const Cohort cohort = gaussian_cohort(reg, data_order, 16, 29);
    const auto dists = registry_dists(reg);
    const RankingProblem problem = single_partial_problem(reg, prior_center);

    std::vector<double> taus;
    for (double dispersion : {0.1, 1.0, 10.0, 100.0}) {
        InferenceConfig cfg;
        cfg.variant = InferenceVariant::Mallows;
        cfg.dispersion = dispersion;
        cfg.mcmc = MhConfig::inference(515);
        cfg.mcmc.iterations = 3000;
        const InferenceResult result = jpm_infer(cohort, problem, cfg, dists);
        taus.push_back(kendall_tau_normalized(result.best_ranking,
                                              AggregateRanking(prior_center)));
    }
    for (std::size_t i = 1; i < taus.size(); ++i) CHECK(taus[i] <= taus[i - 1]);
    CHECK(taus.back() == 0.0);   // dispersion 100: prior wins outright
    CHECK(taus.front() > 0.0);   // dispersion 0.1: data wins
}

TEST_CASE("inference is deterministic and reports its seed") {
    const BiomarkerRegistry reg = uniform_registry(5, 4.0);
    const std::vector<int> truth{4, 2, 0, 3, 1};
    const Cohort cohort = gaussian_cohort(reg, truth, 50, 31);
    const auto dists = registry_dists(reg);
    const RankingProblem problem = single_partial_problem(reg, truth);

    InferenceConfig cfg;
    cfg.variant = InferenceVariant::PL;
    cfg.mcmc = MhConfig::inference(99);
    cfg.mcmc.iterations = 500;
    cfg.mcmc.burn_in = 0;
    cfg.mcmc.record_chain = true;

    const InferenceResult a = jpm_infer(cohort, problem, cfg, dists);
    const InferenceResult b = jpm_infer(cohort, problem, cfg, dists);
    CHECK(a.best_ranking == b.best_ranking);
    CHECK(a.best_objective == b.best_objective);
    CHECK(a.data_loglik == b.data_loglik);
    CHECK(a.seed_used == 99);
    REQUIRE(a.trace.chain.size() == b.trace.chain.size());
    for (std::size_t i = 0; i < a.trace.chain.size(); ++i)
        CHECK(a.trace.chain[i].energy == b.trace.chain[i].energy);
    REQUIRE(a.posteriors.size() == b.posteriors.size());
    for (std::size_t j = 0; j < a.posteriors.size(); ++j)
        CHECK(a.posteriors.probs[j] == b.posteriors.probs[j]);
}

TEST_CASE("multi-seed selection keeps the best data likelihood") {
    const BiomarkerRegistry reg = uniform_registry(5, 2.5);
    const std::vector<int> truth{1, 0, 3, 4, 2};
    const Cohort cohort = gaussian_cohort(reg, truth, 80, 37);
    const auto dists = registry_dists(reg);
    const RankingProblem problem = single_partial_problem(reg, truth);

    InferenceConfig cfg;
    cfg.variant = InferenceVariant::BT;
    cfg.mcmc = MhConfig::inference(606);
    cfg.mcmc.iterations = 300;
    cfg.mcmc.burn_in = 0;

    cfg.n_seeds = 1;
    const InferenceResult one = multi_seed_infer(cohort, problem, cfg, dists);
    const InferenceResult single = jpm_infer(cohort, problem, cfg, dists);
    CHECK(one.best_ranking == single.best_ranking);
    CHECK(one.data_loglik == single.data_loglik);
    CHECK(one.seed_used == single.seed_used);

    cfg.n_seeds = 6;
    const InferenceResult picked = multi_seed_infer(cohort, problem, cfg, dists);
    for (int i = 0; i < cfg.n_seeds; ++i) {
        InferenceConfig sub = cfg;
        sub.mcmc.seed = derive_seed(cfg.mcmc.seed, static_cast<std::uint64_t>(i));
        const InferenceResult run = jpm_infer(cohort, problem, sub, dists);
        CHECK(picked.data_loglik >= run.data_loglik);
    }
}

TEST_CASE("baseline recovers a well-separated ordering") {
    const BiomarkerRegistry reg = uniform_registry(6, 5.0);
    const std::vector<int> truth{5, 1, 4, 0, 2, 3};
    const auto dists = registry_dists(reg);
    double tau_sum = 0.0;
    for (std::uint64_t rep = 0; rep < 10; ++rep) {
        const Cohort cohort = gaussian_cohort(reg, truth, 800, derive_seed(700, rep));
        InferenceConfig cfg;
        cfg.mcmc = MhConfig::inference(derive_seed(701, rep));
        const InferenceResult result = baseline_infer(cohort, cfg, dists);
        tau_sum += kendall_tau_normalized(result.best_ranking, AggregateRanking(truth));
    }
    CHECK(tau_sum / 10.0 <= 0.15);
}

TEST_CASE("tiny cohorts still yield full permutations") {
    const BiomarkerRegistry reg = uniform_registry(7, 1.2);
    RngStream order_rng(41);
    const std::vector<int> sigma = random_permutation(7, order_rng).order();
    const Cohort cohort = gaussian_cohort(reg, sigma, 10, 43);
    const auto dists = registry_dists(reg);
    const RankingProblem problem = single_partial_problem(reg, sigma);

    InferenceConfig cfg;
    cfg.mcmc = MhConfig::inference(5);
    cfg.mcmc.iterations = 400;
    cfg.mcmc.burn_in = 0;
    const InferenceResult base = baseline_infer(cohort, cfg, dists);
    CHECK(base.best_ranking.size() == 7);

    cfg.variant = InferenceVariant::PP;
    const InferenceResult jpm = jpm_infer(cohort, problem, cfg, dists);
    CHECK(jpm.best_ranking.size() == 7);
    CHECK(jpm.posteriors.size() == 10);
}

TEST_CASE("configuration and shape errors are rejected") {
    const BiomarkerRegistry reg = uniform_registry(4, 3.0);
    const std::vector<int> truth{0, 1, 2, 3};
    const Cohort cohort = gaussian_cohort(reg, truth, 20, 47);
    const auto dists = registry_dists(reg);

    InferenceConfig cfg;
    cfg.n_seeds = 0;
    CHECK_THROWS_AS(baseline_infer(cohort, cfg, dists), ConfigError);

    InferenceConfig neg;
    neg.variant = InferenceVariant::Mallows;
    neg.dispersion = -1.0;
    CHECK_THROWS_AS(baseline_infer(cohort, neg, dists), ConfigError);

    const BiomarkerRegistry other = uniform_registry(5, 3.0);
    const RankingProblem mismatched = single_partial_problem(other, {0, 1, 2, 3, 4});
    InferenceConfig ok;
    ok.mcmc.iterations = 50;
    ok.mcmc.burn_in = 0;
    CHECK_THROWS_AS(jpm_infer(cohort, mismatched, ok, dists), ConfigError);

    CHECK_THROWS_AS(inference_variant_from_name("bogus"), ConfigError);
    CHECK(inference_variant_from_name(inference_variant_name(InferenceVariant::PL)) ==
          InferenceVariant::PL);
}
