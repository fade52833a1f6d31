#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "jpm/ebm.hpp"
#include "jpm/error.hpp"
#include "jpm/ranking.hpp"
#include "jpm/rng.hpp"

using namespace jpm;

namespace {

Cohort make_cohort(int m, std::vector<Participant> parts) {
    Cohort c;
    for (int i = 0; i < m; ++i) {
        c.biomarker_ids.push_back(i);
        c.biomarker_names.push_back("bm" + std::to_string(i));
    }
    c.participants = std::move(parts);
    return c;
}

double gauss_pdf(double x, double mean, double std) {
    const double z = (x - mean) / std;
    return std::exp(-0.5 * z * z) / (std * std::sqrt(2.0 * std::acos(-1.0)));
}

// Independent re-implementation: enumerate stages, multiply raw densities.
double brute_force_ll(const Cohort& cohort, const AggregateRanking& sigma,
                      const std::vector<BiomarkerDist>& dists) {
    const int m = cohort.size();
    std::vector<int> col_of_item(static_cast<std::size_t>(m));
    for (int c = 0; c < m; ++c) col_of_item[static_cast<std::size_t>(cohort.biomarker_ids[static_cast<std::size_t>(c)])] = c;
    double total = 0.0;
    for (const auto& p : cohort.participants) {
        double person = 0.0;
        for (int k = 0; k <= m; ++k) {
            double prod = 1.0;
            for (int pos = 0; pos < m; ++pos) {
                const int col = col_of_item[static_cast<std::size_t>(sigma.order()[static_cast<std::size_t>(pos)])];
                const auto& d = dists[static_cast<std::size_t>(col)];
                const double x = p.values[static_cast<std::size_t>(col)];
                prod *= (pos < k) ? gauss_pdf(x, d.theta_mean, d.theta_std)
                                  : gauss_pdf(x, d.phi_mean, d.phi_std);
            }
            person += prod;
        }
        total += std::log(person / static_cast<double>(m + 1));
    }
    return total;
}

std::vector<int> identity_order(int m) {
    std::vector<int> v(static_cast<std::size_t>(m));
    std::iota(v.begin(), v.end(), 0);
    return v;
}

// Synthetic single-disease cohort drawn from a known ordering.
Cohort synthetic_cohort(const std::vector<int>& true_order, const std::vector<BiomarkerDist>& dists,
                        int n_diseased, int n_healthy, RngStream& rng) {
    const int m = static_cast<int>(true_order.size());
    std::vector<int> position(static_cast<std::size_t>(m));
    for (int p = 0; p < m; ++p) position[static_cast<std::size_t>(true_order[static_cast<std::size_t>(p)])] = p;
    Cohort c = make_cohort(m, {});
    int id = 0;
    for (int j = 0; j < n_healthy; ++j) {
        Participant p;
        p.id = "h" + std::to_string(id++);
        p.diseased = false;
        p.stage = 0.0;
        for (int b = 0; b < m; ++b)
            p.values.push_back(rng.normal(dists[static_cast<std::size_t>(b)].phi_mean,
                                          dists[static_cast<std::size_t>(b)].phi_std));
        c.participants.push_back(std::move(p));
    }
    for (int j = 0; j < n_diseased; ++j) {
        Participant p;
        p.id = "d" + std::to_string(id++);
        p.diseased = true;
        const int k = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(m + 1)));
        p.stage = static_cast<double>(k);
        for (int b = 0; b < m; ++b) {
            const auto& d = dists[static_cast<std::size_t>(b)];
            const bool post = position[static_cast<std::size_t>(b)] < k;
            p.values.push_back(post ? rng.normal(d.theta_mean, d.theta_std)
                                    : rng.normal(d.phi_mean, d.phi_std));
        }
        c.participants.push_back(std::move(p));
    }
    return c;
}

}  // namespace

TEST_CASE("single-biomarker likelihood is the two-term stage mixture") {
    Cohort c = make_cohort(1, {Participant{"p0", false, std::nullopt, {0.0}}});
    std::vector<BiomarkerDist> dists{BiomarkerDist{50.0, 1.0, 0.0, 1.0}};
    const double ll = ebm_log_likelihood(c, AggregateRanking({0}), dists);
    const double expected = std::log(0.5 * gauss_pdf(0.0, 0.0, 1.0));
    CHECK(ll == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("likelihood matches brute-force enumeration for small m") {
    RngStream rng(991);
    for (int m = 2; m <= 4; ++m) {
        for (int rep = 0; rep < 5; ++rep) {
            std::vector<BiomarkerDist> dists;
            for (int b = 0; b < m; ++b)
                dists.push_back(BiomarkerDist{rng.normal(3.0, 1.0), 0.5 + rng.uniform01(),
                                              rng.normal(0.0, 1.0), 0.5 + rng.uniform01()});
            std::vector<Participant> parts;
            for (int j = 0; j < 6; ++j) {
                Participant p;
                p.id = "p" + std::to_string(j);
                p.diseased = (j % 2 == 0);
                for (int b = 0; b < m; ++b) p.values.push_back(rng.normal(1.5, 2.0));
                parts.push_back(std::move(p));
            }
            Cohort c = make_cohort(m, std::move(parts));
            const AggregateRanking sigma(random_permutation(m, rng));
            const double fast = ebm_log_likelihood(c, sigma, dists);
            const double slow = brute_force_ll(c, sigma, dists);
            CHECK(fast == doctest::Approx(slow).epsilon(1e-9));
        }
    }
}

TEST_CASE("likelihood is invariant to participant order") {
    RngStream rng(7);
    std::vector<BiomarkerDist> dists{BiomarkerDist{4.0, 1.0, 0.0, 1.0},
                                     BiomarkerDist{2.0, 0.7, -1.0, 0.9}};
    std::vector<Participant> parts;
    for (int j = 0; j < 5; ++j)
        parts.push_back(Participant{"p" + std::to_string(j), true, std::nullopt,
                                    {rng.normal(1.0, 2.0), rng.normal(1.0, 2.0)}});
    Cohort a = make_cohort(2, parts);
    std::reverse(parts.begin(), parts.end());
    Cohort b = make_cohort(2, parts);
    const AggregateRanking sigma({1, 0});
    CHECK(ebm_log_likelihood(a, sigma, dists) == ebm_log_likelihood(b, sigma, dists));
}

TEST_CASE("likelihood is invariant to consistent biomarker relabeling") {
    RngStream rng(17);
    const int m = 4;
    std::vector<BiomarkerDist> dists;
    for (int b = 0; b < m; ++b)
        dists.push_back(BiomarkerDist{rng.normal(3.0, 1.0), 1.0, rng.normal(0.0, 1.0), 1.0});
    std::vector<Participant> parts;
    for (int j = 0; j < 4; ++j) {
        Participant p{"p" + std::to_string(j), true, std::nullopt, {}};
        for (int b = 0; b < m; ++b) p.values.push_back(rng.normal(1.0, 2.0));
        parts.push_back(std::move(p));
    }
    Cohort base = make_cohort(m, parts);
    const AggregateRanking sigma({2, 0, 3, 1});
    const double ref = ebm_log_likelihood(base, sigma, dists);

    // Relabel through the permutation relab: item i becomes relab[i], and the
    // cohort columns are re-ordered so ids stay sorted.
    const std::vector<int> relab{3, 1, 0, 2};
    Cohort shuffled = base;
    std::vector<BiomarkerDist> dists2(dists.size());
    for (int c = 0; c < m; ++c) {
        const int new_id = relab[static_cast<std::size_t>(c)];
        shuffled.biomarker_ids[static_cast<std::size_t>(new_id)] = new_id;
        shuffled.biomarker_names[static_cast<std::size_t>(new_id)] = base.biomarker_names[static_cast<std::size_t>(c)];
        dists2[static_cast<std::size_t>(new_id)] = dists[static_cast<std::size_t>(c)];
        for (std::size_t j = 0; j < parts.size(); ++j)
            shuffled.participants[j].values[static_cast<std::size_t>(new_id)] =
                base.participants[j].values[static_cast<std::size_t>(c)];
    }
    std::vector<int> order2;
    for (int item : sigma.order()) order2.push_back(relab[static_cast<std::size_t>(item)]);
    const double relabeled = ebm_log_likelihood(shuffled, AggregateRanking(order2), dists2);
    CHECK(ref == doctest::Approx(relabeled).epsilon(1e-12));
}

TEST_CASE("values within ten standard deviations never underflow") {
    const int m = 6;
    std::vector<BiomarkerDist> dists;
    std::vector<double> values;
    for (int b = 0; b < m; ++b) {
        dists.push_back(BiomarkerDist{10.0, 1.0, 0.0, 1.0});
        values.push_back(b % 2 == 0 ? 10.0 : -10.0);  // 10 std from one of the means
    }
    Cohort c = make_cohort(m, {Participant{"p0", true, std::nullopt, values}});
    const double ll = ebm_log_likelihood(c, AggregateRanking(identity_order(m)), dists);
    CHECK(std::isfinite(ll));
    const StagePosterior post = stage_posteriors(c, AggregateRanking(identity_order(m)), dists);
    double sum = 0.0;
    for (double p : post.probs[0]) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("extreme outliers hit the density floor but stay finite") {
    std::vector<BiomarkerDist> dists{BiomarkerDist{1.0, 0.01, 0.0, 0.01}};
    Cohort c = make_cohort(1, {Participant{"p0", true, std::nullopt, {1e9}}});
    const double ll = ebm_log_likelihood(c, AggregateRanking({0}), dists);
    CHECK(std::isfinite(ll));
    CHECK(ll == doctest::Approx(std::log(1e-300)).epsilon(1e-6));
}

TEST_CASE("stage posterior normalizes and tracks the obvious profiles") {
    RngStream rng(23);
    const int m = 5;
    std::vector<BiomarkerDist> dists;
    for (int b = 0; b < m; ++b)
        dists.push_back(BiomarkerDist{6.0 + b, 1.0, 0.0 - b, 1.0});
    std::vector<double> at_phi, at_theta, noisy;
    for (int b = 0; b < m; ++b) {
        at_phi.push_back(dists[static_cast<std::size_t>(b)].phi_mean);
        at_theta.push_back(dists[static_cast<std::size_t>(b)].theta_mean);
        noisy.push_back(rng.normal(3.0, 4.0));
    }
    Cohort c = make_cohort(m, {Participant{"healthy", false, std::nullopt, at_phi},
                               Participant{"late", true, std::nullopt, at_theta},
                               Participant{"noisy", true, std::nullopt, noisy}});
    const StagePosterior post = stage_posteriors(c, AggregateRanking(identity_order(m)), dists);
    REQUIRE(post.size() == 3);
    for (const auto& probs : post.probs) {
        REQUIRE(probs.size() == static_cast<std::size_t>(m + 1));
        double sum = 0.0;
        for (double p : probs) {
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    const auto argmax = [](const std::vector<double>& v) {
        return std::max_element(v.begin(), v.end()) - v.begin();
    };
    CHECK(argmax(post.probs[0]) == 0);
    CHECK(argmax(post.probs[1]) == m);
}

TEST_CASE("posterior is unchanged when every per-biomarker density scales by a constant") {
    // Single-participant cohort; build a second distribution set whose theta
    // and phi densities at the observed values are exactly half the original.
    const int m = 3;
    const std::vector<double> values{1.0, -0.5, 2.0};
    std::vector<BiomarkerDist> dists{BiomarkerDist{3.0, 1.0, 0.0, 1.0},
                                     BiomarkerDist{2.0, 0.8, -1.0, 1.2},
                                     BiomarkerDist{4.0, 1.5, 1.0, 0.6}};
    const double c = 0.5;
    const auto shifted_mean = [&](double x, double mean, double std) {
        // Solve gauss_pdf(x, mean', std) = c * gauss_pdf(x, mean, std).
        const double r2 = (x - mean) * (x - mean) - 2.0 * std * std * std::log(c);
        return x - std::sqrt(r2);
    };
    std::vector<BiomarkerDist> scaled;
    for (int b = 0; b < m; ++b) {
        const auto& d = dists[static_cast<std::size_t>(b)];
        const double x = values[static_cast<std::size_t>(b)];
        scaled.push_back(BiomarkerDist{shifted_mean(x, d.theta_mean, d.theta_std), d.theta_std,
                                       shifted_mean(x, d.phi_mean, d.phi_std), d.phi_std});
        CHECK(gauss_pdf(x, scaled.back().theta_mean, d.theta_std) ==
              doctest::Approx(c * gauss_pdf(x, d.theta_mean, d.theta_std)).epsilon(1e-12));
    }
    Cohort cohort = make_cohort(m, {Participant{"p0", true, std::nullopt, values}});
    const AggregateRanking sigma({1, 2, 0});
    const StagePosterior a = stage_posteriors(cohort, sigma, dists);
    const StagePosterior b = stage_posteriors(cohort, sigma, scaled);
    for (int k = 0; k <= m; ++k)
        CHECK(a.probs[0][static_cast<std::size_t>(k)] ==
              doctest::Approx(b.probs[0][static_cast<std::size_t>(k)]).epsilon(1e-9));
}

TEST_CASE("posterior argmax recovers the generating stage at five-sigma separation") {
    RngStream rng(4242);
    const int m = 4;
    std::vector<BiomarkerDist> dists;
    for (int b = 0; b < m; ++b) dists.push_back(BiomarkerDist{5.0, 1.0, 0.0, 1.0});
    const AggregateRanking sigma(identity_order(m));
    int hits = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        const int k = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(m + 1)));
        std::vector<double> values;
        for (int pos = 0; pos < m; ++pos)
            values.push_back(pos < k ? rng.normal(5.0, 1.0) : rng.normal(0.0, 1.0));
        Cohort c = make_cohort(m, {Participant{"p", true, std::nullopt, values}});
        const StagePosterior post = stage_posteriors(c, sigma, dists);
        const auto& probs = post.probs[0];
        const int est = static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
        if (est == k) ++hits;
    }
    CHECK(static_cast<double>(hits) / trials >= 0.8);
}

TEST_CASE("staging error is the mean absolute deviation of posterior means") {
    StagePosterior exact;
    exact.probs = {{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
    CHECK(staging_mae(exact, {1.0, 2.0}) == doctest::Approx(0.0));

    StagePosterior mid;
    mid.probs = {{0.0, 1.0, 0.0}, {0.0, 1.0, 0.0}};  // point estimates (1, 1)
    CHECK(staging_mae(mid, {0.0, 2.0}) == doctest::Approx(1.0));

    StagePosterior swapped;
    swapped.probs = {mid.probs[1], mid.probs[0]};
    CHECK(staging_mae(swapped, {2.0, 0.0}) == doctest::Approx(1.0));

    CHECK(staging_mae(mid, {0.5, 1.75}) == doctest::Approx((0.5 + 0.75) / 2.0));

    CHECK_THROWS_AS(staging_mae(mid, {}), ConfigError);
    CHECK_THROWS_AS(staging_mae(mid, {1.0}), ConfigError);
}

TEST_CASE("likelihood rejects misaligned rankings") {
    std::vector<BiomarkerDist> dists{BiomarkerDist{3.0, 1.0, 0.0, 1.0},
                                     BiomarkerDist{3.0, 1.0, 0.0, 1.0}};
    Cohort c = make_cohort(2, {Participant{"p0", false, std::nullopt, {0.1, 0.2}}});
    CHECK_THROWS_AS(ebm_log_likelihood(c, AggregateRanking({0}), {dists[0]}), ConfigError);
    Cohort odd = c;
    odd.biomarker_ids = {0, 7};
    CHECK_THROWS_AS(ebm_log_likelihood(odd, AggregateRanking({0, 1}), dists), ConfigError);
}

TEST_CASE("ordering recovery from a well-separated synthetic cohort") {
    const int m = 8;
    std::vector<BiomarkerDist> dists;
    for (int b = 0; b < m; ++b) dists.push_back(BiomarkerDist{5.0, 1.0, 0.0, 1.0});
    const std::vector<int> truth{3, 0, 6, 1, 7, 4, 2, 5};
    MhConfig cfg;
    cfg.iterations = 3000;
    double tau_sum = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        RngStream rng(derive_seed(555, seed));
        Cohort c = synthetic_cohort(truth, dists, 560, 240, rng);
        cfg.seed = derive_seed(777, seed);
        const auto [partial, est_dists] = estimate_partial_ranking(c, cfg);
        REQUIRE(partial.items.size() == static_cast<std::size_t>(m));
        tau_sum += kendall_tau_normalized(AggregateRanking(partial.items), AggregateRanking(truth));
        REQUIRE(est_dists.size() == static_cast<std::size_t>(m));
    }
    CHECK(tau_sum / 10.0 <= 0.1);
}

TEST_CASE("two-biomarker recovery is exact for strongly separated events") {
    const std::vector<int> truth{1, 0};
    std::vector<BiomarkerDist> dists{BiomarkerDist{8.0, 1.0, 0.0, 1.0},
                                     BiomarkerDist{8.0, 1.0, 0.0, 1.0}};
    MhConfig cfg;
    cfg.iterations = 200;
    int exact = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        RngStream rng(derive_seed(808, seed));
        Cohort c = synthetic_cohort(truth, dists, 100, 50, rng);
        cfg.seed = derive_seed(909, seed);
        const auto [partial, est_dists] = estimate_partial_ranking(c, cfg);
        if (partial.items == truth) ++exact;
    }
    CHECK(exact >= 9);
}

TEST_CASE("partial-ranking estimation is deterministic under a fixed seed") {
    const std::vector<int> truth{2, 0, 1};
    std::vector<BiomarkerDist> dists;
    for (int b = 0; b < 3; ++b) dists.push_back(BiomarkerDist{4.0, 1.0, 0.0, 1.0});
    RngStream rng(31);
    Cohort c = synthetic_cohort(truth, dists, 60, 30, rng);
    MhConfig cfg;
    cfg.iterations = 400;
    cfg.seed = 1234;
    const auto [p1, d1] = estimate_partial_ranking(c, cfg);
    const auto [p2, d2] = estimate_partial_ranking(c, cfg);
    CHECK(p1.items == p2.items);
    REQUIRE(d1.size() == d2.size());
    for (std::size_t b = 0; b < d1.size(); ++b) {
        CHECK(d1[b].theta_mean == d2[b].theta_mean);
        CHECK(d1[b].theta_std == d2[b].theta_std);
        CHECK(d1[b].phi_mean == d2[b].phi_mean);
        CHECK(d1[b].phi_std == d2[b].phi_std);
    }
}

TEST_CASE("partial-ranking estimation rejects degenerate cohorts") {
    std::vector<BiomarkerDist> dists{BiomarkerDist{4.0, 1.0, 0.0, 1.0}};
    RngStream rng(3);
    Cohort all_diseased = make_cohort(1, {Participant{"a", true, std::nullopt, {rng.normal()}},
                                          Participant{"b", true, std::nullopt, {rng.normal()}}});
    CHECK_THROWS_AS(estimate_partial_ranking(all_diseased, MhConfig{}), ConfigError);

    Cohort constant = make_cohort(1, {Participant{"a", true, std::nullopt, {2.0}},
                                      Participant{"b", true, std::nullopt, {2.0}},
                                      Participant{"c", false, std::nullopt, {0.1}},
                                      Participant{"d", false, std::nullopt, {0.3}}});
    CHECK_THROWS_AS(estimate_partial_ranking(constant, MhConfig{}), NumericalError);

    Cohort lone_healthy = make_cohort(1, {Participant{"a", true, std::nullopt, {2.0}},
                                          Participant{"b", true, std::nullopt, {2.5}},
                                          Participant{"c", false, std::nullopt, {0.1}}});
    CHECK_THROWS_AS(estimate_partial_ranking(lone_healthy, MhConfig{}), NumericalError);
}

TEST_CASE("single-biomarker cohorts return the trivial partial") {
    std::vector<BiomarkerDist> dists{BiomarkerDist{4.0, 1.0, 0.0, 1.0}};
    Cohort c = make_cohort(1, {Participant{"a", true, std::nullopt, {4.2}},
                               Participant{"b", true, std::nullopt, {3.7}},
                               Participant{"c", false, std::nullopt, {0.1}},
                               Participant{"d", false, std::nullopt, {-0.2}}});
    c.biomarker_ids = {9};
    const auto [partial, est] = estimate_partial_ranking(c, MhConfig{});
    CHECK(partial.items == std::vector<int>{9});
    CHECK(partial.weight == 1.0);
    REQUIRE(est.size() == 1);
    CHECK(est[0].theta_mean == doctest::Approx(3.95));
}

TEST_CASE("cohort validation catches structural problems") {
    Cohort empty;
    CHECK_THROWS_AS(empty.validate(), ConfigError);

    Cohort c = make_cohort(2, {Participant{"p", false, std::nullopt, {0.0, 1.0}}});
    c.validate();

    Cohort dup = c;
    dup.biomarker_ids = {0, 0};
    CHECK_THROWS_AS(dup.validate(), ConfigError);

    Cohort bad_stage = c;
    bad_stage.participants[0].stage = 3.5;  // m = 2
    CHECK_THROWS_AS(bad_stage.validate(), ConfigError);

    Cohort nan_value = c;
    nan_value.participants[0].values[1] = std::nan("");
    CHECK_THROWS_AS(nan_value.validate(), ConfigError);

    Cohort short_row = c;
    short_row.participants[0].values.pop_back();
    CHECK_THROWS_AS(short_row.validate(), ConfigError);

    const BiomarkerDist flat{1.0, 0.0, 0.0, 1.0};
    CHECK_THROWS_AS(flat.validate(), ConfigError);
}
