#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "jpm/energy.hpp"
#include "jpm/error.hpp"
#include "jpm/ranking.hpp"
#include "jpm/rng.hpp"

using namespace jpm;

namespace {

RankingProblem make_problem(int m, std::vector<PartialRanking> partials) {
    RankingProblem p;
    for (int i = 0; i < m; ++i) p.labels.push_back("item" + std::to_string(i));
    p.partials = std::move(partials);
    return p;
}

std::vector<AggregateRanking> all_rankings(int m) {
    std::vector<int> base(static_cast<std::size_t>(m));
    std::iota(base.begin(), base.end(), 0);
    std::vector<AggregateRanking> out;
    do {
        out.emplace_back(base);
    } while (std::next_permutation(base.begin(), base.end()));
    return out;
}

/// Random problem over m items: k partials of random length >= 2.
RankingProblem random_problem(int m, int k, RngStream& rng) {
    RankingProblem p;
    for (int i = 0; i < m; ++i) p.labels.push_back("item" + std::to_string(i));
    // first partial covers everything so the union invariant always holds
    p.partials.push_back({random_permutation(m, rng).order(), 1.0});
    for (int j = 1; j < k; ++j) {
        const auto perm = random_permutation(m, rng).order();
        const int len = 2 + static_cast<int>(rng.uniform_below(m - 1));
        p.partials.push_back({std::vector<int>(perm.begin(), perm.begin() + len), 1.0});
    }
    return p;
}

}  // namespace

TEST_CASE("pairwise weights accumulate signed, weighted votes") {
    auto m1 = fit_pairwise(make_problem(2, {{{0, 1}, 1.0}}));
    CHECK(m1.weight(0, 1) == 1.0);
    CHECK(m1.weight(1, 0) == -1.0);

    auto m2 = fit_pairwise(make_problem(2, {{{0, 1}, 1.0}, {{1, 0}, 1.0}}));
    CHECK(m2.weight(0, 1) == 0.0);

    auto m3 = fit_pairwise(make_problem(3, {{{0, 1, 2}, 1.0}, {{0, 2}, 1.0}}));
    CHECK(m3.weight(0, 2) == 2.0);
    CHECK(m3.weight(0, 1) == 1.0);
    CHECK(m3.weight(2, 0) == -2.0);

    auto m4 = fit_pairwise(make_problem(2, {{{0, 1}, 2.5}}));
    CHECK(m4.weight(0, 1) == 2.5);
}

TEST_CASE("pairwise energy pinned cases and antisymmetry") {
    auto model = fit_pairwise(make_problem(2, {{{0, 1}, 1.0}}));
    CHECK(energy_pairwise(model, AggregateRanking({0, 1})) == -1.0);
    CHECK(energy_pairwise(model, AggregateRanking({1, 0})) == 1.0);

    PairwiseModel zero;
    zero.m = 3;
    zero.weights.assign(9, 0.0);
    for (const auto& s : all_rankings(3)) CHECK(energy_pairwise(zero, s) == 0.0);

    RngStream rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        auto problem = random_problem(5, 3, rng);
        auto pm = fit_pairwise(problem);
        const auto sigma = random_permutation(5, rng);
        std::vector<int> rev(sigma.order().rbegin(), sigma.order().rend());
        CHECK(energy_pairwise(pm, sigma) ==
              doctest::Approx(-energy_pairwise(pm, AggregateRanking(rev))).epsilon(1e-12));
    }
}

TEST_CASE("pairwise energies sum to zero over all permutations") {
    RngStream rng(5);
    for (int m = 2; m <= 4; ++m) {
        auto problem = random_problem(m, 3, rng);
        auto model = fit_pairwise(problem);
        double total = 0.0;
        for (const auto& s : all_rankings(m)) total += energy_pairwise(model, s);
        CHECK(total == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("bradley-terry fit on symmetric evidence is flat") {
    auto model = fit_bradley_terry(make_problem(2, {{{0, 1}, 1.0}, {{1, 0}, 1.0}}));
    CHECK(model.strengths[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(model.strengths[1] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(bradley_terry_prob(model, 0, 1) == doctest::Approx(0.5));
    CHECK(model.count(0, 1) == 1);
    CHECK(model.count(1, 0) == 1);
}

TEST_CASE("bradley-terry 3:1 counts give a log-3 strength gap") {
    auto problem = make_problem(
        2, {{{0, 1}, 1.0}, {{0, 1}, 1.0}, {{0, 1}, 1.0}, {{1, 0}, 1.0}});
    auto model = fit_bradley_terry(problem);
    CHECK(model.count(0, 1) == 3);
    CHECK(model.count(1, 0) == 1);
    CHECK(model.strengths[0] - model.strengths[1] == doctest::Approx(std::log(3.0)).epsilon(1e-4));
    CHECK(bradley_terry_prob(model, 0, 1) == doctest::Approx(0.75).epsilon(1e-5));
    CHECK(model.strengths[0] + model.strengths[1] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("bradley-terry gradient vanishes at the fit") {
    RngStream rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        auto problem = random_problem(5, 4, rng);
        auto model = fit_bradley_terry(problem);
        const auto g = bt_gradient(model.counts, model.strengths);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double s = model.strengths[i];
            if (std::abs(s) >= kStrengthCap - 1e-9) continue;  // clamped coordinate
            CHECK(std::abs(g[i]) < 1e-6);
        }
    }
}

TEST_CASE("bt probability pair sums to one") {
    BradleyTerryModel m;
    m.strengths = {1.7, -0.4, -1.3};
    m.counts.assign(9, 0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j)
                CHECK(bradley_terry_prob(m, i, j) + bradley_terry_prob(m, j, i) ==
                      doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("bradley-terry aggregate energy pinned cases") {
    BradleyTerryModel flat;
    flat.strengths = {0.0, 0.0, 0.0};
    flat.counts.assign(9, 0);
    for (const auto& s : all_rankings(3))
        CHECK(energy_bradley_terry(flat, s) == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-12));

    BradleyTerryModel two;
    const double half_gap = std::log(3.0) / 2.0;
    two.strengths = {half_gap, -half_gap};
    two.counts.assign(4, 0);
    CHECK(energy_bradley_terry(two, AggregateRanking({0, 1})) ==
          doctest::Approx(-std::log(0.75)).epsilon(1e-12));
    CHECK(energy_bradley_terry(two, AggregateRanking({1, 0})) ==
          doctest::Approx(-std::log(0.25)).epsilon(1e-12));
    CHECK(energy_bradley_terry(two, AggregateRanking({0, 1})) <
          energy_bradley_terry(two, AggregateRanking({1, 0})));
}

TEST_CASE("bt energy is invariant to a common strength shift") {
    BradleyTerryModel m;
    m.strengths = {0.9, -0.2, -0.7};
    m.counts.assign(9, 0);
    BradleyTerryModel shifted = m;
    for (auto& s : shifted.strengths) s += 11.0;
    for (const auto& sigma : all_rankings(3))
        CHECK(energy_bradley_terry(m, sigma) ==
              doctest::Approx(energy_bradley_terry(shifted, sigma)).epsilon(1e-9));
}

TEST_CASE("degenerate comparison graphs stay bounded and decided") {
    // item 0 wins its only comparison: unbounded MLE, bounded fit
    auto model = fit_bradley_terry(make_problem(2, {{{0, 1}, 1.0}}));
    CHECK(std::abs(model.strengths[0]) <= kStrengthCap + 1e-9);
    CHECK(std::abs(model.strengths[1]) <= kStrengthCap + 1e-9);
    CHECK(bradley_terry_prob(model, 0, 1) > 1.0 - 1e-5);

    // a chain observed once: strengths decrease along it, all within the cap
    auto chain = fit_bradley_terry(make_problem(4, {{{0, 1, 2, 3}, 1.0}}));
    for (int i = 0; i + 1 < 4; ++i)
        CHECK(chain.strengths[static_cast<std::size_t>(i)] >
              chain.strengths[static_cast<std::size_t>(i + 1)]);
    for (double s : chain.strengths) CHECK(std::abs(s) <= kStrengthCap + 1e-9);
}

TEST_CASE("fit failure carries the last iterate") {
    auto problem = make_problem(
        2, {{{0, 1}, 1.0}, {{0, 1}, 1.0}, {{0, 1}, 1.0}, {{1, 0}, 1.0}});
    FitOptions opts;
    opts.max_iter = 0;
    CHECK_THROWS_AS(fit_bradley_terry(problem, opts), FitError);
    try {
        fit_bradley_terry(problem, opts);
    } catch (const FitError& e) {
        CHECK(e.last_iterate.size() == 2);
    }
}

TEST_CASE("plackett-luce fit on both orderings of a pair is flat") {
    auto model = fit_plackett_luce(make_problem(2, {{{0, 1}, 1.0}, {{1, 0}, 1.0}}));
    CHECK(model.scores[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(model.scores[1] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("plackett-luce log likelihood at zero scores is the uniform product") {
    auto problem = make_problem(3, {{{0, 1, 2}, 1.0}});
    CHECK(pl_log_likelihood(problem, {0.0, 0.0, 0.0}) ==
          doctest::Approx(-std::log(3.0) - std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("plackett-luce energy pinned cases") {
    PlackettLuceModel flat;
    flat.scores = {0.0, 0.0, 0.0};
    for (const auto& s : all_rankings(3))
        CHECK(energy_plackett_luce(flat, s) == doctest::Approx(std::log(6.0)).epsilon(1e-12));

    PlackettLuceModel m;
    m.scores = {0.4, 0.1, -0.5};
    const AggregateRanking sigma({1, 0, 2});
    const double base = energy_plackett_luce(m, sigma);
    PlackettLuceModel boosted = m;
    boosted.scores[1] += 0.3;  // raise the first-placed item
    CHECK(energy_plackett_luce(boosted, sigma) < base);
}

TEST_CASE("plackett-luce energies normalize over all permutations") {
    RngStream rng(11);
    for (int m = 2; m <= 5; ++m) {
        PlackettLuceModel model;
        for (int i = 0; i < m; ++i) model.scores.push_back(rng.normal(0.0, 1.5));
        double z = 0.0;
        for (const auto& s : all_rankings(m)) z += std::exp(-energy_plackett_luce(model, s));
        CHECK(z == doctest::Approx(1.0).epsilon(1e-9));
    }
    // also at a fitted model
    auto problem = make_problem(4, {{{0, 1, 2, 3}, 1.0}, {{2, 0, 3, 1}, 1.0}});
    auto fitted = fit_plackett_luce(problem);
    double z = 0.0;
    for (const auto& s : all_rankings(4)) z += std::exp(-energy_plackett_luce(fitted, s));
    CHECK(z == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("bt and pl gradients match central finite differences") {
    RngStream rng(13);
    auto problem = random_problem(5, 3, rng);
    const auto counts = pair_counts(problem);
    const double h = 1e-5;
    for (int point = 0; point < 10; ++point) {
        std::vector<double> theta;
        for (int i = 0; i < 5; ++i) theta.push_back(rng.normal(0.0, 1.0));

        const auto gbt = bt_gradient(counts, theta);
        const auto gpl = pl_gradient(problem, theta);
        for (std::size_t i = 0; i < theta.size(); ++i) {
            auto up = theta, dn = theta;
            up[i] += h;
            dn[i] -= h;
            const double fd_bt = (bt_log_likelihood(counts, up) - bt_log_likelihood(counts, dn)) / (2 * h);
            const double fd_pl = (pl_log_likelihood(problem, up) - pl_log_likelihood(problem, dn)) / (2 * h);
            CHECK(gbt[i] == doctest::Approx(fd_bt).epsilon(1e-4));
            CHECK(gpl[i] == doctest::Approx(fd_pl).epsilon(1e-4));
        }
    }
}

TEST_CASE("mallows fit takes the bt minimum-energy central ranking") {
    auto problem = make_problem(3, {{{0, 1, 2}, 1.0}, {{0, 1, 2}, 1.0}});
    RngStream rng(17);
    auto model = fit_mallows_bt_informed(problem, 10.0, 500, rng);
    CHECK(model.central.order() == std::vector<int>{0, 1, 2});
    CHECK(model.dispersion == 10.0);

    RngStream r1(99), r2(99);
    auto a = fit_mallows_bt_informed(problem, 1.0, 500, r1);
    auto b = fit_mallows_bt_informed(problem, 1.0, 500, r2);
    CHECK(a.central == b.central);

    CHECK_THROWS_AS(fit_mallows_bt_informed(problem, 0.0, 100, rng), ConfigError);
    CHECK_THROWS_AS(fit_mallows_bt_informed(problem, -1.0, 100, rng), ConfigError);
}

TEST_CASE("mallows energy pinned cases") {
    MallowsModel m;
    m.central = AggregateRanking({0, 1, 2});
    m.dispersion = 10.0;
    CHECK(energy_mallows(m, AggregateRanking({0, 1, 2})) == 0.0);
    CHECK(energy_mallows(m, AggregateRanking({2, 1, 0})) == doctest::Approx(10.0));
    m.dispersion = 1.0;
    CHECK(energy_mallows(m, AggregateRanking({0, 2, 1})) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("mallows energy is invariant under consistent relabeling") {
    MallowsModel m;
    m.central = AggregateRanking({2, 0, 3, 1});
    m.dispersion = 2.5;
    const AggregateRanking sigma({0, 2, 1, 3});
    // relabel i -> (i + 1) mod 4 in both central and sigma
    auto relabel = [](const AggregateRanking& r) {
        std::vector<int> out;
        for (int v : r.order()) out.push_back((v + 1) % 4);
        return AggregateRanking(out);
    };
    MallowsModel m2;
    m2.central = relabel(m.central);
    m2.dispersion = 2.5;
    CHECK(energy_mallows(m, sigma) == doctest::Approx(energy_mallows(m2, relabel(sigma))));
}

TEST_CASE("every energy prefers the unanimous order to its reverse") {
    auto problem = make_problem(3, {{{0, 1, 2}, 1.0}, {{0, 1, 2}, 1.0}});
    const AggregateRanking fwd({0, 1, 2});
    const AggregateRanking rev({2, 1, 0});
    RngStream rng(23);

    const auto pp = fit_pairwise(problem);
    CHECK(energy_pairwise(pp, fwd) < energy_pairwise(pp, rev));
    const auto bt = fit_bradley_terry(problem);
    CHECK(energy_bradley_terry(bt, fwd) < energy_bradley_terry(bt, rev));
    const auto pl = fit_plackett_luce(problem);
    CHECK(energy_plackett_luce(pl, fwd) < energy_plackett_luce(pl, rev));
    const auto mal = fit_mallows_bt_informed(problem, 1.0, 500, rng);
    CHECK(energy_mallows(mal, fwd) < energy_mallows(mal, rev));
}

TEST_CASE("energy_of dispatches across the model variant") {
    auto problem = make_problem(3, {{{0, 1, 2}, 1.0}, {{1, 0, 2}, 1.0}});
    const AggregateRanking sigma({0, 1, 2});
    EnergyModel pp = fit_pairwise(problem);
    CHECK(energy_of(pp, sigma) == energy_pairwise(std::get<PairwiseModel>(pp), sigma));
    EnergyModel bt = fit_bradley_terry(problem);
    CHECK(energy_of(bt, sigma) == energy_bradley_terry(std::get<BradleyTerryModel>(bt), sigma));
}

TEST_CASE("size mismatches are rejected") {
    PlackettLuceModel pl;
    pl.scores = {0.0, 0.0};
    CHECK_THROWS_AS(energy_plackett_luce(pl, AggregateRanking({0, 1, 2})), ConfigError);
    BradleyTerryModel bt;
    bt.strengths = {0.0, 0.0};
    bt.counts.assign(4, 0);
    CHECK_THROWS_AS(energy_bradley_terry(bt, AggregateRanking({0, 1, 2})), ConfigError);
}
