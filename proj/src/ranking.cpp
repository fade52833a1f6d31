#include "jpm/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "jpm/error.hpp"

namespace jpm {

AggregateRanking::AggregateRanking(std::vector<int> order) : order_(std::move(order)) {
    const int m = static_cast<int>(order_.size());
    std::vector<char> seen(static_cast<std::size_t>(m), 0);
    for (int item : order_) {
        if (item < 0 || item >= m)
            throw ConfigError("AggregateRanking: item id out of range");
        if (seen[static_cast<std::size_t>(item)])
            throw ConfigError("AggregateRanking: duplicate item id");
        seen[static_cast<std::size_t>(item)] = 1;
    }
}

std::vector<int> AggregateRanking::positions() const {
    std::vector<int> pos(order_.size());
    for (int p = 0; p < size(); ++p) pos[static_cast<std::size_t>(order_[static_cast<std::size_t>(p)])] = p;
    return pos;
}

void AggregateRanking::swap_positions(int a, int b) {
    if (a < 0 || b < 0 || a >= size() || b >= size())
        throw ConfigError("swap_positions: position out of range");
    std::swap(order_[static_cast<std::size_t>(a)], order_[static_cast<std::size_t>(b)]);
}

void PartialRanking::validate(int universe_size) const {
    if (items.empty()) throw ConfigError("PartialRanking: empty item list");
    if (!(weight >= 0.0)) throw ConfigError("PartialRanking: weight must be non-negative");
    std::unordered_set<int> seen;
    for (int item : items) {
        if (item < 0 || item >= universe_size)
            throw ConfigError("PartialRanking: item id out of range");
        if (!seen.insert(item).second)
            throw ConfigError("PartialRanking: duplicate item id");
    }
}

void RankingProblem::validate() const {
    if (labels.empty()) throw ConfigError("RankingProblem: no items");
    std::unordered_set<std::string> names(labels.begin(), labels.end());
    if (names.size() != labels.size())
        throw ConfigError("RankingProblem: duplicate item labels");
    if (partials.empty()) throw ConfigError("RankingProblem: no partial rankings");
    std::vector<char> covered(labels.size(), 0);
    for (const auto& p : partials) {
        p.validate(universe_size());
        for (int item : p.items) covered[static_cast<std::size_t>(item)] = 1;
    }
    for (std::size_t i = 0; i < covered.size(); ++i)
        if (!covered[i])
            throw ConfigError("RankingProblem: item '" + labels[i] +
                              "' appears in no partial ranking");
}

double kendall_tau_normalized(const AggregateRanking& a, const AggregateRanking& b) {
    if (a.size() != b.size())
        throw ConfigError("kendall_tau_normalized: rankings differ in size");
    const int m = a.size();
    if (m < 2) return 0.0;
    const std::vector<int> pa = a.positions();
    const std::vector<int> pb = b.positions();
    long long discordant = 0;
    long long total = 0;
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            const long long da = pa[static_cast<std::size_t>(i)] - pa[static_cast<std::size_t>(j)];
            const long long db = pb[static_cast<std::size_t>(i)] - pb[static_cast<std::size_t>(j)];
            if (da * db < 0) ++discordant;
            ++total;
        }
    }
    return static_cast<double>(discordant) / static_cast<double>(total);
}

double kendall_tau_restricted(const PartialRanking& a, const PartialRanking& b) {
    std::unordered_map<int, int> pos_a;
    for (int p = 0; p < a.size(); ++p) pos_a.emplace(a.items[static_cast<std::size_t>(p)], p);
    std::vector<int> common;          // common items in b's order
    std::vector<int> common_pos_a;    // their positions within a
    for (int p = 0; p < b.size(); ++p) {
        const int item = b.items[static_cast<std::size_t>(p)];
        auto it = pos_a.find(item);
        if (it != pos_a.end()) {
            common.push_back(item);
            common_pos_a.push_back(it->second);
        }
    }
    const int c = static_cast<int>(common.size());
    if (c < 2) return 0.0;
    long long discordant = 0;
    long long total = 0;
    // common is sorted by position in b, so a pair is discordant exactly
    // when the a-positions are out of increasing order.
    for (int i = 0; i < c; ++i) {
        for (int j = i + 1; j < c; ++j) {
            if (common_pos_a[static_cast<std::size_t>(i)] > common_pos_a[static_cast<std::size_t>(j)]) ++discordant;
            ++total;
        }
    }
    return static_cast<double>(discordant) / static_cast<double>(total);
}

double kendalls_w(const std::vector<AggregateRanking>& rankings) {
    const int k = static_cast<int>(rankings.size());
    if (k < 2) throw ConfigError("kendalls_w: need at least two rankings");
    const int m = rankings.front().size();
    if (m < 2) throw ConfigError("kendalls_w: need at least two items");
    for (const auto& r : rankings)
        if (r.size() != m) throw ConfigError("kendalls_w: rankings differ in size");
    std::vector<double> rank_sums(static_cast<std::size_t>(m), 0.0);
    for (const auto& r : rankings) {
        const std::vector<int> pos = r.positions();
        for (int i = 0; i < m; ++i)
            rank_sums[static_cast<std::size_t>(i)] += pos[static_cast<std::size_t>(i)] + 1;
    }
    const double mean = static_cast<double>(k) * (m + 1) / 2.0;
    double s = 0.0;
    for (double rs : rank_sums) s += (rs - mean) * (rs - mean);
    const double kk = static_cast<double>(k);
    const double mm = static_cast<double>(m);
    return 12.0 * s / (kk * kk * (mm * mm * mm - mm));
}

std::vector<double> average_ranks(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&x](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double shared = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = shared;
        i = j + 1;
    }
    return ranks;
}

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ConfigError("spearman_rho: inputs differ in length");
    const std::size_t n = x.size();
    if (n < 2) throw ConfigError("spearman_rho: need at least two observations");
    const std::vector<double> rx = average_ranks(x);
    const std::vector<double> ry = average_ranks(y);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = rx[i] - mx;
        const double dy = ry[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0))
        throw NumericalError("spearman_rho: zero rank variance");
    return sxy / std::sqrt(sxx * syy);
}

AggregateRanking random_permutation(int m, RngStream& rng) {
    if (m < 1) throw ConfigError("random_permutation: m must be at least 1");
    std::vector<int> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    for (int i = m - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng.uniform_below(i + 1));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    return AggregateRanking(std::move(order));
}

}  // namespace jpm
