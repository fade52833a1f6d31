#pragma once

// Rankings and rank statistics. An AggregateRanking is a strict total order
// over items 0..m-1 (order[p] = item at position p, position 0 earliest).
// A PartialRanking is a strict order over a subset of items.

#include <string>
#include <vector>

#include "jpm/rng.hpp"

namespace jpm {

class AggregateRanking {
public:
    AggregateRanking() = default;

    /// Validates that `order` is a permutation of 0..m-1.
    explicit AggregateRanking(std::vector<int> order);

    int size() const { return static_cast<int>(order_.size()); }
    const std::vector<int>& order() const { return order_; }
    int item_at(int position) const { return order_[static_cast<std::size_t>(position)]; }

    /// positions()[item] = position of the item in this ranking.
    std::vector<int> positions() const;

    void swap_positions(int a, int b);

    bool operator==(const AggregateRanking& other) const { return order_ == other.order_; }
    bool operator!=(const AggregateRanking& other) const { return order_ != other.order_; }

private:
    std::vector<int> order_;
};

struct PartialRanking {
    std::vector<int> items;  // item ids in ranked order, earliest first
    double weight = 1.0;

    int size() const { return static_cast<int>(items.size()); }
    void validate(int universe_size) const;
};

/// A set of partial rankings over a shared labeled item universe.
struct RankingProblem {
    std::vector<std::string> labels;        // labels[i] names item i
    std::vector<PartialRanking> partials;

    int universe_size() const { return static_cast<int>(labels.size()); }
    void validate() const;
};

/// Normalized Kendall distance: discordant pairs / comparable pairs, in
/// [0, 1]. Returns 0 when there are no comparable pairs.
double kendall_tau_normalized(const AggregateRanking& a, const AggregateRanking& b);

/// Same distance restricted to items the two partial rankings share.
/// Fewer than two common items gives 0.
double kendall_tau_restricted(const PartialRanking& a, const PartialRanking& b);

/// Kendall's coefficient of concordance across k >= 2 rankings of the same
/// m >= 2 items: W = 12 S / (k^2 (m^3 - m)).
double kendalls_w(const std::vector<AggregateRanking>& rankings);

/// Spearman rank correlation with average ranks for ties. Throws
/// NumericalError when either input has zero rank variance.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

/// Average (mid) ranks of `x`, 1-based: ties share the mean of the ranks
/// they occupy.
std::vector<double> average_ranks(const std::vector<double>& x);

/// Uniform random permutation of 0..m-1 (Fisher-Yates).
AggregateRanking random_permutation(int m, RngStream& rng);

}  // namespace jpm
