#include "jpm/ebm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "jpm/error.hpp"

namespace jpm {

namespace {

constexpr double kLogFloor = -690.77552789821368;  // log(1e-300)
constexpr double kLogSqrt2Pi = 0.91893853320467274;

double gaussian_log_density(double x, double mean, double std) {
    const double z = (x - mean) / std;
    const double lp = -0.5 * z * z - std::log(std) - kLogSqrt2Pi;
    return std::max(lp, kLogFloor);
}

double logsumexp(const std::vector<double>& v) {
    double hi = -std::numeric_limits<double>::infinity();
    for (double x : v) hi = std::max(hi, x);
    if (hi == -std::numeric_limits<double>::infinity()) return hi;
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - hi);
    return hi + std::log(acc);
}

struct MomentEstimate {
    double mean = 0.0;
    double std = 0.0;
    std::size_t n = 0;
};

MomentEstimate sample_moments(const std::vector<double>& xs) {
    MomentEstimate m;
    m.n = xs.size();
    if (m.n == 0) return m;
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(m.n);
    if (m.n < 2) return m;
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(m.n - 1));
    return m;
}

/// Maps an item-id ranking onto cohort column order.
std::vector<int> to_column_order(const Cohort& cohort, const AggregateRanking& sigma) {
    if (sigma.size() != cohort.size())
        throw ConfigError("ebm: ranking size does not match cohort biomarkers");
    std::unordered_map<int, int> col_of;
    for (int c = 0; c < cohort.size(); ++c) col_of.emplace(cohort.biomarker_ids[static_cast<std::size_t>(c)], c);
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(sigma.size()));
    for (int item : sigma.order()) {
        auto it = col_of.find(item);
        if (it == col_of.end())
            throw ConfigError("ebm: ranking mentions item " + std::to_string(item) +
                              " absent from the cohort");
        order.push_back(it->second);
    }
    return order;
}

}  // namespace

void BiomarkerDist::validate() const {
    if (!(theta_std > 0.0) || !(phi_std > 0.0))
        throw ConfigError("BiomarkerDist: standard deviations must be positive");
    if (!std::isfinite(theta_mean) || !std::isfinite(phi_mean))
        throw ConfigError("BiomarkerDist: means must be finite");
}

void Cohort::validate() const {
    const std::size_t m = biomarker_ids.size();
    if (m == 0) throw ConfigError("Cohort: no biomarkers");
    if (biomarker_names.size() != m)
        throw ConfigError("Cohort: biomarker names misaligned with ids");
    std::unordered_set<int> ids(biomarker_ids.begin(), biomarker_ids.end());
    if (ids.size() != m) throw ConfigError("Cohort: duplicate biomarker ids");
    if (participants.empty()) throw ConfigError("Cohort: no participants");
    for (const auto& p : participants) {
        if (p.values.size() != m)
            throw ConfigError("Cohort: participant " + p.id + " has misaligned values");
        for (double v : p.values)
            if (!std::isfinite(v))
                throw ConfigError("Cohort: participant " + p.id + " has a non-finite value");
        if (p.stage && (!(*p.stage >= 0.0) || !(*p.stage <= static_cast<double>(m))))
            throw ConfigError("Cohort: participant " + p.id + " has a stage outside [0, m]");
    }
}

double StagePosterior::point_estimate(std::size_t j) const {
    const auto& p = probs[j];
    double mean = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) mean += static_cast<double>(k) * p[k];
    return mean;
}

EbmEvaluator::EbmEvaluator(const Cohort& cohort, const std::vector<BiomarkerDist>& dists) {
    cohort.validate();
    m_ = cohort.size();
    if (dists.size() != static_cast<std::size_t>(m_))
        throw ConfigError("EbmEvaluator: one distribution per biomarker required");
    for (const auto& d : dists) d.validate();
    rows_ = cohort.participants.size();
    theta_lp_.resize(rows_ * static_cast<std::size_t>(m_));
    phi_lp_.resize(rows_ * static_cast<std::size_t>(m_));
    phi_sum_.assign(rows_, 0.0);
    participant_ids_.reserve(rows_);
    for (std::size_t j = 0; j < rows_; ++j) {
        const auto& part = cohort.participants[j];
        participant_ids_.push_back(part.id);
        for (int c = 0; c < m_; ++c) {
            const double x = part.values[static_cast<std::size_t>(c)];
            const auto& d = dists[static_cast<std::size_t>(c)];
            const std::size_t at = j * static_cast<std::size_t>(m_) + static_cast<std::size_t>(c);
            theta_lp_[at] = gaussian_log_density(x, d.theta_mean, d.theta_std);
            phi_lp_[at] = gaussian_log_density(x, d.phi_mean, d.phi_std);
            phi_sum_[j] += phi_lp_[at];
        }
    }
}

std::vector<double> EbmEvaluator::stage_log_liks(std::size_t j, const std::vector<int>& order) const {
    std::vector<double> s(static_cast<std::size_t>(m_) + 1);
    const std::size_t base = j * static_cast<std::size_t>(m_);
    double acc = phi_sum_[j];
    s[0] = acc;
    for (int k = 1; k <= m_; ++k) {
        const auto col = static_cast<std::size_t>(order[static_cast<std::size_t>(k - 1)]);
        acc += theta_lp_[base + col] - phi_lp_[base + col];
        s[static_cast<std::size_t>(k)] = acc;
    }
    return s;
}

double EbmEvaluator::log_likelihood(const AggregateRanking& sigma) const {
    if (sigma.size() != m_)
        throw ConfigError("EbmEvaluator: ranking size does not match biomarkers");
    const auto& order = sigma.order();
    double total = 0.0;
    const double log_prior = std::log(static_cast<double>(m_) + 1.0);
    for (std::size_t j = 0; j < rows_; ++j)
        total += logsumexp(stage_log_liks(j, order)) - log_prior;
    return total;
}

StagePosterior EbmEvaluator::posteriors(const AggregateRanking& sigma) const {
    if (sigma.size() != m_)
        throw ConfigError("EbmEvaluator: ranking size does not match biomarkers");
    const auto& order = sigma.order();
    StagePosterior out;
    out.probs.resize(rows_);
    for (std::size_t j = 0; j < rows_; ++j) {
        auto s = stage_log_liks(j, order);
        const double z = logsumexp(s);
        if (!std::isfinite(z))
            throw NumericalError("stage_posteriors: all stage likelihoods vanish for participant " +
                                 participant_ids_[j]);
        for (auto& v : s) v = std::exp(v - z);
        out.probs[j] = std::move(s);
    }
    return out;
}

double ebm_log_likelihood(const Cohort& cohort, const AggregateRanking& sigma,
                          const std::vector<BiomarkerDist>& dists) {
    EbmEvaluator ev(cohort, dists);
    return ev.log_likelihood(AggregateRanking(to_column_order(cohort, sigma)));
}

StagePosterior stage_posteriors(const Cohort& cohort, const AggregateRanking& sigma,
                                const std::vector<BiomarkerDist>& dists) {
    EbmEvaluator ev(cohort, dists);
    return ev.posteriors(AggregateRanking(to_column_order(cohort, sigma)));
}

double staging_mae(const StagePosterior& posteriors, const std::vector<double>& truth) {
    if (truth.empty() || truth.size() != posteriors.size())
        throw ConfigError("staging_mae: ground-truth stages missing or misaligned");
    double total = 0.0;
    for (std::size_t j = 0; j < truth.size(); ++j)
        total += std::abs(posteriors.point_estimate(j) - truth[j]);
    return total / static_cast<double>(truth.size());
}

namespace {

struct LabeledMoments {
    std::vector<BiomarkerDist> dists;
};

/// Moment estimates from the diseased/healthy labels; throws on a group
/// that cannot pin down a variance.
std::vector<BiomarkerDist> labeled_moments(const Cohort& cohort) {
    const int m = cohort.size();
    std::vector<BiomarkerDist> dists(static_cast<std::size_t>(m));
    for (int c = 0; c < m; ++c) {
        std::vector<double> dis, healthy;
        for (const auto& p : cohort.participants)
            (p.diseased ? dis : healthy).push_back(p.values[static_cast<std::size_t>(c)]);
        const auto md = sample_moments(dis);
        const auto mh = sample_moments(healthy);
        const std::string& name = cohort.biomarker_names[static_cast<std::size_t>(c)];
        if (md.n < 2 || !(md.std > 0.0))
            throw NumericalError("estimate_partial_ranking: biomarker " + name +
                                 " has zero variance in the diseased group");
        if (mh.n < 2 || !(mh.std > 0.0))
            throw NumericalError("estimate_partial_ranking: biomarker " + name +
                                 " has zero variance in the healthy group");
        dists[static_cast<std::size_t>(c)] =
            BiomarkerDist{md.mean, md.std, mh.mean, mh.std};
    }
    return dists;
}

AggregateRanking best_ordering(const EbmEvaluator& ev, int m, const MhConfig& cfg,
                               std::uint64_t seed) {
    MhConfig chain = cfg;
    chain.seed = seed;
    chain.return_mode = ReturnMode::Best;
    RngStream rng(chain.seed);
    const SampleTrace trace = mh_minimize(
        [&ev](const AggregateRanking& s) { return -ev.log_likelihood(s); }, m, chain, rng);
    return trace.best;
}

/// One refinement pass: assign each diseased participant a MAP stage under
/// the current ordering, regroup values accordingly, and re-estimate the
/// moments. Groups that become degenerate keep their previous estimate.
std::vector<BiomarkerDist> refine_moments(const Cohort& cohort,
                                          const std::vector<BiomarkerDist>& current,
                                          const AggregateRanking& col_sigma) {
    const int m = cohort.size();
    const EbmEvaluator ev(cohort, current);
    const StagePosterior post = ev.posteriors(col_sigma);

    std::vector<int> position(static_cast<std::size_t>(m));  // column -> rank position
    for (int p = 0; p < m; ++p) position[static_cast<std::size_t>(col_sigma.order()[static_cast<std::size_t>(p)])] = p;

    std::vector<std::vector<double>> theta_vals(static_cast<std::size_t>(m));
    std::vector<std::vector<double>> phi_vals(static_cast<std::size_t>(m));
    for (std::size_t j = 0; j < cohort.participants.size(); ++j) {
        const auto& part = cohort.participants[j];
        int map_stage = 0;
        if (part.diseased) {
            const auto& pj = post.probs[j];
            map_stage = static_cast<int>(std::max_element(pj.begin(), pj.end()) - pj.begin());
        }
        for (int c = 0; c < m; ++c) {
            const bool post_event = part.diseased && position[static_cast<std::size_t>(c)] < map_stage;
            (post_event ? theta_vals : phi_vals)[static_cast<std::size_t>(c)].push_back(
                part.values[static_cast<std::size_t>(c)]);
        }
    }

    std::vector<BiomarkerDist> refined = current;
    for (int c = 0; c < m; ++c) {
        const auto mt = sample_moments(theta_vals[static_cast<std::size_t>(c)]);
        if (mt.n >= 2 && mt.std > 0.0) {
            refined[static_cast<std::size_t>(c)].theta_mean = mt.mean;
            refined[static_cast<std::size_t>(c)].theta_std = mt.std;
        }
        const auto mp = sample_moments(phi_vals[static_cast<std::size_t>(c)]);
        if (mp.n >= 2 && mp.std > 0.0) {
            refined[static_cast<std::size_t>(c)].phi_mean = mp.mean;
            refined[static_cast<std::size_t>(c)].phi_std = mp.std;
        }
    }
    return refined;
}

}  // namespace

std::pair<PartialRanking, std::vector<BiomarkerDist>> estimate_partial_ranking(
    const Cohort& cohort, const MhConfig& cfg) {
    cohort.validate();
    cfg.validate();
    bool any_diseased = false, any_healthy = false;
    for (const auto& p : cohort.participants) (p.diseased ? any_diseased : any_healthy) = true;
    if (!any_diseased || !any_healthy)
        throw ConfigError("estimate_partial_ranking: need both diseased and healthy participants");

    const int m = cohort.size();
    std::vector<BiomarkerDist> dists = labeled_moments(cohort);
    if (m == 1) {
        return {PartialRanking{{cohort.biomarker_ids.front()}, 1.0}, std::move(dists)};
    }

    const EbmEvaluator ev0(cohort, dists);
    const AggregateRanking sigma1 = best_ordering(ev0, m, cfg, derive_seed(cfg.seed, 1));

    dists = refine_moments(cohort, dists, sigma1);

    const EbmEvaluator ev1(cohort, dists);
    const AggregateRanking sigma2 = best_ordering(ev1, m, cfg, derive_seed(cfg.seed, 2));

    PartialRanking partial;
    partial.weight = 1.0;
    for (int col : sigma2.order())
        partial.items.push_back(cohort.biomarker_ids[static_cast<std::size_t>(col)]);
    return {std::move(partial), std::move(dists)};
}

}  // namespace jpm
