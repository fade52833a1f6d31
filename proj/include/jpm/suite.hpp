#pragma once

// Experiment-suite generation: the full sweep over (generation variant,
// experiment configuration, cohort size, healthy ratio, replicate), writing
// one mixed-pathology cohort plus one single-disease cohort per partial
// ranking, with ground truth and file layout captured in a JSON manifest.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "jpm/cohort.hpp"
#include "jpm/ranking.hpp"
#include "jpm/registry.hpp"
#include "jpm/sampling.hpp"

namespace jpm {

struct SuiteVariant {
    std::string name;  // manifest key and directory name, e.g. "pp", "m1"
    GenVariant variant = GenVariant::PP;
    std::optional<double> dispersion;  // Mallows only

    void validate() const;
};

/// The five generation models of the published sweep: pp, bt, pl (direct
/// sampling), m1, m10.
std::vector<SuiteVariant> default_suite_variants();

struct SuiteOptions {
    GenerationSpec partials;  // only the count/length ranges are read here
    long generation_iterations = 500;
    ReturnMode generation_mode = ReturnMode::Best;
    int single_cohort_scale = 4;  // single-disease cohorts use scale * J

    void validate() const;
};

/// One dataset of the sweep: a fresh random problem, an aggregate ranking
/// generated by the cell's variant, a mixed cohort, and per-partial
/// single-disease cohorts.
struct SuiteCell {
    std::string variant;
    int experiment_id = 0;
    int participants = 0;
    double healthy_ratio = 0.0;
    int replicate = 0;
    std::uint64_t seed = 0;
    std::string dir;  // relative to the suite root
};

/// The single-disease restriction of one partial ranking: a problem over the
/// partial's items (relabeled densely by ascending parent id) whose ground
/// truth is the partial's own order.
struct SingleDiseaseView {
    RankingProblem problem;
    AggregateRanking truth;
    std::vector<int> parent_items;  // parent_items[local id] = parent item id
};

SingleDiseaseView single_disease_view(const RankingProblem& parent, int partial_index);

/// Writes the sweep under out_dir (cohort CSVs, problem/truth JSONs,
/// manifest.json) and returns the manifest. Cell seeds derive from
/// master_seed by linear cell index.
nlohmann::json generate_experiment_suite(const BiomarkerRegistry& registry,
                                         const std::vector<SuiteVariant>& variants,
                                         const std::vector<int>& experiment_ids,
                                         const std::vector<int>& sizes,
                                         const std::vector<double>& ratios, int replicates,
                                         std::uint64_t master_seed, const std::string& out_dir,
                                         const SuiteOptions& options = {});

}  // namespace jpm
