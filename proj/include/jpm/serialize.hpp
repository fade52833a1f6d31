#pragma once

// On-disk formats: JSON for rankings, problems, fitted energy models,
// biomarker distributions and inference results; long-format CSV for cohorts
// and chain traces. All floating-point text is written with enough digits to
// round-trip bit-exactly.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "jpm/ebm.hpp"
#include "jpm/energy.hpp"
#include "jpm/inference.hpp"
#include "jpm/ranking.hpp"

namespace jpm {

std::string format_double(double value);

nlohmann::json ranking_to_json(const AggregateRanking& ranking);
AggregateRanking ranking_from_json(const nlohmann::json& j);

nlohmann::json partial_to_json(const PartialRanking& partial);
PartialRanking partial_from_json(const nlohmann::json& j);

nlohmann::json problem_to_json(const RankingProblem& problem);
RankingProblem problem_from_json(const nlohmann::json& j);

/// Energy models carry a "variant" discriminator: "pp", "bt", "pl", or
/// "mallows".
nlohmann::json model_to_json(const EnergyModel& model);
EnergyModel model_from_json(const nlohmann::json& j);

/// Keyed by biomarker name; `names[i]` labels `dists[i]`.
nlohmann::json dists_to_json(const std::vector<std::string>& names,
                             const std::vector<BiomarkerDist>& dists);
std::vector<BiomarkerDist> dists_from_json(const nlohmann::json& j,
                                           const std::vector<std::string>& names);

/// Long format: participant_id,biomarker,value,diseased[,true_stage], one
/// row per (participant, biomarker). The stage column appears iff every
/// participant carries a stage.
std::string cohort_to_csv(const Cohort& cohort);

/// `labels[i]` names item i; the cohort's biomarker ids are resolved
/// through it. Columns keep the file's first-appearance order.
Cohort cohort_from_csv(const std::string& text, const std::vector<std::string>& labels);

/// iteration,energy,accepted[,data_loglik]; the fourth column appears when
/// `data_loglik` is non-empty and must then align with the chain.
std::string trace_to_csv(const SampleTrace& trace, const std::vector<double>& data_loglik);

/// Inference output without the chain (written separately as a trace CSV).
nlohmann::json result_to_json(const InferenceResult& result, const InferenceConfig& cfg,
                              const std::string& trace_path);

/// The fields of a result JSON needed to evaluate a stored run.
struct StoredResult {
    std::string variant;
    double dispersion = 1.0;
    std::uint64_t seed_used = 0;
    AggregateRanking best_ranking;
    double best_objective = 0.0;
    double data_loglik = 0.0;
    std::vector<double> stage_point_estimates;
    std::string trace_path;
};

StoredResult stored_result_from_json(const nlohmann::json& j);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace jpm
