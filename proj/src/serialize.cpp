#include "jpm/serialize.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <utility>
#include <variant>

#include "jpm/error.hpp"

namespace jpm {
namespace {

// Rethrows structural JSON failures (missing key, wrong type) as config
// errors so the CLI maps them to the config exit code.
template <typename Fn>
auto guarded(const char* label, Fn&& fn) {
    try {
        return fn();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string(label) + ": " + e.what());
    }
}

void check_csv_field(const std::string& field, const char* label) {
    if (field.find(',') != std::string::npos || field.find('\n') != std::string::npos)
        throw ConfigError(std::string(label) + ": field '" + field +
                          "' cannot be written to CSV");
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double parse_double(const std::string& field, const char* label) {
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0')
        throw ConfigError(std::string(label) + ": malformed number '" + field + "'");
    return v;
}

}  // namespace

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", value);
    if (std::strtod(buf, nullptr) != value) std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

nlohmann::json ranking_to_json(const AggregateRanking& ranking) {
    return nlohmann::json(ranking.order());
}

AggregateRanking ranking_from_json(const nlohmann::json& j) {
    return guarded("ranking_from_json", [&] {
        return AggregateRanking(j.get<std::vector<int>>());
    });
}

nlohmann::json partial_to_json(const PartialRanking& partial) {
    return nlohmann::json{{"items", partial.items}, {"weight", partial.weight}};
}

PartialRanking partial_from_json(const nlohmann::json& j) {
    return guarded("partial_from_json", [&] {
        PartialRanking partial;
        partial.items = j.at("items").get<std::vector<int>>();
        partial.weight = j.value("weight", 1.0);
        return partial;
    });
}

nlohmann::json problem_to_json(const RankingProblem& problem) {
    nlohmann::json partials = nlohmann::json::array();
    for (const PartialRanking& p : problem.partials) partials.push_back(partial_to_json(p));
    return nlohmann::json{{"labels", problem.labels}, {"partials", std::move(partials)}};
}

RankingProblem problem_from_json(const nlohmann::json& j) {
    RankingProblem problem = guarded("problem_from_json", [&] {
        RankingProblem p;
        p.labels = j.at("labels").get<std::vector<std::string>>();
        for (const nlohmann::json& pj : j.at("partials"))
            p.partials.push_back(partial_from_json(pj));
        return p;
    });
    problem.validate();
    return problem;
}

nlohmann::json model_to_json(const EnergyModel& model) {
    return std::visit(
        [](const auto& m) -> nlohmann::json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, PairwiseModel>)
                return {{"variant", "pp"}, {"m", m.m}, {"weights", m.weights}};
            else if constexpr (std::is_same_v<T, BradleyTerryModel>)
                return {{"variant", "bt"}, {"strengths", m.strengths}, {"counts", m.counts}};
            else if constexpr (std::is_same_v<T, PlackettLuceModel>)
                return {{"variant", "pl"}, {"scores", m.scores}};
            else
                return {{"variant", "mallows"},
                        {"central", ranking_to_json(m.central)},
                        {"dispersion", m.dispersion}};
        },
        model);
}

EnergyModel model_from_json(const nlohmann::json& j) {
    return guarded("model_from_json", [&]() -> EnergyModel {
        const std::string variant = j.at("variant").get<std::string>();
        if (variant == "pp") {
            PairwiseModel m;
            m.m = j.at("m").get<int>();
            m.weights = j.at("weights").get<std::vector<double>>();
            if (m.weights.size() !=
                static_cast<std::size_t>(m.m) * static_cast<std::size_t>(m.m))
                throw ConfigError("model_from_json: pairwise weight matrix size mismatch");
            return m;
        }
        if (variant == "bt") {
            BradleyTerryModel m;
            m.strengths = j.at("strengths").get<std::vector<double>>();
            m.counts = j.at("counts").get<std::vector<long long>>();
            if (m.counts.size() != m.strengths.size() * m.strengths.size())
                throw ConfigError("model_from_json: count matrix size mismatch");
            return m;
        }
        if (variant == "pl") {
            PlackettLuceModel m;
            m.scores = j.at("scores").get<std::vector<double>>();
            return m;
        }
        if (variant == "mallows") {
            MallowsModel m;
            m.central = ranking_from_json(j.at("central"));
            m.dispersion = j.at("dispersion").get<double>();
            return m;
        }
        throw ConfigError("model_from_json: unknown variant '" + variant + "'");
    });
}

nlohmann::json dists_to_json(const std::vector<std::string>& names,
                             const std::vector<BiomarkerDist>& dists) {
    if (names.size() != dists.size())
        throw ConfigError("dists_to_json: name/distribution count mismatch");
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < names.size(); ++i)
        j[names[i]] = {{"theta_mean", dists[i].theta_mean},
                       {"theta_std", dists[i].theta_std},
                       {"phi_mean", dists[i].phi_mean},
                       {"phi_std", dists[i].phi_std}};
    return j;
}

std::vector<BiomarkerDist> dists_from_json(const nlohmann::json& j,
                                           const std::vector<std::string>& names) {
    return guarded("dists_from_json", [&] {
        std::vector<BiomarkerDist> dists;
        dists.reserve(names.size());
        for (const std::string& name : names) {
            if (!j.contains(name))
                throw ConfigError("dists_from_json: no distribution for biomarker '" + name + "'");
            const nlohmann::json& d = j.at(name);
            dists.push_back(BiomarkerDist{d.at("theta_mean").get<double>(),
                                          d.at("theta_std").get<double>(),
                                          d.at("phi_mean").get<double>(),
                                          d.at("phi_std").get<double>()});
        }
        return dists;
    });
}

std::string cohort_to_csv(const Cohort& cohort) {
    cohort.validate();
    bool with_stage = true;
    for (const Participant& p : cohort.participants)
        if (!p.stage) with_stage = false;
    std::string out = "participant_id,biomarker,value,diseased";
    if (with_stage) out += ",true_stage";
    out += '\n';
    for (const std::string& name : cohort.biomarker_names)
        check_csv_field(name, "cohort_to_csv");
    for (const Participant& p : cohort.participants) {
        check_csv_field(p.id, "cohort_to_csv");
        for (std::size_t c = 0; c < cohort.biomarker_names.size(); ++c) {
            out += p.id;
            out += ',';
            out += cohort.biomarker_names[c];
            out += ',';
            out += format_double(p.values[c]);
            out += ',';
            out += p.diseased ? '1' : '0';
            if (with_stage) {
                out += ',';
                out += format_double(*p.stage);
            }
            out += '\n';
        }
    }
    return out;
}

Cohort cohort_from_csv(const std::string& text, const std::vector<std::string>& labels) {
    std::unordered_map<std::string, int> label_id;
    for (std::size_t i = 0; i < labels.size(); ++i)
        label_id.emplace(labels[i], static_cast<int>(i));

    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("cohort_from_csv: empty input");
    const bool with_stage = line == "participant_id,biomarker,value,diseased,true_stage";
    if (!with_stage && line != "participant_id,biomarker,value,diseased")
        throw ConfigError("cohort_from_csv: unexpected header '" + line + "'");
    const std::size_t n_fields = with_stage ? 5 : 4;

    Cohort cohort;
    std::unordered_map<std::string, int> column_of;   // biomarker name -> column
    std::unordered_map<std::string, std::size_t> row_of;  // participant id -> index
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_line(line);
        if (fields.size() != n_fields)
            throw ConfigError("cohort_from_csv: expected " + std::to_string(n_fields) +
                              " fields, got '" + line + "'");
        const auto label_it = label_id.find(fields[1]);
        if (label_it == label_id.end())
            throw ConfigError("cohort_from_csv: unknown biomarker '" + fields[1] + "'");
        auto [col_it, new_col] = column_of.emplace(
            fields[1], static_cast<int>(cohort.biomarker_names.size()));
        if (new_col) {
            cohort.biomarker_names.push_back(fields[1]);
            cohort.biomarker_ids.push_back(label_it->second);
        }
        auto [row_it, new_row] = row_of.emplace(fields[0], cohort.participants.size());
        if (new_row) {
            Participant p;
            p.id = fields[0];
            cohort.participants.push_back(std::move(p));
        }
        Participant& p = cohort.participants[row_it->second];
        const bool diseased = fields[3] == "1";
        if (!diseased && fields[3] != "0")
            throw ConfigError("cohort_from_csv: malformed diseased flag '" + fields[3] + "'");
        if (new_row) {
            p.diseased = diseased;
            if (with_stage) p.stage = parse_double(fields[4], "cohort_from_csv");
        } else if (p.diseased != diseased) {
            throw ConfigError("cohort_from_csv: participant '" + p.id +
                              "' changes diseased flag mid-file");
        }
        const std::size_t col = static_cast<std::size_t>(col_it->second);
        if (p.values.size() <= col) p.values.resize(col + 1);
        p.values[col] = parse_double(fields[2], "cohort_from_csv");
    }
    for (Participant& p : cohort.participants)
        p.values.resize(cohort.biomarker_names.size());
    cohort.validate();
    return cohort;
}

std::string trace_to_csv(const SampleTrace& trace, const std::vector<double>& data_loglik) {
    const bool with_loglik = !data_loglik.empty();
    if (with_loglik && data_loglik.size() != trace.chain.size())
        throw ConfigError("trace_to_csv: log-likelihood column does not align with the chain");
    std::string out = with_loglik ? "iteration,energy,accepted,data_loglik"
                                  : "iteration,energy,accepted";
    out += '\n';
    for (std::size_t i = 0; i < trace.chain.size(); ++i) {
        const ChainRecord& r = trace.chain[i];
        out += std::to_string(r.iteration);
        out += ',';
        out += format_double(r.energy);
        out += ',';
        out += r.accepted ? '1' : '0';
        if (with_loglik) {
            out += ',';
            out += format_double(data_loglik[i]);
        }
        out += '\n';
    }
    return out;
}

nlohmann::json result_to_json(const InferenceResult& result, const InferenceConfig& cfg,
                              const std::string& trace_path) {
    std::vector<double> stages;
    stages.reserve(static_cast<std::size_t>(result.posteriors.size()));
    for (std::size_t j = 0; j < result.posteriors.size(); ++j)
        stages.push_back(result.posteriors.point_estimate(j));
    return nlohmann::json{{"schema_version", 1},
                          {"variant", inference_variant_name(cfg.variant)},
                          {"dispersion", cfg.dispersion},
                          {"n_seeds", cfg.n_seeds},
                          {"seed_used", result.seed_used},
                          {"best_ranking", ranking_to_json(result.best_ranking)},
                          {"best_objective", result.best_objective},
                          {"data_loglik", result.data_loglik},
                          {"stage_point_estimates", stages},
                          {"trace_path", trace_path}};
}

StoredResult stored_result_from_json(const nlohmann::json& j) {
    return guarded("stored_result_from_json", [&] {
        StoredResult r;
        r.variant = j.at("variant").get<std::string>();
        r.dispersion = j.value("dispersion", 1.0);
        r.seed_used = j.at("seed_used").get<std::uint64_t>();
        r.best_ranking = ranking_from_json(j.at("best_ranking"));
        r.best_objective = j.at("best_objective").get<double>();
        r.data_loglik = j.at("data_loglik").get<double>();
        r.stage_point_estimates = j.at("stage_point_estimates").get<std::vector<double>>();
        r.trace_path = j.value("trace_path", std::string());
        return r;
    });
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("cannot read file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path);
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out.good()) throw IoError("write failed: " + path);
}

nlohmann::json read_json_file(const std::string& path) {
    const std::string text = read_text_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed JSON in " + path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace jpm
