#include "jpm/suite.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <utility>

#include "jpm/error.hpp"
#include "jpm/serialize.hpp"

namespace jpm {
namespace {

void make_dirs(const std::filesystem::path& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw IoError("cannot create directory: " + path.string() + " (" + ec.message() + ")");
}

std::string ratio_tag(double ratio) { return format_double(ratio); }

}  // namespace

void SuiteVariant::validate() const {
    if (name.empty()) throw ConfigError("SuiteVariant: empty name");
    for (char c : name)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
            throw ConfigError("SuiteVariant: name '" + name + "' is not directory-safe");
    if (variant == GenVariant::Mallows && !dispersion)
        throw ConfigError("SuiteVariant: Mallows requires a dispersion");
    if (variant != GenVariant::Mallows && dispersion)
        throw ConfigError("SuiteVariant: dispersion only applies to Mallows");
    if (dispersion && !(*dispersion > 0.0))
        throw ConfigError("SuiteVariant: dispersion must be positive");
}

std::vector<SuiteVariant> default_suite_variants() {
    return {{"pp", GenVariant::PP, std::nullopt},
            {"bt", GenVariant::BT, std::nullopt},
            {"pl", GenVariant::PLDirect, std::nullopt},
            {"m1", GenVariant::Mallows, 1.0},
            {"m10", GenVariant::Mallows, 10.0}};
}

void SuiteOptions::validate() const {
    partials.validate();
    if (generation_iterations < 1)
        throw ConfigError("SuiteOptions: generation_iterations must be positive");
    if (single_cohort_scale < 1)
        throw ConfigError("SuiteOptions: single_cohort_scale must be positive");
}

SingleDiseaseView single_disease_view(const RankingProblem& parent, int partial_index) {
    parent.validate();
    if (partial_index < 0 || partial_index >= static_cast<int>(parent.partials.size()))
        throw ConfigError("single_disease_view: partial index out of range");
    const PartialRanking& partial = parent.partials[static_cast<std::size_t>(partial_index)];

    SingleDiseaseView view;
    view.parent_items = partial.items;
    std::sort(view.parent_items.begin(), view.parent_items.end());
    std::map<int, int> local_of;
    for (std::size_t l = 0; l < view.parent_items.size(); ++l) {
        local_of[view.parent_items[l]] = static_cast<int>(l);
        view.problem.labels.push_back(
            parent.labels[static_cast<std::size_t>(view.parent_items[l])]);
    }
    std::vector<int> local_items;
    local_items.reserve(partial.items.size());
    for (int item : partial.items) local_items.push_back(local_of.at(item));
    view.problem.partials.push_back(PartialRanking{local_items, partial.weight});
    view.truth = AggregateRanking(local_items);
    view.problem.validate();
    return view;
}

nlohmann::json generate_experiment_suite(const BiomarkerRegistry& registry,
                                         const std::vector<SuiteVariant>& variants,
                                         const std::vector<int>& experiment_ids,
                                         const std::vector<int>& sizes,
                                         const std::vector<double>& ratios, int replicates,
                                         std::uint64_t master_seed, const std::string& out_dir,
                                         const SuiteOptions& options) {
    if (variants.empty()) throw ConfigError("generate_experiment_suite: no variants");
    if (experiment_ids.empty()) throw ConfigError("generate_experiment_suite: no experiments");
    if (sizes.empty()) throw ConfigError("generate_experiment_suite: no cohort sizes");
    if (ratios.empty()) throw ConfigError("generate_experiment_suite: no healthy ratios");
    if (replicates < 1) throw ConfigError("generate_experiment_suite: replicates must be positive");
    options.validate();
    std::vector<std::string> seen_names;
    for (const SuiteVariant& v : variants) {
        v.validate();
        if (std::find(seen_names.begin(), seen_names.end(), v.name) != seen_names.end())
            throw ConfigError("generate_experiment_suite: duplicate variant name '" + v.name + "'");
        seen_names.push_back(v.name);
    }
    for (int j : sizes)
        if (j < 1) throw ConfigError("generate_experiment_suite: cohort size must be positive");
    for (double r : ratios)
        if (!(r >= 0.0 && r <= 1.0))
            throw ConfigError("generate_experiment_suite: healthy ratio must be in [0, 1]");

    const std::filesystem::path root(out_dir);
    make_dirs(root);

    nlohmann::json grid_variants = nlohmann::json::array();
    for (const SuiteVariant& v : variants) {
        nlohmann::json gv{{"name", v.name}, {"variant", ""}};
        switch (v.variant) {
            case GenVariant::PP: gv["variant"] = "pp"; break;
            case GenVariant::BT: gv["variant"] = "bt"; break;
            case GenVariant::PLDirect: gv["variant"] = "pl_direct"; break;
            case GenVariant::PLMcmc: gv["variant"] = "pl_mcmc"; break;
            case GenVariant::Mallows: gv["variant"] = "mallows"; break;
        }
        if (v.dispersion) gv["dispersion"] = *v.dispersion;
        grid_variants.push_back(std::move(gv));
    }

    nlohmann::json manifest{
        {"schema_version", 1},
        {"master_seed", master_seed},
        {"registry", nlohmann::json::parse(registry.to_json())},
        {"grid",
         {{"variants", std::move(grid_variants)},
          {"experiments", experiment_ids},
          {"sizes", sizes},
          {"ratios", ratios},
          {"replicates", replicates},
          {"partials",
           {{"min_partials", options.partials.min_partials},
            {"max_partials", options.partials.max_partials},
            {"min_length", options.partials.min_length},
            {"max_length", options.partials.max_length}}},
          {"generation",
           {{"iterations", options.generation_iterations},
            {"return_mode", options.generation_mode == ReturnMode::Best ? "best" : "final"},
            {"single_cohort_scale", options.single_cohort_scale}}}}},
        {"cells", nlohmann::json::array()}};

    std::uint64_t cell_index = 0;
    for (const SuiteVariant& v : variants) {
        for (int experiment_id : experiment_ids) {
            for (int j_size : sizes) {
                for (double ratio : ratios) {
                    for (int rep = 0; rep < replicates; ++rep) {
                        const std::uint64_t cell_seed = derive_seed(master_seed, cell_index);
                        ++cell_index;
                        const std::string rel_dir = "cells/" + v.name + "/exp" +
                                                    std::to_string(experiment_id) + "/J" +
                                                    std::to_string(j_size) + "_R" +
                                                    ratio_tag(ratio) + "/rep" +
                                                    std::to_string(rep);
                        make_dirs(root / rel_dir);

                        RngStream problem_rng(derive_seed(cell_seed, 1));
                        const RankingProblem problem =
                            random_partial_rankings(registry, options.partials, problem_rng);

                        MhConfig gen_cfg = MhConfig::generation(derive_seed(cell_seed, 2));
                        gen_cfg.iterations = options.generation_iterations;
                        gen_cfg.return_mode = options.generation_mode;
                        const AggregateRanking aggregate =
                            generate_aggregate(problem, v.variant, v.dispersion, gen_cfg);

                        const ExperimentConfig mixed_cfg =
                            ExperimentConfig::preset(experiment_id, j_size, ratio);
                        RngStream mixed_rng(derive_seed(cell_seed, 3));
                        const Cohort mixed =
                            generate_cohort(registry, problem, aggregate, mixed_cfg, mixed_rng);

                        write_json_file((root / rel_dir / "problem.json").string(),
                                        problem_to_json(problem));
                        write_text_file((root / rel_dir / "mixed.csv").string(),
                                        cohort_to_csv(mixed));

                        nlohmann::json truth{{"aggregate", ranking_to_json(aggregate)},
                                             {"variant", v.name},
                                             {"seed", cell_seed},
                                             {"singles", nlohmann::json::array()}};
                        if (v.dispersion) truth["dispersion"] = *v.dispersion;

                        nlohmann::json cell_singles = nlohmann::json::array();
                        for (std::size_t k = 0; k < problem.partials.size(); ++k) {
                            const SingleDiseaseView view =
                                single_disease_view(problem, static_cast<int>(k));
                            const ExperimentConfig single_cfg = ExperimentConfig::preset(
                                experiment_id, options.single_cohort_scale * j_size, ratio);
                            RngStream single_rng(derive_seed(cell_seed, 4 + k));
                            const Cohort single = generate_cohort(registry, view.problem,
                                                                  view.truth, single_cfg,
                                                                  single_rng);
                            const std::string csv_rel =
                                rel_dir + "/single_" + std::to_string(k) + ".csv";
                            write_text_file((root / csv_rel).string(), cohort_to_csv(single));
                            truth["singles"].push_back(
                                {{"partial_index", k},
                                 {"ranked_items", problem.partials[k].items},
                                 {"parent_items", view.parent_items},
                                 {"truth", ranking_to_json(view.truth)}});
                            cell_singles.push_back({{"partial_index", k},
                                                    {"cohort", csv_rel},
                                                    {"ranked_items", problem.partials[k].items}});
                        }
                        write_json_file((root / rel_dir / "truth.json").string(), truth);

                        manifest["cells"].push_back(
                            {{"variant", v.name},
                             {"experiment_id", experiment_id},
                             {"participants", j_size},
                             {"healthy_ratio", ratio},
                             {"replicate", rep},
                             {"seed", cell_seed},
                             {"dir", rel_dir},
                             {"problem", rel_dir + "/problem.json"},
                             {"truth", rel_dir + "/truth.json"},
                             {"mixed_cohort", rel_dir + "/mixed.csv"},
                             {"aggregate", ranking_to_json(aggregate)},
                             {"singles", std::move(cell_singles)}});
                    }
                }
            }
        }
    }

    write_json_file((root / "manifest.json").string(), manifest);
    return manifest;
}

}  // namespace jpm
