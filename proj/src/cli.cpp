#include "jpm/cli.hpp"

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "jpm/cohort.hpp"
#include "jpm/ebm.hpp"
#include "jpm/error.hpp"
#include "jpm/inference.hpp"
#include "jpm/metrics.hpp"
#include "jpm/registry.hpp"
#include "jpm/serialize.hpp"
#include "jpm/suite.hpp"

namespace fs = std::filesystem;

namespace jpm {
namespace {

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

template <typename Fn>
auto cfg_guard(const std::string& what, Fn&& fn) {
    try {
        return fn();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(what + ": " + e.what());
    }
}

void make_dirs(const fs::path& path) {
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) throw IoError("cannot create directory: " + path.string() + " (" + ec.message() + ")");
}

std::uint64_t parse_seed(const std::string& text, const std::string& what) {
    if (text.empty()) throw ConfigError(what + ": empty seed");
    char* end = nullptr;
    errno = 0;
    const unsigned long long value = std::strtoull(text.c_str(), &end, 10);
    if (*end != '\0' || errno != 0)
        throw ConfigError(what + ": cannot parse seed '" + text + "'");
    return static_cast<std::uint64_t>(value);
}

/// Bounded worker pool over independent tasks; outputs must not depend on
/// execution order. The lowest-index failure is rethrown after all join.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    const std::size_t workers = std::min(static_cast<std::size_t>(jobs), n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    body(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Rethrows the cell-scoped error with the cell directory prepended, keeping
/// the exception type (and therefore the exit code).
template <typename Fn>
void with_cell_context(const std::string& cell, Fn&& fn) {
    const auto prefix = [&cell](const char* what) { return "cell " + cell + ": " + what; };
    try {
        fn();
    } catch (const ConfigError& e) {
        throw ConfigError(prefix(e.what()));
    } catch (const MissingInputError& e) {
        throw MissingInputError(prefix(e.what()));
    } catch (const IoError& e) {
        throw IoError(prefix(e.what()));
    } catch (const FitError&) {
        throw;  // carries the last iterate; do not rewrap
    } catch (const NumericalError& e) {
        throw NumericalError(prefix(e.what()));
    }
}

GenVariant gen_variant_from_string(const std::string& name) {
    if (name == "pp") return GenVariant::PP;
    if (name == "bt") return GenVariant::BT;
    if (name == "pl" || name == "pl_direct") return GenVariant::PLDirect;
    if (name == "pl_mcmc") return GenVariant::PLMcmc;
    if (name == "mallows") return GenVariant::Mallows;
    throw ConfigError("unknown generative variant: " + name);
}

std::string gen_variant_to_string(GenVariant variant) {
    switch (variant) {
        case GenVariant::PP: return "pp";
        case GenVariant::BT: return "bt";
        case GenVariant::PLDirect: return "pl_direct";
        case GenVariant::PLMcmc: return "pl_mcmc";
        case GenVariant::Mallows: return "mallows";
    }
    throw ConfigError("unknown generative variant value");
}

ReturnMode return_mode_from_string(const std::string& name) {
    if (name == "best") return ReturnMode::Best;
    if (name == "final") return ReturnMode::Final;
    throw ConfigError("unknown return mode: " + name + " (expected best|final)");
}

SuiteVariant canonical_variant(const std::string& name) {
    for (const SuiteVariant& v : default_suite_variants())
        if (v.name == name) return v;
    throw ConfigError("unknown canonical variant '" + name + "' (expected pp|bt|pl|m1|m10)");
}

std::vector<SuiteVariant> variants_from_json(const nlohmann::json& arr) {
    std::vector<SuiteVariant> out;
    for (const auto& v : arr) {
        if (v.is_string()) {
            out.push_back(canonical_variant(v.get<std::string>()));
            continue;
        }
        SuiteVariant sv;
        sv.name = v.at("name").get<std::string>();
        sv.variant = gen_variant_from_string(v.at("variant").get<std::string>());
        if (v.contains("dispersion")) sv.dispersion = v.at("dispersion").get<double>();
        out.push_back(sv);
    }
    return out;
}

nlohmann::json variants_to_json(const std::vector<SuiteVariant>& variants) {
    nlohmann::json arr = nlohmann::json::array();
    for (const SuiteVariant& v : variants) {
        nlohmann::json jv{{"name", v.name}, {"variant", gen_variant_to_string(v.variant)}};
        if (v.dispersion) jv["dispersion"] = *v.dispersion;
        arr.push_back(std::move(jv));
    }
    return arr;
}

nlohmann::json load_config_file(const std::string& path) {
    const nlohmann::json j = read_json_file(path);
    if (!j.is_object()) throw ConfigError(path + ": config must be a JSON object");
    if (!j.contains("schema_version"))
        throw ConfigError(path + ": config lacks a schema_version field");
    if (j.at("schema_version") != 1)
        throw ConfigError(path + ": unsupported schema_version (expected 1)");
    return j;
}

template <typename T>
void overlay(const nlohmann::json& cfg, const char* key, T& value) {
    if (!cfg.contains(key)) return;
    cfg_guard(std::string("config field '") + key + "'",
              [&] { value = cfg.at(key).get<T>(); });
}

struct SuiteRef {
    nlohmann::json manifest;
    fs::path root;
};

SuiteRef load_suite(const std::string& manifest_path) {
    SuiteRef ref;
    ref.manifest = read_json_file(manifest_path);
    cfg_guard(manifest_path, [&] {
        if (ref.manifest.at("schema_version") != 1)
            throw ConfigError(manifest_path + ": unsupported manifest schema_version");
    });
    ref.root = fs::path(manifest_path).parent_path();
    return ref;
}

// ---------------------------------------------------------------------------
// Tidy report rows
// ---------------------------------------------------------------------------

struct ReportRow {
    std::string generative_variant;
    std::string inference_variant;
    int experiment_id = 0;
    int replicate = 0;
    std::string metric;
    double value = 0.0;
};

std::string rows_to_csv(const std::vector<ReportRow>& rows) {
    std::ostringstream out;
    out << "generative_variant,inference_variant,experiment_id,replicate,metric,value\n";
    for (const ReportRow& r : rows)
        out << r.generative_variant << ',' << r.inference_variant << ',' << r.experiment_id
            << ',' << r.replicate << ',' << r.metric << ',' << format_double(r.value) << '\n';
    return out.str();
}

struct GroupStat {
    std::string generative_variant;
    std::string inference_variant;
    std::string metric;
    MeanCi stat;
};

/// Means with CIs per (generative, inference, metric) group, in first-
/// appearance order of the rows.
std::vector<GroupStat> summarize(const std::vector<ReportRow>& rows) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<double>> values;
    std::map<std::string, const ReportRow*> exemplar;
    for (const ReportRow& r : rows) {
        const std::string key =
            r.generative_variant + '\n' + r.inference_variant + '\n' + r.metric;
        if (!values.count(key)) {
            order.push_back(key);
            exemplar[key] = &r;
        }
        values[key].push_back(r.value);
    }
    std::vector<GroupStat> out;
    for (const std::string& key : order) {
        const ReportRow* r = exemplar[key];
        out.push_back({r->generative_variant, r->inference_variant, r->metric,
                       mean_ci(values[key])});
    }
    return out;
}

std::string summary_to_csv(const std::vector<GroupStat>& groups) {
    std::ostringstream out;
    out << "generative_variant,inference_variant,metric,mean,ci95,n\n";
    for (const GroupStat& g : groups)
        out << g.generative_variant << ',' << g.inference_variant << ',' << g.metric << ','
            << format_double(g.stat.mean) << ',' << format_double(g.stat.ci95) << ','
            << g.stat.n << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateConfig {
    std::string out_dir;
    std::uint64_t master_seed = 0;
    std::vector<SuiteVariant> variants = default_suite_variants();
    std::vector<int> experiments = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::vector<int> sizes = {50};
    std::vector<double> ratios = {0.5};
    int replicates = 2;
    SuiteOptions options;
};

nlohmann::json generate_snapshot(const GenerateConfig& cfg) {
    return nlohmann::json{
        {"schema_version", 1},
        {"command", "generate"},
        {"out_dir", cfg.out_dir},
        {"master_seed", cfg.master_seed},
        {"variants", variants_to_json(cfg.variants)},
        {"experiments", cfg.experiments},
        {"sizes", cfg.sizes},
        {"ratios", cfg.ratios},
        {"replicates", cfg.replicates},
        {"partials",
         {{"min_partials", cfg.options.partials.min_partials},
          {"max_partials", cfg.options.partials.max_partials},
          {"min_length", cfg.options.partials.min_length},
          {"max_length", cfg.options.partials.max_length}}},
        {"generation",
         {{"iterations", cfg.options.generation_iterations},
          {"return_mode",
           cfg.options.generation_mode == ReturnMode::Best ? "best" : "final"},
          {"single_cohort_scale", cfg.options.single_cohort_scale}}}};
}

void cmd_generate(const GenerateConfig& cfg) {
    if (cfg.out_dir.empty()) throw ConfigError("generate: an output directory is required");
    make_dirs(cfg.out_dir);
    write_json_file((fs::path(cfg.out_dir) / "config.snapshot.json").string(),
                    generate_snapshot(cfg));
    const nlohmann::json manifest = generate_experiment_suite(
        BiomarkerRegistry::builtin(), cfg.variants, cfg.experiments, cfg.sizes, cfg.ratios,
        cfg.replicates, cfg.master_seed, cfg.out_dir, cfg.options);
    std::cout << "generate: wrote " << manifest.at("cells").size() << " cells to "
              << cfg.out_dir << "\n";
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitConfig {
    std::string problem_path;
    std::string out_path;
    std::string variant = "pp";
    std::optional<double> dispersion;
    std::uint64_t seed = 0;
    long iterations = 20000;
};

void cmd_fit(const FitConfig& cfg) {
    if (cfg.problem_path.empty()) throw ConfigError("fit: an input problem JSON is required");
    if (cfg.out_path.empty()) throw ConfigError("fit: an output path is required");
    const RankingProblem problem = problem_from_json(read_json_file(cfg.problem_path));
    RngStream rng(cfg.seed);
    const EnergyModel model = fit_generation_model(
        problem, gen_variant_from_string(cfg.variant), cfg.dispersion, cfg.iterations, rng);

    const fs::path out(cfg.out_path);
    if (!out.parent_path().empty()) make_dirs(out.parent_path());
    nlohmann::json snapshot{{"schema_version", 1},
                            {"command", "fit"},
                            {"problem", cfg.problem_path},
                            {"out", cfg.out_path},
                            {"variant", cfg.variant},
                            {"master_seed", cfg.seed},
                            {"iterations", cfg.iterations}};
    if (cfg.dispersion) snapshot["dispersion"] = *cfg.dispersion;
    const fs::path snap_dir = out.parent_path().empty() ? fs::path(".") : out.parent_path();
    write_json_file((snap_dir / "config.snapshot.json").string(), snapshot);
    write_json_file(cfg.out_path, model_to_json(model));
    std::cout << "fit: " << cfg.variant << " model over " << problem.labels.size()
              << " items -> " << cfg.out_path << "\n";
}

// ---------------------------------------------------------------------------
// infer
// ---------------------------------------------------------------------------

struct InferConfig {
    std::string manifest;
    std::string out_dir;
    std::string variant = "none";
    double dispersion = 1.0;
    int n_seeds = 10;
    long iterations = 20000;
    long burn_in = 500;
    std::uint64_t master_seed = 0;
    bool seed_set = false;  // falls back to the manifest's master seed
    bool use_true_partials = false;
    int jobs = 1;
};

nlohmann::json infer_snapshot(const InferConfig& cfg) {
    return nlohmann::json{{"schema_version", 1},
                          {"command", "infer"},
                          {"manifest", cfg.manifest},
                          {"out_dir", cfg.out_dir},
                          {"variant", cfg.variant},
                          {"dispersion", cfg.dispersion},
                          {"n_seeds", cfg.n_seeds},
                          {"iterations", cfg.iterations},
                          {"burn_in", cfg.burn_in},
                          {"master_seed", cfg.master_seed},
                          {"use_true_partials", cfg.use_true_partials}};
}

void cmd_infer(InferConfig cfg) {
    if (cfg.manifest.empty()) throw ConfigError("infer: a manifest path is required");
    if (cfg.out_dir.empty()) throw ConfigError("infer: an output directory is required");
    const SuiteRef suite = load_suite(cfg.manifest);
    if (!cfg.seed_set)
        cfg.master_seed = cfg_guard("manifest master_seed", [&] {
            return suite.manifest.at("master_seed").get<std::uint64_t>();
        });
    const InferenceVariant variant = inference_variant_from_name(cfg.variant);
    const auto& cells = suite.manifest.at("cells");
    if (cells.empty()) throw MissingInputError("infer: the manifest lists no cells");

    const fs::path out_root(cfg.out_dir);
    make_dirs(out_root);
    write_json_file((out_root / "config.snapshot.json").string(), infer_snapshot(cfg));

    const std::string vname = inference_variant_name(variant);
    std::atomic<int> ran{0}, skipped{0};
    parallel_for(cells.size(), cfg.jobs, [&](std::size_t i) {
        const nlohmann::json& cell = cells[i];
        const std::string dir = cfg_guard("manifest cell", [&] {
            return cell.at("dir").get<std::string>();
        });
        with_cell_context(dir, [&] {
            const fs::path cell_out = out_root / dir;
            const fs::path result_path = cell_out / (vname + ".json");
            const fs::path trace_path = cell_out / (vname + "_trace.csv");
            if (fs::exists(result_path) && fs::exists(trace_path)) {
                ++skipped;
                return;
            }
            make_dirs(cell_out);
            const std::uint64_t cell_base = derive_seed(cfg.master_seed, i);

            const RankingProblem problem = problem_from_json(
                read_json_file((suite.root / cell.at("problem").get<std::string>()).string()));
            const Cohort mixed = cohort_from_csv(
                read_text_file(
                    (suite.root / cell.at("mixed_cohort").get<std::string>()).string()),
                problem.labels);

            // Biomarker distributions are estimated once per cell from the
            // mixed cohort and cached; columns realign by name on reload.
            std::vector<BiomarkerDist> dists;
            const fs::path dists_path = cell_out / "dists.json";
            if (fs::exists(dists_path)) {
                dists = dists_from_json(read_json_file(dists_path.string()),
                                        mixed.biomarker_names);
            } else {
                MhConfig est = MhConfig::inference(derive_seed(cell_base, 5));
                est.iterations = cfg.iterations;
                est.burn_in = cfg.burn_in;
                dists = estimate_partial_ranking(mixed, est).second;
                write_json_file(dists_path.string(),
                                dists_to_json(mixed.biomarker_names, dists));
            }

            InferenceConfig run_cfg;
            run_cfg.variant = variant;
            run_cfg.dispersion = cfg.dispersion;
            run_cfg.n_seeds = cfg.n_seeds;
            run_cfg.mcmc = MhConfig::inference(derive_seed(cell_base, 1));
            run_cfg.mcmc.iterations = cfg.iterations;
            run_cfg.mcmc.burn_in = cfg.burn_in;
            run_cfg.mcmc.record_chain = true;

            InferenceResult result;
            if (variant == InferenceVariant::None) {
                result = baseline_infer(mixed, run_cfg, dists);
            } else {
                RankingProblem jpm_problem;
                if (cfg.use_true_partials) {
                    jpm_problem = problem;
                } else {
                    const fs::path partials_path = cell_out / "partials.json";
                    if (fs::exists(partials_path)) {
                        jpm_problem = problem_from_json(read_json_file(partials_path.string()));
                    } else {
                        jpm_problem.labels = problem.labels;
                        const auto& singles = cell.at("singles");
                        for (std::size_t k = 0; k < singles.size(); ++k) {
                            const Cohort single = cohort_from_csv(
                                read_text_file((suite.root /
                                                singles[k].at("cohort").get<std::string>())
                                                   .string()),
                                problem.labels);
                            MhConfig est = MhConfig::inference(derive_seed(cell_base, 10 + k));
                            est.iterations = cfg.iterations;
                            est.burn_in = cfg.burn_in;
                            jpm_problem.partials.push_back(
                                estimate_partial_ranking(single, est).first);
                        }
                        jpm_problem.validate();
                        write_json_file(partials_path.string(), problem_to_json(jpm_problem));
                    }
                }
                result = multi_seed_infer(mixed, jpm_problem, run_cfg, dists);
            }

            write_text_file(trace_path.string(),
                            trace_to_csv(result.trace, result.chain_data_loglik));
            write_json_file(result_path.string(),
                            result_to_json(result, run_cfg, vname + "_trace.csv"));
            ++ran;
        });
    });
    std::cout << "infer: variant " << vname << ", " << ran << " cells run, " << skipped
              << " skipped -> " << cfg.out_dir << "\n";
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeConfig {
    std::string manifest;
    std::string results_dir;  // evaluate only
    std::string analysis;
    std::string out_dir;
    int n_random = 200;
    int n_samples = 200;
    double inference_dispersion = 1.0;  // Mallows inference column
    std::uint64_t master_seed = 0;
    bool seed_set = false;
    int jobs = 1;
};

nlohmann::json analyze_snapshot(const AnalyzeConfig& cfg) {
    nlohmann::json j{{"schema_version", 1},
                     {"command", "analyze"},
                     {"analysis", cfg.analysis},
                     {"manifest", cfg.manifest},
                     {"out_dir", cfg.out_dir},
                     {"n_random", cfg.n_random},
                     {"n_samples", cfg.n_samples},
                     {"inference_dispersion", cfg.inference_dispersion},
                     {"master_seed", cfg.master_seed}};
    if (!cfg.results_dir.empty()) j["results"] = cfg.results_dir;
    return j;
}

struct VariantSpec {
    GenVariant variant = GenVariant::PP;
    std::optional<double> dispersion;
};

std::map<std::string, VariantSpec> grid_variant_specs(const nlohmann::json& manifest) {
    std::map<std::string, VariantSpec> specs;
    for (const auto& v : manifest.at("grid").at("variants")) {
        VariantSpec spec;
        spec.variant = gen_variant_from_string(v.at("variant").get<std::string>());
        if (v.contains("dispersion")) spec.dispersion = v.at("dispersion").get<double>();
        specs[v.at("name").get<std::string>()] = spec;
    }
    return specs;
}

MhConfig grid_generation_config(const nlohmann::json& manifest, std::uint64_t seed) {
    const auto& gen = manifest.at("grid").at("generation");
    MhConfig cfg = MhConfig::generation(seed);
    cfg.iterations = gen.at("iterations").get<long>();
    cfg.return_mode = return_mode_from_string(gen.at("return_mode").get<std::string>());
    return cfg;
}

constexpr InferenceVariant kInferenceColumns[] = {InferenceVariant::PP, InferenceVariant::BT,
                                                  InferenceVariant::PL,
                                                  InferenceVariant::Mallows};

void print_calibration_table(const std::vector<GroupStat>& groups) {
    std::vector<std::string> row_names;
    std::map<std::string, std::map<std::string, double>> table;
    for (const GroupStat& g : groups) {
        if (!table.count(g.generative_variant)) row_names.push_back(g.generative_variant);
        table[g.generative_variant][g.inference_variant] = g.stat.mean;
    }
    std::printf("mean calibration rho (rows generative, columns inference)\n");
    std::printf("%-10s", "variant");
    for (const InferenceVariant iv : kInferenceColumns)
        std::printf("%10s", inference_variant_name(iv).c_str());
    std::printf("\n");
    for (const std::string& row : row_names) {
        std::printf("%-10s", row.c_str());
        for (const InferenceVariant iv : kInferenceColumns)
            std::printf("%10.4f", table[row][inference_variant_name(iv)]);
        std::printf("\n");
    }
}

void cmd_analyze(AnalyzeConfig cfg) {
    if (cfg.manifest.empty()) throw ConfigError("analyze: a manifest path is required");
    if (cfg.out_dir.empty()) throw ConfigError("analyze: an output directory is required");
    const SuiteRef suite = load_suite(cfg.manifest);
    if (!cfg.seed_set)
        cfg.master_seed = cfg_guard("manifest master_seed", [&] {
            return suite.manifest.at("master_seed").get<std::uint64_t>();
        });
    const auto& cells = suite.manifest.at("cells");
    if (cells.empty()) throw MissingInputError("analyze: the manifest lists no cells");
    const std::map<std::string, VariantSpec> specs = grid_variant_specs(suite.manifest);

    const fs::path out_root(cfg.out_dir);
    make_dirs(out_root);
    write_json_file((out_root / "config.snapshot.json").string(), analyze_snapshot(cfg));

    const auto cell_problem = [&](const nlohmann::json& cell) {
        return problem_from_json(read_json_file(
            (suite.root / cell.at("problem").get<std::string>()).string()));
    };
    const auto cell_spec = [&](const nlohmann::json& cell) {
        const std::string name = cell.at("variant").get<std::string>();
        const auto it = specs.find(name);
        if (it == specs.end())
            throw ConfigError("analyze: cell variant '" + name + "' is not in the grid");
        return it->second;
    };

    std::vector<std::vector<ReportRow>> per_cell(cells.size());
    const auto run_cells = [&](const std::function<void(std::size_t, const nlohmann::json&,
                                                        std::vector<ReportRow>&)>& body) {
        parallel_for(cells.size(), cfg.jobs, [&](std::size_t i) {
            const nlohmann::json& cell = cells[i];
            with_cell_context(cell.at("dir").get<std::string>(),
                              [&] { body(i, cell, per_cell[i]); });
        });
    };
    const auto base_row = [](const nlohmann::json& cell) {
        ReportRow row;
        row.generative_variant = cell.at("variant").get<std::string>();
        row.experiment_id = cell.at("experiment_id").get<int>();
        row.replicate = cell.at("replicate").get<int>();
        return row;
    };

    if (cfg.analysis == "calibration") {
        run_cells([&](std::size_t i, const nlohmann::json& cell, std::vector<ReportRow>& rows) {
            const RankingProblem problem = cell_problem(cell);
            const AggregateRanking truth = ranking_from_json(cell.at("aggregate"));
            const std::uint64_t cell_seed = derive_seed(cfg.master_seed, i);
            int iv_index = 0;
            for (const InferenceVariant iv : kInferenceColumns) {
                RngStream rng(derive_seed(cell_seed, 1 + static_cast<std::uint64_t>(iv_index++)));
                ReportRow row = base_row(cell);
                row.inference_variant = inference_variant_name(iv);
                row.metric = "calibration_rho";
                row.value = calibration(problem, truth, iv, cfg.n_random, rng,
                                        cfg.inference_dispersion);
                rows.push_back(std::move(row));
            }
        });
    } else if (cfg.analysis == "separation" || cfg.analysis == "sharpness") {
        const bool sep = cfg.analysis == "separation";
        run_cells([&](std::size_t i, const nlohmann::json& cell, std::vector<ReportRow>& rows) {
            const RankingProblem problem = cell_problem(cell);
            const VariantSpec spec = cell_spec(cell);
            const std::uint64_t cell_seed = derive_seed(cfg.master_seed, i);
            const MhConfig gen_cfg =
                grid_generation_config(suite.manifest, derive_seed(cell_seed, 21));
            ReportRow row = base_row(cell);
            row.inference_variant = "none";
            if (sep) {
                RngStream rng(derive_seed(cell_seed, 20));
                row.metric = "separation_auroc";
                row.value = separation(problem, spec.variant, spec.dispersion, cfg.n_samples,
                                       gen_cfg, rng);
            } else {
                row.metric = "sharpness_w";
                row.value =
                    sharpness(problem, spec.variant, spec.dispersion, cfg.n_samples, gen_cfg);
            }
            rows.push_back(std::move(row));
        });
    } else if (cfg.analysis == "features") {
        run_cells([&](std::size_t, const nlohmann::json& cell, std::vector<ReportRow>& rows) {
            const RankingProblem problem = cell_problem(cell);
            const PartialRankingFeatures f = ranking_features(problem);
            const std::pair<const char*, double> metrics[] = {
                {"n_pr", static_cast<double>(f.n_pr)},
                {"mean_len", f.mean_len},
                {"conflict", f.conflict},
                {"overlap_rate", f.overlap_rate}};
            for (const auto& [name, value] : metrics) {
                ReportRow row = base_row(cell);
                row.inference_variant = "none";
                row.metric = name;
                row.value = value;
                rows.push_back(std::move(row));
            }
            try {
                const SharpnessModel model =
                    sharpness_model_from_name(cell.at("variant").get<std::string>());
                ReportRow row = base_row(cell);
                row.inference_variant = "none";
                row.metric = "predicted_sharpness";
                row.value = predict_sharpness(f, model);
                rows.push_back(std::move(row));
            } catch (const ConfigError&) {
                // Custom variant names have no published coefficient column.
            }
        });
    } else if (cfg.analysis == "evaluate") {
        if (cfg.results_dir.empty())
            throw ConfigError("analyze: evaluate needs a results directory");
        const fs::path results_root(cfg.results_dir);
        std::atomic<int> found{0};
        run_cells([&](std::size_t, const nlohmann::json& cell, std::vector<ReportRow>& rows) {
            const std::string dir = cell.at("dir").get<std::string>();
            const AggregateRanking truth = ranking_from_json(cell.at("aggregate"));
            std::optional<std::vector<double>> true_stages;  // loaded on first hit
            for (const char* vname : {"none", "pp", "bt", "pl", "mallows"}) {
                const fs::path path = results_root / dir / (std::string(vname) + ".json");
                if (!fs::exists(path)) continue;
                const StoredResult stored = stored_result_from_json(read_json_file(path.string()));
                ++found;
                ReportRow tau_row = base_row(cell);
                tau_row.inference_variant = vname;
                tau_row.metric = "ordering_tau";
                tau_row.value = ordering_error(stored.best_ranking, truth);
                rows.push_back(std::move(tau_row));

                if (!true_stages) {
                    const RankingProblem problem = cell_problem(cell);
                    const Cohort mixed = cohort_from_csv(
                        read_text_file(
                            (suite.root / cell.at("mixed_cohort").get<std::string>()).string()),
                        problem.labels);
                    std::vector<double> stages;
                    for (const Participant& p : mixed.participants) {
                        if (!p.stage)
                            throw ConfigError("evaluate: the mixed cohort lacks true stages");
                        stages.push_back(*p.stage);
                    }
                    true_stages = std::move(stages);
                }
                if (stored.stage_point_estimates.size() != true_stages->size())
                    throw ConfigError("evaluate: stage estimates do not match the cohort");
                double abs_err = 0.0;
                for (std::size_t j = 0; j < true_stages->size(); ++j)
                    abs_err += std::abs(stored.stage_point_estimates[j] - (*true_stages)[j]);
                ReportRow mae_row = base_row(cell);
                mae_row.inference_variant = vname;
                mae_row.metric = "staging_mae";
                mae_row.value = abs_err / static_cast<double>(true_stages->size());
                rows.push_back(std::move(mae_row));
            }
        });
        if (found == 0)
            throw MissingInputError("evaluate: no result files under " + cfg.results_dir);
    } else {
        throw ConfigError(
            "analyze: unknown analysis '" + cfg.analysis +
            "' (expected calibration|separation|sharpness|features|evaluate)");
    }

    std::vector<ReportRow> rows;
    for (const auto& cell_rows : per_cell)
        rows.insert(rows.end(), cell_rows.begin(), cell_rows.end());
    if (rows.empty()) throw MissingInputError("analyze: no rows produced");

    write_text_file((out_root / (cfg.analysis + ".csv")).string(), rows_to_csv(rows));
    const std::vector<GroupStat> groups = summarize(rows);
    write_text_file((out_root / (cfg.analysis + "_summary.csv")).string(),
                    summary_to_csv(groups));

    if (cfg.analysis == "calibration") {
        print_calibration_table(groups);
    } else {
        for (const GroupStat& g : groups)
            std::printf("%s %s %s: mean %.4f +- %.4f (n=%d)\n", g.generative_variant.c_str(),
                        g.inference_variant.c_str(), g.metric.c_str(), g.stat.mean, g.stat.ci95,
                        g.stat.n);
    }
    std::cout << "analyze: " << cfg.analysis << ", " << rows.size() << " rows -> "
              << cfg.out_dir << "\n";
}

}  // namespace

// ---------------------------------------------------------------------------
// Argument parsing
// ---------------------------------------------------------------------------

int run_cli(int argc, char** argv) {
    CLI::App app{"joint progression model toolkit"};
    app.require_subcommand(1);
    const char* env_seed = std::getenv("JPM_SEED");

    // generate ---------------------------------------------------------------
    auto* gen = app.add_subcommand("generate", "write a synthetic experiment suite");
    std::string gen_config, gen_out, gen_mode;
    std::uint64_t gen_seed = 0;
    std::vector<std::string> gen_variants;
    std::vector<int> gen_experiments, gen_sizes;
    std::vector<double> gen_ratios;
    int gen_replicates = 0, gen_min_partials = 0, gen_max_partials = 0, gen_min_length = 0,
        gen_max_length = 0, gen_scale = 0;
    long gen_iterations = 0;
    auto* g_config = gen->add_option("--config", gen_config, "JSON config file");
    auto* g_out = gen->add_option("--out", gen_out, "output directory");
    auto* g_seed = gen->add_option("--seed", gen_seed, "master seed");
    auto* g_variants =
        gen->add_option("--variants", gen_variants, "canonical variants (pp bt pl m1 m10)");
    auto* g_experiments = gen->add_option("--experiments", gen_experiments, "experiment ids");
    auto* g_sizes = gen->add_option("--sizes", gen_sizes, "cohort sizes");
    auto* g_ratios = gen->add_option("--ratios", gen_ratios, "healthy ratios");
    auto* g_replicates = gen->add_option("--replicates", gen_replicates, "replicates per cell");
    auto* g_min_partials = gen->add_option("--min-partials", gen_min_partials, "");
    auto* g_max_partials = gen->add_option("--max-partials", gen_max_partials, "");
    auto* g_min_length = gen->add_option("--min-length", gen_min_length, "");
    auto* g_max_length = gen->add_option("--max-length", gen_max_length, "");
    auto* g_iterations =
        gen->add_option("--gen-iterations", gen_iterations, "sampler iterations");
    auto* g_mode = gen->add_option("--return-mode", gen_mode, "best|final");
    auto* g_scale = gen->add_option("--single-cohort-scale", gen_scale,
                                    "single-disease cohort size multiplier");

    // fit --------------------------------------------------------------------
    auto* fit = app.add_subcommand("fit", "fit an energy model from a partials JSON");
    std::string fit_config, fit_problem, fit_out, fit_variant;
    double fit_dispersion = 0.0;
    std::uint64_t fit_seed = 0;
    long fit_iterations = 0;
    auto* f_config = fit->add_option("--config", fit_config, "JSON config file");
    auto* f_problem = fit->add_option("--problem", fit_problem, "partial-rankings JSON");
    auto* f_out = fit->add_option("--out", fit_out, "output model JSON");
    auto* f_variant = fit->add_option("--variant", fit_variant, "pp|bt|pl|mallows");
    auto* f_dispersion = fit->add_option("--dispersion", fit_dispersion, "Mallows dispersion");
    auto* f_seed = fit->add_option("--seed", fit_seed, "central-search seed");
    auto* f_iterations = fit->add_option("--iterations", fit_iterations, "central-search budget");

    // infer ------------------------------------------------------------------
    auto* inf = app.add_subcommand("infer", "run posterior inference over a suite");
    std::string inf_config, inf_manifest, inf_out, inf_variant;
    double inf_dispersion = 0.0;
    int inf_n_seeds = 0, inf_jobs = 0;
    long inf_iterations = 0, inf_burn_in = 0;
    std::uint64_t inf_seed = 0;
    bool inf_true_partials = false;
    auto* i_config = inf->add_option("--config", inf_config, "JSON config file");
    auto* i_manifest = inf->add_option("--manifest", inf_manifest, "suite manifest JSON");
    auto* i_out = inf->add_option("--out", inf_out, "output directory");
    auto* i_variant = inf->add_option("--variant", inf_variant, "none|pp|bt|pl|mallows");
    auto* i_dispersion = inf->add_option("--dispersion", inf_dispersion, "Mallows dispersion");
    auto* i_n_seeds = inf->add_option("--n-seeds", inf_n_seeds, "restarts per cell");
    auto* i_iterations = inf->add_option("--iterations", inf_iterations, "chain iterations");
    auto* i_burn_in = inf->add_option("--burn-in", inf_burn_in, "chain burn-in");
    auto* i_seed = inf->add_option("--seed", inf_seed, "master seed");
    auto* i_true_partials = inf->add_flag("--use-true-partials", inf_true_partials,
                                          "skip estimation; use ground-truth partials");
    auto* i_jobs = inf->add_option("--jobs", inf_jobs, "parallel workers across cells");

    // analyze ----------------------------------------------------------------
    auto* ana = app.add_subcommand("analyze", "compute report CSVs over a suite");
    std::string ana_config, ana_manifest, ana_results, ana_analysis, ana_out;
    int ana_n_random = 0, ana_n_samples = 0, ana_jobs = 0;
    double ana_inf_dispersion = 0.0;
    std::uint64_t ana_seed = 0;
    auto* a_config = ana->add_option("--config", ana_config, "JSON config file");
    auto* a_manifest = ana->add_option("--manifest", ana_manifest, "suite manifest JSON");
    auto* a_results = ana->add_option("--results", ana_results, "inference results directory");
    auto* a_analysis = ana->add_option(
        "--analysis", ana_analysis, "calibration|separation|sharpness|features|evaluate");
    auto* a_out = ana->add_option("--out", ana_out, "output directory");
    auto* a_n_random = ana->add_option("--n-random", ana_n_random, "random rankings per cell");
    auto* a_n_samples = ana->add_option("--n-samples", ana_n_samples, "model samples per cell");
    auto* a_inf_dispersion = ana->add_option("--inference-dispersion", ana_inf_dispersion,
                                             "Mallows dispersion at inference");
    auto* a_seed = ana->add_option("--seed", ana_seed, "master seed");
    auto* a_jobs = ana->add_option("--jobs", ana_jobs, "parallel workers across cells");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            GenerateConfig cfg;
            if (g_config->count()) {
                const nlohmann::json j = load_config_file(gen_config);
                overlay(j, "out_dir", cfg.out_dir);
                overlay(j, "master_seed", cfg.master_seed);
                if (j.contains("variants"))
                    cfg.variants = cfg_guard("config field 'variants'",
                                             [&] { return variants_from_json(j.at("variants")); });
                overlay(j, "experiments", cfg.experiments);
                overlay(j, "sizes", cfg.sizes);
                overlay(j, "ratios", cfg.ratios);
                overlay(j, "replicates", cfg.replicates);
                if (j.contains("partials")) {
                    const nlohmann::json& p = j.at("partials");
                    overlay(p, "min_partials", cfg.options.partials.min_partials);
                    overlay(p, "max_partials", cfg.options.partials.max_partials);
                    overlay(p, "min_length", cfg.options.partials.min_length);
                    overlay(p, "max_length", cfg.options.partials.max_length);
                }
                if (j.contains("generation")) {
                    const nlohmann::json& g = j.at("generation");
                    overlay(g, "iterations", cfg.options.generation_iterations);
                    overlay(g, "single_cohort_scale", cfg.options.single_cohort_scale);
                    if (g.contains("return_mode"))
                        cfg.options.generation_mode = return_mode_from_string(
                            g.at("return_mode").get<std::string>());
                }
            }
            if (g_out->count()) cfg.out_dir = gen_out;
            if (g_seed->count()) cfg.master_seed = gen_seed;
            if (g_variants->count()) {
                cfg.variants.clear();
                for (const std::string& name : gen_variants)
                    cfg.variants.push_back(canonical_variant(name));
            }
            if (g_experiments->count()) cfg.experiments = gen_experiments;
            if (g_sizes->count()) cfg.sizes = gen_sizes;
            if (g_ratios->count()) cfg.ratios = gen_ratios;
            if (g_replicates->count()) cfg.replicates = gen_replicates;
            if (g_min_partials->count()) cfg.options.partials.min_partials = gen_min_partials;
            if (g_max_partials->count()) cfg.options.partials.max_partials = gen_max_partials;
            if (g_min_length->count()) cfg.options.partials.min_length = gen_min_length;
            if (g_max_length->count()) cfg.options.partials.max_length = gen_max_length;
            if (g_iterations->count()) cfg.options.generation_iterations = gen_iterations;
            if (g_mode->count()) cfg.options.generation_mode = return_mode_from_string(gen_mode);
            if (g_scale->count()) cfg.options.single_cohort_scale = gen_scale;
            if (env_seed) cfg.master_seed = parse_seed(env_seed, "JPM_SEED");
            cmd_generate(cfg);
        } else if (fit->parsed()) {
            FitConfig cfg;
            if (f_config->count()) {
                const nlohmann::json j = load_config_file(fit_config);
                overlay(j, "problem", cfg.problem_path);
                overlay(j, "out", cfg.out_path);
                overlay(j, "variant", cfg.variant);
                if (j.contains("dispersion")) cfg.dispersion = j.at("dispersion").get<double>();
                overlay(j, "master_seed", cfg.seed);
                overlay(j, "iterations", cfg.iterations);
            }
            if (f_problem->count()) cfg.problem_path = fit_problem;
            if (f_out->count()) cfg.out_path = fit_out;
            if (f_variant->count()) cfg.variant = fit_variant;
            if (f_dispersion->count()) cfg.dispersion = fit_dispersion;
            if (f_seed->count()) cfg.seed = fit_seed;
            if (f_iterations->count()) cfg.iterations = fit_iterations;
            if (env_seed) cfg.seed = parse_seed(env_seed, "JPM_SEED");
            cmd_fit(cfg);
        } else if (inf->parsed()) {
            InferConfig cfg;
            if (i_config->count()) {
                const nlohmann::json j = load_config_file(inf_config);
                overlay(j, "manifest", cfg.manifest);
                overlay(j, "out_dir", cfg.out_dir);
                overlay(j, "variant", cfg.variant);
                overlay(j, "dispersion", cfg.dispersion);
                overlay(j, "n_seeds", cfg.n_seeds);
                overlay(j, "iterations", cfg.iterations);
                overlay(j, "burn_in", cfg.burn_in);
                if (j.contains("master_seed")) {
                    cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
                    cfg.seed_set = true;
                }
                overlay(j, "use_true_partials", cfg.use_true_partials);
            }
            if (i_manifest->count()) cfg.manifest = inf_manifest;
            if (i_out->count()) cfg.out_dir = inf_out;
            if (i_variant->count()) cfg.variant = inf_variant;
            if (i_dispersion->count()) cfg.dispersion = inf_dispersion;
            if (i_n_seeds->count()) cfg.n_seeds = inf_n_seeds;
            if (i_iterations->count()) cfg.iterations = inf_iterations;
            if (i_burn_in->count()) cfg.burn_in = inf_burn_in;
            if (i_seed->count()) {
                cfg.master_seed = inf_seed;
                cfg.seed_set = true;
            }
            if (i_true_partials->count()) cfg.use_true_partials = inf_true_partials;
            if (i_jobs->count()) cfg.jobs = inf_jobs;
            if (env_seed) {
                cfg.master_seed = parse_seed(env_seed, "JPM_SEED");
                cfg.seed_set = true;
            }
            cmd_infer(cfg);
        } else if (ana->parsed()) {
            AnalyzeConfig cfg;
            if (a_config->count()) {
                const nlohmann::json j = load_config_file(ana_config);
                overlay(j, "manifest", cfg.manifest);
                overlay(j, "results", cfg.results_dir);
                overlay(j, "analysis", cfg.analysis);
                overlay(j, "out_dir", cfg.out_dir);
                overlay(j, "n_random", cfg.n_random);
                overlay(j, "n_samples", cfg.n_samples);
                overlay(j, "inference_dispersion", cfg.inference_dispersion);
                if (j.contains("master_seed")) {
                    cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
                    cfg.seed_set = true;
                }
            }
            if (a_manifest->count()) cfg.manifest = ana_manifest;
            if (a_results->count()) cfg.results_dir = ana_results;
            if (a_analysis->count()) cfg.analysis = ana_analysis;
            if (a_out->count()) cfg.out_dir = ana_out;
            if (a_n_random->count()) cfg.n_random = ana_n_random;
            if (a_n_samples->count()) cfg.n_samples = ana_n_samples;
            if (a_inf_dispersion->count()) cfg.inference_dispersion = ana_inf_dispersion;
            if (a_seed->count()) {
                cfg.master_seed = ana_seed;
                cfg.seed_set = true;
            }
            if (a_jobs->count()) cfg.jobs = ana_jobs;
            if (env_seed) {
                cfg.master_seed = parse_seed(env_seed, "JPM_SEED");
                cfg.seed_set = true;
            }
            if (cfg.analysis.empty()) throw ConfigError("analyze: an analysis name is required");
            cmd_analyze(cfg);
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const MissingInputError& e) {
        std::cerr << "missing input: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace jpm
