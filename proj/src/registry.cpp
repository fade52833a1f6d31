#include "jpm/registry.hpp"

#include <json.hpp>

#include "jpm/error.hpp"

namespace jpm {

namespace {

// Parameters transcribed from the published biomarker table; theta is the
// diseased state, phi the healthy state.
constexpr const char* kBuiltinJson = R"json({
  "schema_version": 1,
  "biomarkers": [
    {"name": "MMSE",            "theta_mean": 24.74,    "theta_std": 2.26,     "phi_mean": 28.75,    "phi_std": 1.30,     "family": "tri_gauss_exp"},
    {"name": "ADAS13",          "theta_mean": 26.09,    "theta_std": 7.77,     "phi_mean": 11.22,    "phi_std": 4.83,     "family": "tri_gauss_exp"},
    {"name": "RAVLT_immediate", "theta_mean": 25.00,    "theta_std": 6.39,     "phi_mean": 41.70,    "phi_std": 10.42,    "family": "tri_gauss_exp"},
    {"name": "CDRSB",           "theta_mean": 2.12,     "theta_std": 1.66,     "phi_mean": 0.04,     "phi_std": 0.16,     "family": "tri_gauss_exp"},
    {"name": "FAQ",             "theta_mean": 8.12,     "theta_std": 6.54,     "phi_mean": 0.52,     "phi_std": 0.90,     "family": "tri_gauss_exp"},
    {"name": "LDELTOTAL",       "theta_mean": 2.95,     "theta_std": 2.82,     "phi_mean": 9.77,     "phi_std": 3.53,     "family": "tri_gauss_exp"},
    {"name": "MOCA",            "theta_mean": 18.85,    "theta_std": 3.52,     "phi_mean": 24.46,    "phi_std": 2.62,     "family": "tri_gauss_exp"},
    {"name": "TRABSCOR",        "theta_mean": 276.62,   "theta_std": 32.45,    "phi_mean": 97.77,    "phi_std": 43.00,    "family": "tri_gauss_exp"},
    {"name": "ABETA",           "theta_mean": 712.35,   "theta_std": 240.58,   "phi_mean": 1077.89,  "phi_std": 353.53,   "family": "pareto_uniform_logistic"},
    {"name": "TAU",             "theta_mean": 350.36,   "theta_std": 148.44,   "phi_mean": 211.02,   "phi_std": 78.13,    "family": "pareto_uniform_logistic"},
    {"name": "PTAU",            "theta_mean": 34.99,    "theta_std": 16.15,    "phi_mean": 19.46,    "phi_std": 8.24,     "family": "pareto_uniform_logistic"},
    {"name": "FDG",             "theta_mean": 1.09,     "theta_std": 0.12,     "phi_mean": 1.29,     "phi_std": 0.12,     "family": "pareto_uniform_logistic"},
    {"name": "VentricleNorm",   "theta_mean": 0.03256,  "theta_std": 0.01228,  "phi_mean": 0.02064,  "phi_std": 0.00929,  "family": "beta_exp_spike"},
    {"name": "HippocampusNorm", "theta_mean": 0.00394,  "theta_std": 0.00053,  "phi_mean": 0.00502,  "phi_std": 0.00059,  "family": "beta_exp_spike"},
    {"name": "WholeBrainNorm",  "theta_mean": 0.66854,  "theta_std": 0.03340,  "phi_mean": 0.71070,  "phi_std": 0.03502,  "family": "gamma_weibull_bimodal"},
    {"name": "EntorhinalNorm",  "theta_mean": 0.001997, "theta_std": 0.000401, "phi_mean": 0.002576, "phi_std": 0.000377, "family": "gamma_weibull_bimodal"},
    {"name": "FusiformNorm",    "theta_mean": 0.01095,  "theta_std": 0.00127,  "phi_mean": 0.01255,  "phi_std": 0.00131,  "family": "cauchy_clipped"},
    {"name": "MidTempNorm",     "theta_mean": 0.01205,  "theta_std": 0.00145,  "phi_mean": 0.01397,  "phi_std": 0.00129,  "family": "spike_logistic"}
  ]
})json";

}  // namespace

std::string mixture_family_name(MixtureFamily family) {
    switch (family) {
        case MixtureFamily::TriGaussExp: return "tri_gauss_exp";
        case MixtureFamily::ParetoUniformLogistic: return "pareto_uniform_logistic";
        case MixtureFamily::BetaExpSpike: return "beta_exp_spike";
        case MixtureFamily::GammaWeibullBimodal: return "gamma_weibull_bimodal";
        case MixtureFamily::CauchyClipped: return "cauchy_clipped";
        case MixtureFamily::SpikeLogistic: return "spike_logistic";
    }
    throw ConfigError("unknown mixture family value");
}

MixtureFamily mixture_family_from_name(const std::string& name) {
    if (name == "tri_gauss_exp") return MixtureFamily::TriGaussExp;
    if (name == "pareto_uniform_logistic") return MixtureFamily::ParetoUniformLogistic;
    if (name == "beta_exp_spike") return MixtureFamily::BetaExpSpike;
    if (name == "gamma_weibull_bimodal") return MixtureFamily::GammaWeibullBimodal;
    if (name == "cauchy_clipped") return MixtureFamily::CauchyClipped;
    if (name == "spike_logistic") return MixtureFamily::SpikeLogistic;
    throw ConfigError("unknown mixture family: " + name);
}

void BiomarkerSpec::validate() const {
    if (name.empty()) throw ConfigError("BiomarkerSpec: empty name");
    dist.validate();
}

BiomarkerRegistry BiomarkerRegistry::builtin() { return from_json(kBuiltinJson); }

BiomarkerRegistry BiomarkerRegistry::from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("registry JSON parse error: ") + e.what());
    }
    if (!doc.contains("biomarkers") || !doc["biomarkers"].is_array())
        throw ConfigError("registry JSON: missing 'biomarkers' array");
    BiomarkerRegistry reg;
    for (const auto& row : doc["biomarkers"]) {
        try {
            BiomarkerSpec spec;
            spec.name = row.at("name").get<std::string>();
            spec.dist.theta_mean = row.at("theta_mean").get<double>();
            spec.dist.theta_std = row.at("theta_std").get<double>();
            spec.dist.phi_mean = row.at("phi_mean").get<double>();
            spec.dist.phi_std = row.at("phi_std").get<double>();
            spec.family = mixture_family_from_name(row.at("family").get<std::string>());
            reg.add(std::move(spec));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("registry JSON: malformed biomarker row: ") + e.what());
        }
    }
    return reg;
}

std::string BiomarkerRegistry::to_json() const {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["biomarkers"] = nlohmann::json::array();
    for (const auto& spec : specs_) {
        doc["biomarkers"].push_back({{"name", spec.name},
                                     {"theta_mean", spec.dist.theta_mean},
                                     {"theta_std", spec.dist.theta_std},
                                     {"phi_mean", spec.dist.phi_mean},
                                     {"phi_std", spec.dist.phi_std},
                                     {"family", mixture_family_name(spec.family)}});
    }
    return doc.dump(2);
}

void BiomarkerRegistry::add(BiomarkerSpec spec) {
    spec.validate();
    if (index_.count(spec.name))
        throw ConfigError("BiomarkerRegistry: duplicate biomarker " + spec.name);
    index_.emplace(spec.name, static_cast<int>(specs_.size()));
    specs_.push_back(std::move(spec));
}

const BiomarkerSpec& BiomarkerRegistry::at(int index) const {
    if (index < 0 || index >= size())
        throw ConfigError("BiomarkerRegistry: index out of range");
    return specs_[static_cast<std::size_t>(index)];
}

const BiomarkerSpec& BiomarkerRegistry::by_name(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
        throw ConfigError("BiomarkerRegistry: unknown biomarker " + name);
    return specs_[static_cast<std::size_t>(it->second)];
}

}  // namespace jpm
