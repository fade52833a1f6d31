#pragma once

// Built-in biomarker registry: per-biomarker healthy/diseased Gaussians plus
// the non-normal mixture family each biomarker uses in synthetic generation.

#include <string>
#include <unordered_map>
#include <vector>

#include "jpm/ebm.hpp"

namespace jpm {

enum class MixtureFamily {
    TriGaussExp,            // triangular + offset Gaussian + shifted exponential
    ParetoUniformLogistic,  // scaled Pareto + uniform + logistic
    BetaExpSpike,           // arcsine Beta + two-sided exponential + spiked Gaussian
    GammaWeibullBimodal,    // shifted Gamma + shifted Weibull + bimodal Gaussian
    CauchyClipped,          // Cauchy with its own, tighter clip window
    SpikeLogistic,          // narrow Gaussian spike + wide logistic
};

std::string mixture_family_name(MixtureFamily family);
MixtureFamily mixture_family_from_name(const std::string& name);

struct BiomarkerSpec {
    std::string name;
    BiomarkerDist dist;
    MixtureFamily family = MixtureFamily::TriGaussExp;

    void validate() const;
};

class BiomarkerRegistry {
public:
    /// The 18 built-in biomarkers with their published parameters.
    static BiomarkerRegistry builtin();
    static BiomarkerRegistry from_json(const std::string& text);
    std::string to_json() const;

    void add(BiomarkerSpec spec);

    int size() const { return static_cast<int>(specs_.size()); }
    const BiomarkerSpec& at(int index) const;
    const BiomarkerSpec& by_name(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) > 0; }
    const std::vector<BiomarkerSpec>& specs() const { return specs_; }

private:
    std::vector<BiomarkerSpec> specs_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace jpm
