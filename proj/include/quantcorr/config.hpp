#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "quantcorr/pipeline.hpp"
#include "quantcorr/synthetic.hpp"

namespace quantcorr {

struct TauRange {
    double from = 0.1;
    double to = 0.9;
    double step = 0.1;

    std::vector<double> expand() const;
    bool operator==(const TauRange&) const = default;
};

struct BootstrapConfig {
    bool enabled = false;
    std::size_t replicates = 1000;
    std::uint64_t seed = 1;
    double level = 0.95;

    bool operator==(const BootstrapConfig&) const = default;
};

struct RunConfig {
    std::string input;
    std::string output_dir = "quantcorr_out";
    AnalysisSpec analysis;
    std::optional<TauRange> tau_range;  // when set, replaces analysis.taus
    BootstrapConfig bootstrap;
    unsigned threads = 1;

    std::vector<double> resolved_taus() const;
    bool operator==(const RunConfig&) const = default;
};

nlohmann::json to_json(const TermSpec& term);
TermSpec term_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

nlohmann::json to_json(const ScenarioSpec& scenario);
ScenarioSpec scenario_from_json(const nlohmann::json& j);
ScenarioSpec load_scenario(const std::string& path);

}  // namespace quantcorr
