#pragma once

#include <string>
#include <vector>

#include "auvgp/mogp.hpp"
#include "auvgp/plant.hpp"

#include "json.hpp"

namespace auvgp {

struct NarxOptions {
    int lag = 3;
    double boundary_time = 1000.0;  // train/validation split
    int n_max = 300;                // subsample cap on training targets
};

struct ProtocolOptions {
    std::vector<int> experiments = {1, 2, 3, 4, 5, 6, 7, 8};
    double divergence_guard = 10.0;  // normalized units
    bool save_models = true;
    bool write_plots = true;
    // The protocol trains sixteen models per run, so it uses a tighter
    // optimizer budget than the standalone train command.
    OptimizerConfig optimizer{.restarts = 2, .max_iterations = 120};
};

struct SensitivityOptions {
    std::vector<double> durations = {500, 1000, 1500, 2000, 4000};
    // Ten trainings across growing datasets; budget accordingly.
    OptimizerConfig optimizer{.restarts = 2, .max_iterations = 80};
};

/// The whole pipeline configuration: one document, one schema version.
/// Every field has the default the reports are generated with; a config
/// file only needs the keys it wants to change.
struct RunConfig {
    PlantCoefficients plant;
    SignalDefaults signals;
    ExperimentOptions experiment;
    NarxOptions narx;
    ModelConfig model;
    OptimizerConfig optimizer;  // standalone training default budget
    ProtocolOptions protocol;
    SensitivityOptions sensitivity;
};

/// Parses a config JSON document over the defaults. Unknown keys throw
/// ConfigError so typos fail loudly.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

/// Full echo of the effective configuration, suitable for the manifest.
nlohmann::json config_to_json(const RunConfig& cfg);

}  // namespace auvgp
