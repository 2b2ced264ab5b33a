#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "soie/experiments.hpp"
#include "soie/pso.hpp"

namespace soie {

/// Full laboratory configuration: the simulation defaults plus everything the
/// CLI commands need. Loaded from a JSON document with unit-suffixed keys;
/// unknown keys are rejected with their path.
struct LabConfig {
    std::uint64_t master_seed = 1;
    TargetSpec target{};
    ConnectionSpec connection{17.2, 0.0};
    double inertia_kg_m2 = 0.0080;
    double motor_std_nm = 0.0;
    DesignConfig design{};

    // Robot-robot grid.
    std::vector<double> own_bias_deg{0, 1, 2, 3, 4, 5, 6, 7};
    std::vector<double> partner_bias_deg{0, 1, 2, 3, 4, 5, 6, 7};
    double bias_std_deg = 0.05;
    int trials_per_cell = 1;
    double grid_dt_s = 0.001;

    // Human model and human-robot study.
    HumanModelParams human{};
    NoiseSpec robot_noisy{7.01, 0.05};
    TargetSpec human_robot_target{18.5, 3.04, 2.51, 20.0, 0.0};
    int trials_per_condition = 20;

    PsoConfig pso{};

    RunManifest grid_manifest() const;
    RunManifest human_robot_manifest() const;
};

/// Built-in defaults; identical to an empty JSON document.
LabConfig default_config();

/// Parses and validates a configuration file. Throws ConfigError with a
/// line or key diagnostic on malformed input or unknown keys.
LabConfig load_config(const std::filesystem::path& path);

/// Reads the per-condition human experiment targets (CSV: condition,
/// error_deg, cocontraction).
HumanTargets load_human_targets(const std::filesystem::path& path);

} // namespace soie
