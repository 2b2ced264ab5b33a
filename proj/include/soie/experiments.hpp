#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "soie/optimal_impedance.hpp"
#include "soie/pso.hpp"

namespace soie {

inline constexpr const char* kControllerSoie = "soie";
inline constexpr const char* kControllerHigh = "fixed_high";
inline constexpr const char* kControllerLow = "fixed_low";

/// Everything that determines a batch run. The hash covers every numeric
/// input; identical manifests imply byte-identical exports.
struct RunManifest {
    std::string experiment = "robot_robot_grid";
    std::uint64_t master_seed = 1;
    double dt_s = 0.001;
    TargetSpec target{};
    int trials_per_cell = 1;
    std::vector<double> own_bias_deg{0, 1, 2, 3, 4, 5, 6, 7};
    std::vector<double> partner_bias_deg{0, 1, 2, 3, 4, 5, 6, 7};
    double bias_std_deg = 0.05;
    ConnectionSpec connection{17.2, 0.0};
    double inertia_kg_m2 = 0.0080;
    double motor_std_nm = 0.0;
    DesignConfig design{};

    std::string hash() const;
    void validate() const;
};

struct GridRow {
    std::size_t cell = 0;
    double bias_a_deg = 0.0;
    double bias_b_deg = 0.0;
    std::string controller;
    int trial = 0;
    double lambda_a = 0.0;
    double lambda_b = 0.0;
    double t0_s = 0.0;
    double error_a_deg = 0.0;
    double error_b_deg = 0.0;
    double error_sum_deg = 0.0;
    double effort_nm = 0.0;
    double decode_r_a = 0.0;
    double decode_r_b = 0.0;
    double decode_rmse_a_deg = 0.0;
    double decode_rmse_b_deg = 0.0;
};

/// Pooled communication statistics of one controller over the whole grid,
/// from per-trial series concatenated in row order.
struct CommStats {
    double pooled_r = 0.0;
    double mean_trial_r = 0.0;
    double snr_db = 0.0;
    double delay_s = 0.0;
};

struct ControllerAggregate {
    double mean_error_sum_deg = 0.0;
    double mean_effort_nm = 0.0;
    std::vector<double> cell_error_sum_deg;    // per-cell trial means
    std::vector<double> trial_error_sum_deg;   // per (cell, trial), row order
    std::vector<double> trial_effort_nm;
    CommStats comm;
};

struct GridResult {
    RunManifest manifest;
    ImpedanceSurface surface;
    double lambda_high = 0.0;
    double lambda_low = 0.0;
    std::vector<GridRow> rows;
    std::vector<double> cell_noise_diff_deg;
    std::map<std::string, ControllerAggregate> by_controller;
    double error_diff_corr_low = 0.0;   // corr(error diff vs soie, noise diff)
    double error_diff_corr_high = 0.0;
};

/// The robot-robot study: every (own, partner) noise cell under the SOIE,
/// fixed-high and fixed-low controllers, with common random numbers across
/// controllers so per-trial comparisons are paired.
GridResult run_robot_robot_grid(const RunManifest& manifest, const ImpedanceSurface& surface,
                                unsigned jobs = 0);

struct HumanHumanRow {
    VisualCondition condition = VisualCondition::SS;
    double self_bias_deg = 0.0;
    double partner_bias_deg = 0.0;
    double lambda = 0.0;
    double predicted_error_deg = 0.0;
};

std::vector<HumanHumanRow> run_human_human_prediction(const HumanModelParams& params,
                                                      const DesignConfig& design);

struct HumanRobotRow {
    VisualCondition condition = VisualCondition::SS;  // first letter: robot
    std::string controller;                           // "soie" or "hic"
    int trial = 0;
    double lambda_robot = 0.0;
    double lambda_human = 0.0;
    double robot_error_deg = 0.0;
    double human_error_deg = 0.0;
    double effort_nm = 0.0;
    double robot_decode_rmse_deg = 0.0;
    double robot_decode_r = 0.0;
};

struct HumanRobotResult {
    std::vector<HumanRobotRow> rows;
    std::map<std::string, double> soie_lambda;         // per condition
    double hic_lambda = 0.0;
    // Mean robot tracking error per (condition, controller) key "NS/soie".
    std::map<std::string, double> mean_robot_error_deg;
};

/// The human-robot study: the robot runs SOIE or the constant high-impedance
/// baseline (the SN-condition impedance held fixed); the human partner is
/// simulated with the fitted hyperparameters.
HumanRobotResult run_human_robot_conditions(const RunManifest& manifest,
                                            const HumanModelParams& human,
                                            const NoiseSpec& robot_noisy, unsigned jobs = 0);

// ---------------------------------------------------------------------------
// Result files. Every file starts with a `# manifest <hash>` comment line and
// is byte-identical for identical manifests regardless of worker count.
// ---------------------------------------------------------------------------

void write_surface_csv(const std::filesystem::path& path, const ImpedanceSurface& surface,
                       const RunManifest& manifest);

/// Reads a surface file written by write_surface_csv; throws
/// MissingPrerequisiteError when absent or malformed.
ImpedanceSurface read_surface_csv(const std::filesystem::path& path);

void write_grid_csv(const std::filesystem::path& dir, const GridResult& result);

void write_human_human_csv(const std::filesystem::path& path,
                           const std::vector<HumanHumanRow>& rows, const RunManifest& manifest);

void write_human_robot_csv(const std::filesystem::path& dir, const HumanRobotResult& result,
                           const RunManifest& manifest);

void write_manifest_json(const std::filesystem::path& path, const RunManifest& manifest);

std::string format_double(double v);

} // namespace soie
