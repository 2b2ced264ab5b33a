#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "soie/optimal_impedance.hpp"

namespace soie {

struct PsoConfig {
    int particles = 30;
    int iterations = 200;
    double inertia = 0.729;
    double cognitive = 1.49445;
    double social = 1.49445;
    std::vector<std::pair<double, double>> bounds;
    std::uint64_t seed = 1;
    unsigned jobs = 1;  // objective evaluations per iteration run concurrently

    void validate() const;
};

struct PsoResult {
    std::vector<double> best_x;
    double best_f = 0.0;
    std::vector<double> trace;  // per-iteration global best, non-increasing
};

/// Global-best particle swarm with velocity clamping and boundary reflection.
/// Non-finite objective values reject the candidate; an iteration where every
/// particle is rejected raises a diagnostic error.
PsoResult pso_minimize(const std::function<double(const std::vector<double>&)>& objective,
                       const PsoConfig& config);

enum class VisualCondition { SS, SN, NS, NN };

const char* to_string(VisualCondition c);

/// Per-condition experiment targets: mean tracking error and mean cocontraction.
struct HumanConditionTarget {
    double error_deg = 0.0;
    double cocontraction = 0.0;
};

using HumanTargets = std::map<VisualCondition, HumanConditionTarget>;

struct HumanModelParams {
    double delta_sharp_deg = 2.56;
    double delta_noisy_deg = 3.67;
    double effort_weight = 4.02;
    double sensing_std_deg = 0.05;
};

/// Model prediction for one (self, partner) visual condition: the optimal
/// impedance parameter (cocontraction proxy) and the stationary tracking error.
struct HumanPrediction {
    double lambda = 0.0;
    double error_deg = 0.0;
};

HumanPrediction predict_human_condition(VisualCondition condition, const HumanModelParams& params,
                                        const DesignConfig& design);

struct HumanFitResult {
    HumanModelParams params;
    double objective = 0.0;
    PsoResult pso;
};

/// PSO fit of (delta_sharp, delta_noisy, effort weight) minimizing the sum of
/// squared prediction residuals, each normalized by the experimental mean of
/// its metric. Bounds default to delta in [0, 10] deg and R in [0.1, 50].
HumanFitResult fit_human_hyperparams(const HumanTargets& targets, PsoConfig pso,
                                     DesignConfig design);

} // namespace soie
