#pragma once

#include <vector>

#include "soie/moments.hpp"

namespace soie {

/// Settings of the impedance design problem (the offline optimization, as
/// opposed to the experiment simulation, which has its own connection value).
struct DesignConfig {
    double inertia_kg_m2 = 0.0080;
    ConnectionSpec connection{17.32, 0.0};
    CostWeights weights{};
    double dt_s = 0.001;  // explicit Euler needs dt < rho K/(k+K); 0.01 is unstable
    double horizon_s = 20.0;
    StateMoments init{};
    double haptic_std_deg = 0.05;
    double motor_std_nm = 0.0;
    int grid_points = 101;
    double refine_tol = 1e-4;
    // Own and partner biases have no preferred alignment; the expected
    // quadratic error then splits into the two bias contributions. Set false
    // to cost the literal signed-bias mean instead.
    bool independent_bias_signs = true;

    void validate() const;
};

struct OptimalImpedance {
    double lambda = 0.0;
    double cost = 0.0;
    bool tie = false;  // flat landscape; lambda is the smallest grid minimizer
};

/// Design cost of a fixed impedance parameter under the given own-sensing and
/// haptic noise, from moment propagation of the closed loop. Raises
/// NumericalError when the propagation is unstable at the design step.
double design_cost(double lambda, const NoiseSpec& own, const NoiseSpec& haptic,
                   const DesignConfig& cfg);

/// Minimizes design_cost over lambda in [0, 1]: full grid sweep, then
/// golden-section refinement around the best grid point to |dlambda| < 1e-4.
/// Candidates whose propagation diverges (an undamped, noise-pumped loop)
/// count as infinite cost.
OptimalImpedance optimal_lambda(const NoiseSpec& own, const NoiseSpec& haptic,
                                const DesignConfig& cfg);

/// Haptic bias a partner with the given sensing noise induces: the magnitude
/// of the partner's stationary mean tracking error under its own one-shot
/// optimal impedance, in degrees.
double partner_haptic_bias_deg(const NoiseSpec& partner, const DesignConfig& cfg);

/// Stationary RMS tracking error sqrt(m1^2 + P11) of the design model at a
/// fixed impedance parameter, in degrees.
double stationary_error_deg(double lambda, const NoiseSpec& own, const NoiseSpec& haptic,
                            const DesignConfig& cfg);

struct ImpedanceSurface {
    std::vector<double> own_bias_deg;
    std::vector<double> partner_bias_deg;
    std::vector<double> partner_haptic_bias_deg;     // closure value per column
    std::vector<std::vector<double>> lambda;         // [own][partner]

    double lambda_min() const;
    double lambda_max() const;
};

/// Optimal lambda for every (own, partner) noise pair. Rows sweep the agent's
/// own sensing bias, columns the partner noise level. The partner enters the
/// design model as haptic noise whose bias opposes the agent's own bias, so
/// the two sources never cancel.
ImpedanceSurface impedance_surface(const std::vector<NoiseSpec>& own_grid,
                                   const std::vector<NoiseSpec>& partner_grid,
                                   const DesignConfig& cfg, unsigned jobs = 0);

} // namespace soie
