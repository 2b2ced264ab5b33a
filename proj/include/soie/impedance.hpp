#pragma once

#include "soie/errors.hpp"

namespace soie {

/// Position gain at lambda = 1: 1 Nm per degree of error, expressed per radian.
inline constexpr double kKappa0NmPerRad = 57.29577951308232;

/// Fixed viscosity-to-stiffness ratio of the impedance parameterization.
inline constexpr double kViscoelasticRatioS = 0.01;

/// Physical gains implied by the scalar impedance parameter.
struct ImpedanceGains {
    double lambda = 0.0;
    double stiffness_nm_per_rad = 0.0;
    double viscosity_nm_s_per_rad = 0.0;
    double ratio_s = kViscoelasticRatioS;
};

inline ImpedanceGains gains_from_lambda(double lambda) {
    if (lambda < 0.0 || lambda > 1.0) {
        throw ConfigError("impedance parameter must lie in [0, 1]");
    }
    ImpedanceGains g;
    g.lambda = lambda;
    g.stiffness_nm_per_rad = lambda * kKappa0NmPerRad;
    g.viscosity_nm_s_per_rad = kViscoelasticRatioS * g.stiffness_nm_per_rad;
    return g;
}

inline double lambda_from_stiffness(double stiffness_nm_per_rad) {
    const double lambda = stiffness_nm_per_rad / kKappa0NmPerRad;
    if (lambda < 0.0 || lambda > 1.0) {
        throw ConfigError("stiffness outside the representable impedance range");
    }
    return lambda;
}

} // namespace soie
