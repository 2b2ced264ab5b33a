#pragma once

#include <vector>

#include "soie/random.hpp"

namespace soie {

/// Multisine target trajectory q*(t) = A sin(alpha (t+t0)) sin(beta (t+t0)).
///
/// Amplitude is configured in degrees (the reporting unit); the *_rad
/// accessors convert for the simulation core, which works in radians.
struct TargetSpec {
    double amplitude_deg = 18.5;
    double alpha_rad_per_s = 2.031;
    double beta_rad_per_s = 1.093;
    double duration_s = 10.0;
    double t0_s = 0.0;

    void validate() const;

    double position_deg(double t) const;
    double velocity_deg(double t) const;
    double acceleration_deg(double t) const;

    double position_rad(double t) const;
    double velocity_rad(double t) const;
    double acceleration_rad(double t) const;
};

/// Biased Gaussian noise descriptor, in degrees for angle channels.
struct NoiseSpec {
    double bias_deg = 0.0;
    double std_deg = 0.0;

    void validate() const;
};

/// Zeros of sin(alpha t) sin(beta t) on [0, window_s], located by sign-change
/// bracketing plus bisection to 1e-12 s. Always contains t = 0.
std::vector<double> multisine_zeros(const TargetSpec& spec, double window_s = 10.0);

/// Picks a start offset t0 uniformly from the multisine zeros on [0, 10] s.
double sample_start_offset(const TargetSpec& spec, SeededStream stream);

/// n independent draws from N(bias, std^2), in degrees.
std::vector<double> sample_noise(const NoiseSpec& spec, SeededStream stream, std::size_t n);

} // namespace soie
