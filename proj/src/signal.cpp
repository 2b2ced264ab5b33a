#include "soie/signal.hpp"

#include <cmath>

#include "soie/angles.hpp"
#include "soie/errors.hpp"

namespace soie {

namespace {

double base_multisine(const TargetSpec& spec, double t) {
    return spec.amplitude_deg * std::sin(spec.alpha_rad_per_s * t) *
           std::sin(spec.beta_rad_per_s * t);
}

void check_time(const TargetSpec& spec, double t) {
    if (t < 0.0 || t > spec.duration_s) {
        throw ConfigError("target time outside [0, duration]");
    }
}

} // namespace

void TargetSpec::validate() const {
    if (amplitude_deg <= 0.0) throw ConfigError("target amplitude must be > 0");
    if (alpha_rad_per_s <= 0.0 || beta_rad_per_s <= 0.0) {
        throw ConfigError("target frequencies must be > 0");
    }
    if (duration_s <= 0.0) throw ConfigError("target duration must be > 0");
    if (t0_s < 0.0 || t0_s > 10.0) throw ConfigError("t0 must lie in [0, 10] s");
    // t0 must sit on a zero crossing of the multisine.
    if (std::abs(base_multisine(*this, t0_s)) > 1e-9 * amplitude_deg) {
        throw ConfigError("t0 is not a zero crossing of the target trajectory");
    }
}

double TargetSpec::position_deg(double t) const {
    check_time(*this, t);
    return base_multisine(*this, t + t0_s);
}

double TargetSpec::velocity_deg(double t) const {
    check_time(*this, t);
    const double ts = t + t0_s;
    const double a = alpha_rad_per_s;
    const double b = beta_rad_per_s;
    return amplitude_deg *
           (a * std::cos(a * ts) * std::sin(b * ts) + b * std::sin(a * ts) * std::cos(b * ts));
}

double TargetSpec::acceleration_deg(double t) const {
    check_time(*this, t);
    const double ts = t + t0_s;
    const double a = alpha_rad_per_s;
    const double b = beta_rad_per_s;
    return amplitude_deg * (2.0 * a * b * std::cos(a * ts) * std::cos(b * ts) -
                            (a * a + b * b) * std::sin(a * ts) * std::sin(b * ts));
}

double TargetSpec::position_rad(double t) const { return deg_to_rad(position_deg(t)); }
double TargetSpec::velocity_rad(double t) const { return deg_to_rad(velocity_deg(t)); }
double TargetSpec::acceleration_rad(double t) const { return deg_to_rad(acceleration_deg(t)); }

void NoiseSpec::validate() const {
    if (std_deg < 0.0) throw ConfigError("noise std must be >= 0");
}

std::vector<double> multisine_zeros(const TargetSpec& spec, double window_s) {
    // Zeros are where either sine factor vanishes: t = n*pi/alpha or m*pi/beta.
    // Bracketing + bisection keeps this robust if the parameterization changes.
    std::vector<double> zeros;
    zeros.push_back(0.0);

    const double scan_dt = 1e-4;
    const std::size_t steps = static_cast<std::size_t>(window_s / scan_dt + 0.5);
    double prev_t = 0.0;
    double prev_v = 0.0;
    for (std::size_t i = 1; i <= steps; ++i) {
        const double t = static_cast<double>(i) * scan_dt;
        const double v = base_multisine(spec, t);
        const bool sign_change = (prev_v < 0.0 && v > 0.0) || (prev_v > 0.0 && v < 0.0);
        const bool touch = prev_v != 0.0 && v == 0.0;
        if (sign_change) {
            double lo = prev_t;
            double hi = t;
            double flo = prev_v;
            while (hi - lo > 1e-12) {
                const double mid = 0.5 * (lo + hi);
                const double fm = base_multisine(spec, mid);
                if ((flo < 0.0) == (fm < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            zeros.push_back(0.5 * (lo + hi));
        } else if (touch) {
            zeros.push_back(t);
        }
        // Double zeros (both factors near a common multiple) do not flip the
        // sign; catch them through the local magnitude minimum instead.
        if (prev_v != 0.0 && v != 0.0 && !sign_change) {
            const double mid_v = base_multisine(spec, t - 0.5 * scan_dt);
            if (std::abs(mid_v) < 1e-9 * spec.amplitude_deg &&
                std::abs(mid_v) < std::abs(prev_v) && std::abs(mid_v) < std::abs(v)) {
                zeros.push_back(t - 0.5 * scan_dt);
            }
        }
        prev_t = t;
        prev_v = v;
    }

    // Drop duplicates from touching brackets.
    std::vector<double> unique;
    for (double z : zeros) {
        if (unique.empty() || z - unique.back() > 1e-9) {
            unique.push_back(z);
        }
    }
    return unique;
}

double sample_start_offset(const TargetSpec& spec, SeededStream stream) {
    const std::vector<double> zeros = multisine_zeros(spec, 10.0);
    if (zeros.empty()) {
        throw ConfigError("no zero crossings available for start offset");
    }
    return zeros[stream.uniform_below(zeros.size())];
}

std::vector<double> sample_noise(const NoiseSpec& spec, SeededStream stream, std::size_t n) {
    spec.validate();
    std::vector<double> draws;
    draws.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        draws.push_back(stream.normal(spec.bias_deg, spec.std_deg));
    }
    return draws;
}

} // namespace soie
