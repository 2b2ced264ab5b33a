#pragma once

// Test-local oracle: the exact per-step mean/covariance recursion of the
// Euler-Maruyama simulation,
//   m <- (I + dt A) m + dt b,   P <- (I + dt A) P (I + dt A)' + dt W,
// which the Monte-Carlo estimators must approach as the trial count grows.

#include <vector>

#include "soie/moments.hpp"

namespace soie_test {

inline std::vector<soie::StateMoments> em_exact_moments(const soie::Mat2& a_bar,
                                                        const soie::Vec2& drift,
                                                        const soie::Mat2& diffusion,
                                                        const soie::StateMoments& init,
                                                        double dt, double horizon) {
    const std::size_t steps = static_cast<std::size_t>(horizon / dt + 0.5);
    const soie::Mat2 f = soie::Mat2::identity() + a_bar * dt;
    const soie::Mat2 ft = f.transpose();

    std::vector<soie::StateMoments> out(steps + 1);
    out[0] = init;
    soie::Vec2 m = init.mean;
    soie::Mat2 p = init.cov;
    for (std::size_t i = 0; i < steps; ++i) {
        m = f * m + drift * dt;
        p = f * p * ft + diffusion * dt;
        out[i + 1] = {m, p};
    }
    return out;
}

} // namespace soie_test
