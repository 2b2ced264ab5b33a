#pragma once

#include <cstdint>
#include <vector>

#include "soie/dynamics.hpp"
#include "soie/linalg.hpp"

namespace soie {

/// Mean and covariance of the tracking-error state.
struct StateMoments {
    Vec2 mean{};
    Mat2 cov{};
};

/// Quadratic cost weights. The numeric values follow the per-degree gain
/// parameterization, so the error moments fed to the cost are in degrees.
struct CostWeights {
    Mat2 q = Mat2::diagonal(1.0, 0.01);
    Mat2 q_terminal{};
    double r = 4.02;

    void validate() const;
};

struct MomentTrajectory {
    double dt_s = 0.0;
    std::vector<StateMoments> points;

    const StateMoments& back() const { return points.back(); }
};

/// Drift/diffusion form of the single-agent design model:
///   m' = a_bar m + drift,  P' = a_bar P + P a_bar' + diffusion.
struct DesignModel {
    Mat2 a_bar;
    Vec2 b;
    Vec2 drift;
    Mat2 diffusion;
};

DesignModel design_model_terms(const AgentConfig& agent, const ConnectionSpec& conn,
                               const NoiseSpec& haptic);

/// Forward-Euler propagation of the moment ODEs. The covariance is
/// re-symmetrized each step and checked for loss of positive semi-definiteness.
MomentTrajectory propagate_moments(const Mat2& a_bar, const Vec2& drift, const Mat2& diffusion,
                                   const StateMoments& init, double dt_s, double horizon_s);

MomentTrajectory propagate_moments(const AgentConfig& agent, const ConnectionSpec& conn,
                                   const NoiseSpec& haptic, const StateMoments& init, double dt_s,
                                   double horizon_s);

/// Empirical per-step mean and covariance over seeded design-model trials.
/// The covariance estimator divides by n. Trials are reduced in fixed-size
/// chunks in trial order, so results are bit-identical for any worker count.
MomentTrajectory mc_estimate_moments(const AgentConfig& agent, const ConnectionSpec& conn,
                                     const NoiseSpec& haptic, const StateMoments& init,
                                     double dt_s, double horizon_s, std::size_t n_trials,
                                     std::uint64_t master_seed, unsigned jobs = 0);

/// Monte-Carlo estimate at selected times together with the empirical standard
/// error of every entry, for estimator-consistency checks.
struct McCheckpoint {
    double t_s = 0.0;
    StateMoments moments;
    Vec2 mean_se{};
    Mat2 cov_se{};
};

std::vector<McCheckpoint> mc_checkpoint_moments(const AgentConfig& agent,
                                                const ConnectionSpec& conn,
                                                const NoiseSpec& haptic, const StateMoments& init,
                                                double dt_s, double horizon_s,
                                                std::size_t n_trials, std::uint64_t master_seed,
                                                const std::vector<double>& times_s,
                                                unsigned jobs = 0);

/// Running cost sum_i [m'Qm + lambda R lambda + tr(QP)] dt over all but the
/// final sample, plus the terminal m'Q_T m + tr(Q_T P) at the final sample.
double deterministic_cost(const std::vector<StateMoments>& trajectory, double lambda,
                          const CostWeights& weights, double dt_s);

/// Direct solve of a_bar P + P a_bar' + diffusion = 0 (three unknowns of the
/// symmetric 2x2); independent oracle for the stationary covariance.
Mat2 lyapunov_steady_state(const Mat2& a_bar, const Mat2& diffusion);

/// Largest time step for which the forward-Euler moment recursion is stable
/// (all eigenvalue pair sums s of a_bar satisfy |1 + dt s| < 1). Returns 0
/// when no stable step exists.
double euler_stable_dt(const Mat2& a_bar);

} // namespace soie
