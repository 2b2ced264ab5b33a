#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "soie/angles.hpp"
#include "soie/errors.hpp"
#include "soie/impedance.hpp"
#include "soie/linalg.hpp"
#include "soie/random.hpp"
#include "soie/signal.hpp"

namespace soie {

enum class ControllerKind { Soie, FixedHigh, FixedLow, Fixed };

struct AgentConfig {
    double inertia_kg_m2 = 0.0080;
    ControllerKind controller = ControllerKind::Fixed;
    double lambda = 0.5;
    NoiseSpec sensing{};
    double motor_std_nm = 0.0;

    void validate() const;
    ImpedanceGains gains() const { return gains_from_lambda(lambda); }
};

struct ConnectionSpec {
    double stiffness_nm_per_rad = 17.2;
    double damping_nm_s_per_rad = 0.0;

    void validate() const;
};

/// Closed-loop error dynamics: state z = [position error, velocity error].
struct ClosedLoop {
    Mat2 a_bar;
    Vec2 b;
};

/// A_bar = A - B H - B L' for the pure-inertia residual plant (the learned
/// feedforward cancels the rigid-body dynamics, leaving K = D = 0).
ClosedLoop closed_loop_matrices(const AgentConfig& agent, const ConnectionSpec& conn);

struct AgentSeries {
    std::vector<double> q_rad;
    std::vector<double> qd_rad;
    std::vector<double> sensed_target_rad;
};

/// Per-trial record. Error-state series are stored in radians; the torque
/// series holds the torque acting on agent 0 (agent 1 receives its negative).
struct TrialRecord {
    double dt_s = 0.0;
    std::vector<double> time_s;
    std::vector<double> target_rad;
    std::vector<AgentSeries> agents;
    std::vector<double> torque_nm;
    std::map<std::string, double> metrics;

    std::size_t samples() const { return time_s.size(); }
};

/// How one noise draw per step enters the integration.
///   white_noise: fluctuations scale with 1/sqrt(dt); the simulation is the
///     Euler-Maruyama discretization of the white-noise closed loop, matching
///     the moment equations at any step size.
///   sampled: draws are applied as-is and held over the step, matching the
///     discrete-time controller of the physical rig.
enum class NoiseConvention { white_noise, sampled };

namespace detail {

struct FeedbackGains {
    double k_fb = 0.0;  // Nm/rad
    double d_fb = 0.0;  // Nm s/rad
};

inline FeedbackGains feedback_gains(const AgentConfig& agent) {
    const ImpedanceGains g = gains_from_lambda(agent.lambda);
    return {g.stiffness_nm_per_rad, g.viscosity_nm_s_per_rad};
}

// One Euler step of the error dynamics, shared verbatim by the design and
// experiment models so that a decoupled pair reproduces solo runs bit-exactly.
// nu is the effective position-sensing perturbation, mu the state the
// connection pulls toward (exogenous noise or the partner's actual error
// state), zeta the effective motor torque noise.
inline Vec2 error_step(const Vec2& z, const FeedbackGains& gains, const ConnectionSpec& conn,
                       double nu, const Vec2& mu, double zeta, double inertia, double dt) {
    const double torque = -gains.k_fb * (z.x + nu) - gains.d_fb * z.y +
                          conn.stiffness_nm_per_rad * (mu.x - z.x) +
                          conn.damping_nm_s_per_rad * (mu.y - z.y) + zeta;
    return {z.x + dt * z.y, z.y + dt * torque / inertia};
}

} // namespace detail

/// Walks the design-model error trajectory without storing it; the visitor
/// receives (sample_index, z) for every sample including the initial state.
/// Channels with zero spread skip their stream draws.
template <typename Visitor>
void visit_design_errors(const AgentConfig& agent, const ConnectionSpec& conn,
                         const NoiseSpec& haptic, double dt_s, double duration_s,
                         const StreamKey& key, Vec2 z0, NoiseConvention convention,
                         Visitor&& visit) {
    agent.validate();
    conn.validate();
    haptic.validate();
    if (dt_s <= 0.0) throw ConfigError("dt must be > 0");
    if (duration_s / dt_s < 2.0) throw ConfigError("duration must span at least two steps");

    const detail::FeedbackGains gains = detail::feedback_gains(agent);
    const std::size_t steps = static_cast<std::size_t>(duration_s / dt_s + 0.5);
    const double scale =
        convention == NoiseConvention::white_noise ? 1.0 / std::sqrt(dt_s) : 1.0;

    SeededStream sensing = key.channel(Channel::sensing);
    SeededStream haptic_stream = key.channel(Channel::haptic);
    SeededStream motor = key.channel(Channel::motor);

    const double nu_bias = deg_to_rad(agent.sensing.bias_deg);
    const double nu_std = deg_to_rad(agent.sensing.std_deg);
    const double mu_bias = deg_to_rad(haptic.bias_deg);
    const double mu_std = deg_to_rad(haptic.std_deg);

    Vec2 z = z0;
    visit(std::size_t{0}, z);
    for (std::size_t i = 0; i < steps; ++i) {
        const double nu =
            nu_std > 0.0 ? nu_bias + nu_std * scale * sensing.normal() : nu_bias;
        const Vec2 mu{
            mu_std > 0.0 ? mu_bias + mu_std * scale * haptic_stream.normal() : mu_bias, 0.0};
        const double zeta =
            agent.motor_std_nm > 0.0 ? agent.motor_std_nm * scale * motor.normal() : 0.0;
        z = detail::error_step(z, gains, conn, nu, mu, zeta, agent.inertia_kg_m2, dt_s);
        if (z.x * z.x + z.y * z.y > 1e12) {
            throw DivergedTrialError("design-model trial diverged", i + 1);
        }
        visit(i + 1, z);
    }
}

/// Error-state trajectory of the single-agent design model, where the partner
/// appears only as exogenous haptic noise. One draw per channel per step;
/// biases enter the drift.
std::vector<Vec2> simulate_design_errors(const AgentConfig& agent, const ConnectionSpec& conn,
                                         const NoiseSpec& haptic, double dt_s, double duration_s,
                                         const StreamKey& key, Vec2 z0 = {},
                                         NoiseConvention convention =
                                             NoiseConvention::white_noise);

/// Design-model trial dressed with the target trajectory into a full record.
TrialRecord simulate_design_model(const AgentConfig& agent, const ConnectionSpec& conn,
                                  const NoiseSpec& haptic, const TargetSpec& target, double dt_s,
                                  const StreamKey& key, Vec2 z0 = {},
                                  NoiseConvention convention = NoiseConvention::white_noise);

/// Two fully coupled agents exchanging real spring torque computed from the
/// partner's simulated state. With zero connection stiffness and damping this
/// reproduces two independent design-model runs bit-exactly (same convention,
/// same streams).
TrialRecord simulate_coupled_pair(const AgentConfig& agent_a, const AgentConfig& agent_b,
                                  const ConnectionSpec& conn, const TargetSpec& target,
                                  double dt_s, const StreamKey& key,
                                  NoiseConvention convention = NoiseConvention::sampled);

/// Target estimate decoded from own sensing plus the interaction torque,
/// eta_hat = eta_sensed + tau / K_lambda.
std::vector<double> decode_target(const TrialRecord& trial, double agent_lambda,
                                  std::size_t which_agent);

} // namespace soie
