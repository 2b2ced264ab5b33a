#include "soie/dynamics.hpp"

#include <cmath>

namespace soie {

namespace {

constexpr double kDivergenceLimit = 1e6;

} // namespace

void AgentConfig::validate() const {
    if (inertia_kg_m2 <= 0.0) throw ConfigError("agent inertia must be > 0");
    if (lambda < 0.0 || lambda > 1.0) throw ConfigError("agent lambda must lie in [0, 1]");
    sensing.validate();
    if (motor_std_nm < 0.0) throw ConfigError("motor noise std must be >= 0");
}

void ConnectionSpec::validate() const {
    if (stiffness_nm_per_rad < 0.0) throw ConfigError("connection stiffness must be >= 0");
    if (damping_nm_s_per_rad < 0.0) throw ConfigError("connection damping must be >= 0");
}

ClosedLoop closed_loop_matrices(const AgentConfig& agent, const ConnectionSpec& conn) {
    agent.validate();
    conn.validate();
    const detail::FeedbackGains g = detail::feedback_gains(agent);
    const double inv_i = 1.0 / agent.inertia_kg_m2;
    ClosedLoop cl;
    cl.a_bar = {0.0, 1.0,
                -(conn.stiffness_nm_per_rad + g.k_fb) * inv_i,
                -(conn.damping_nm_s_per_rad + g.d_fb) * inv_i};
    cl.b = {0.0, inv_i};
    return cl;
}

std::vector<Vec2> simulate_design_errors(const AgentConfig& agent, const ConnectionSpec& conn,
                                         const NoiseSpec& haptic, double dt_s, double duration_s,
                                         const StreamKey& key, Vec2 z0,
                                         NoiseConvention convention) {
    const std::size_t steps = static_cast<std::size_t>(duration_s / dt_s + 0.5);
    std::vector<Vec2> z;
    z.reserve(steps + 1);
    visit_design_errors(agent, conn, haptic, dt_s, duration_s, key, z0, convention,
                        [&](std::size_t, const Vec2& v) { z.push_back(v); });
    return z;
}

namespace {

// Effective per-step noise draws; kept identical between the record and the
// step that consumed them. Channels with zero spread skip their draws, the
// same rule as visit_design_errors.
struct NoiseDraws {
    std::vector<double> nu;    // per sample, rad
    std::vector<double> zeta;  // per sample, Nm
};

NoiseDraws draw_agent_noise(const AgentConfig& agent, std::size_t samples, double scale,
                            const StreamKey& key, std::uint64_t lane) {
    SeededStream sensing = key.channel(Channel::sensing, lane);
    SeededStream motor = key.channel(Channel::motor, lane);
    const double nu_bias = deg_to_rad(agent.sensing.bias_deg);
    const double nu_std = deg_to_rad(agent.sensing.std_deg);
    NoiseDraws draws;
    draws.nu.resize(samples);
    draws.zeta.resize(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        draws.nu[i] = nu_std > 0.0 ? nu_bias + nu_std * scale * sensing.normal() : nu_bias;
        draws.zeta[i] =
            agent.motor_std_nm > 0.0 ? agent.motor_std_nm * scale * motor.normal() : 0.0;
    }
    return draws;
}

} // namespace

TrialRecord simulate_design_model(const AgentConfig& agent, const ConnectionSpec& conn,
                                  const NoiseSpec& haptic, const TargetSpec& target, double dt_s,
                                  const StreamKey& key, Vec2 z0, NoiseConvention convention) {
    target.validate();
    const std::vector<Vec2> z =
        simulate_design_errors(agent, conn, haptic, dt_s, target.duration_s, key, z0, convention);

    // Re-draw the same channel streams to attach the consumed noise to the record.
    const std::size_t samples = z.size();
    const double scale =
        convention == NoiseConvention::white_noise ? 1.0 / std::sqrt(dt_s) : 1.0;
    SeededStream sensing = key.channel(Channel::sensing);
    SeededStream haptic_stream = key.channel(Channel::haptic);
    const double nu_bias = deg_to_rad(agent.sensing.bias_deg);
    const double nu_std = deg_to_rad(agent.sensing.std_deg);
    const double mu_bias = deg_to_rad(haptic.bias_deg);
    const double mu_std = deg_to_rad(haptic.std_deg);

    TrialRecord rec;
    rec.dt_s = dt_s;
    rec.time_s.resize(samples);
    rec.target_rad.resize(samples);
    rec.torque_nm.resize(samples);
    rec.agents.resize(1);
    AgentSeries& self = rec.agents[0];
    self.q_rad.resize(samples);
    self.qd_rad.resize(samples);
    self.sensed_target_rad.resize(samples);

    for (std::size_t i = 0; i < samples; ++i) {
        const double t = std::min(static_cast<double>(i) * dt_s, target.duration_s);
        const double eta = target.position_rad(t);
        const double nu =
            nu_std > 0.0 ? nu_bias + nu_std * scale * sensing.normal() : nu_bias;
        const Vec2 mu{
            mu_std > 0.0 ? mu_bias + mu_std * scale * haptic_stream.normal() : mu_bias, 0.0};
        rec.time_s[i] = t;
        rec.target_rad[i] = eta;
        self.q_rad[i] = eta + z[i].x;
        self.qd_rad[i] = target.velocity_rad(t) + z[i].y;
        self.sensed_target_rad[i] = eta - nu;
        rec.torque_nm[i] = conn.stiffness_nm_per_rad * (mu.x - z[i].x) +
                           conn.damping_nm_s_per_rad * (mu.y - z[i].y);
    }
    return rec;
}

TrialRecord simulate_coupled_pair(const AgentConfig& agent_a, const AgentConfig& agent_b,
                                  const ConnectionSpec& conn, const TargetSpec& target,
                                  double dt_s, const StreamKey& key,
                                  NoiseConvention convention) {
    agent_a.validate();
    agent_b.validate();
    conn.validate();
    target.validate();
    if (dt_s <= 0.0) throw ConfigError("dt must be > 0");
    if (target.duration_s / dt_s < 2.0) {
        throw ConfigError("duration must span at least two steps");
    }

    const std::size_t steps = static_cast<std::size_t>(target.duration_s / dt_s + 0.5);
    const std::size_t samples = steps + 1;
    const double scale =
        convention == NoiseConvention::white_noise ? 1.0 / std::sqrt(dt_s) : 1.0;

    const detail::FeedbackGains gains_a = detail::feedback_gains(agent_a);
    const detail::FeedbackGains gains_b = detail::feedback_gains(agent_b);
    const NoiseDraws noise_a = draw_agent_noise(agent_a, samples, scale, key, 0);
    const NoiseDraws noise_b = draw_agent_noise(agent_b, samples, scale, key, 1);

    TrialRecord rec;
    rec.dt_s = dt_s;
    rec.time_s.resize(samples);
    rec.target_rad.resize(samples);
    rec.torque_nm.resize(samples);
    rec.agents.resize(2);
    for (AgentSeries& s : rec.agents) {
        s.q_rad.resize(samples);
        s.qd_rad.resize(samples);
        s.sensed_target_rad.resize(samples);
    }

    Vec2 za{};
    Vec2 zb{};
    for (std::size_t i = 0; i < samples; ++i) {
        const double t = std::min(static_cast<double>(i) * dt_s, target.duration_s);
        const double eta = target.position_rad(t);
        const double eta_dot = target.velocity_rad(t);

        // Torque on agent a from the real spring to the partner's state.
        const double tau_a = conn.stiffness_nm_per_rad * (zb.x - za.x) +
                             conn.damping_nm_s_per_rad * (zb.y - za.y);

        rec.time_s[i] = t;
        rec.target_rad[i] = eta;
        rec.torque_nm[i] = tau_a;
        rec.agents[0].q_rad[i] = eta + za.x;
        rec.agents[0].qd_rad[i] = eta_dot + za.y;
        rec.agents[0].sensed_target_rad[i] = eta - noise_a.nu[i];
        rec.agents[1].q_rad[i] = eta + zb.x;
        rec.agents[1].qd_rad[i] = eta_dot + zb.y;
        rec.agents[1].sensed_target_rad[i] = eta - noise_b.nu[i];

        if (i == steps) break;

        const Vec2 za_next = detail::error_step(za, gains_a, conn, noise_a.nu[i], zb,
                                                noise_a.zeta[i], agent_a.inertia_kg_m2, dt_s);
        const Vec2 zb_next = detail::error_step(zb, gains_b, conn, noise_b.nu[i], za,
                                                noise_b.zeta[i], agent_b.inertia_kg_m2, dt_s);
        za = za_next;
        zb = zb_next;
        if (za.norm() > kDivergenceLimit || zb.norm() > kDivergenceLimit) {
            throw DivergedTrialError("coupled-pair trial diverged", i + 1);
        }
    }
    return rec;
}

std::vector<double> decode_target(const TrialRecord& trial, double agent_lambda,
                                  std::size_t which_agent) {
    if (agent_lambda <= 0.0) {
        throw ConfigError("decode_target requires a positive stiffness gain");
    }
    if (which_agent >= trial.agents.size()) {
        throw ConfigError("decode_target: no such agent in trial");
    }
    const double k_fb = gains_from_lambda(agent_lambda).stiffness_nm_per_rad;
    const double tau_sign = (which_agent == 0) ? 1.0 : -1.0;
    const AgentSeries& self = trial.agents[which_agent];

    std::vector<double> decoded(trial.samples());
    for (std::size_t i = 0; i < decoded.size(); ++i) {
        decoded[i] = self.sensed_target_rad[i] + tau_sign * trial.torque_nm[i] / k_fb;
    }
    return decoded;
}

} // namespace soie
