#include "soie/optimal_impedance.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "soie/angles.hpp"
#include "soie/errors.hpp"

namespace soie {

namespace {

AgentConfig design_agent(double lambda, const NoiseSpec& own, const DesignConfig& cfg) {
    AgentConfig agent;
    agent.inertia_kg_m2 = cfg.inertia_kg_m2;
    agent.controller = ControllerKind::Soie;
    agent.lambda = lambda;
    agent.sensing = own;
    agent.motor_std_nm = cfg.motor_std_nm;
    return agent;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace

void DesignConfig::validate() const {
    if (inertia_kg_m2 <= 0.0) throw ConfigError("design inertia must be > 0");
    connection.validate();
    weights.validate();
    if (dt_s <= 0.0 || horizon_s < dt_s) throw ConfigError("invalid design dt/horizon");
    if (haptic_std_deg < 0.0) throw ConfigError("haptic noise std must be >= 0");
    if (grid_points < 2) throw ConfigError("lambda grid needs at least 2 points");
    if (refine_tol <= 0.0) throw ConfigError("refinement tolerance must be > 0");
}

double design_cost(double lambda, const NoiseSpec& own, const NoiseSpec& haptic,
                   const DesignConfig& cfg) {
    cfg.validate();
    const AgentConfig agent = design_agent(lambda, own, cfg);
    const DesignModel model = design_model_terms(agent, cfg.connection, haptic);
    if (euler_stable_dt(model.a_bar) <= cfg.dt_s) {
        throw NumericalError("design_cost: propagation unstable at this impedance and step");
    }

    // Fused propagation and cost accumulation; the same forward-Euler
    // recursion as propagate_moments, without storing the trajectory. The
    // The quadratic weights act on degree-valued errors (the gain
    // parameterization is per degree), so the running terms are scaled.
    //
    // With independent_bias_signs the sensing-bias and haptic-bias mean
    // responses are propagated separately and their quadratic costs added,
    // which is the expected cost over unaligned bias directions.
    const std::size_t steps = static_cast<std::size_t>(cfg.horizon_s / cfg.dt_s + 0.5);
    constexpr double s = 180.0 / kPi;
    const double s2 = s * s;
    const Mat2 a_bar_t = model.a_bar.transpose();
    const ImpedanceGains gains = gains_from_lambda(lambda);
    const double inv_i = 1.0 / cfg.inertia_kg_m2;
    Vec2 drift_nu{0.0, -gains.stiffness_nm_per_rad * deg_to_rad(own.bias_deg) * inv_i};
    Vec2 drift_mu{0.0,
                  cfg.connection.stiffness_nm_per_rad * deg_to_rad(haptic.bias_deg) * inv_i};

    Vec2 m = cfg.init.mean;
    Vec2 m_nu{};
    Vec2 m_mu{};
    Mat2 p = cfg.init.cov.symmetrized();
    const double effort = lambda * cfg.weights.r * lambda;
    const bool split = cfg.independent_bias_signs;

    double cost = 0.0;
    for (std::size_t i = 0; i < steps; ++i) {
        double mean_term;
        if (split) {
            mean_term = quadratic_form(m * s, cfg.weights.q) +
                        quadratic_form(m_nu * s, cfg.weights.q) +
                        quadratic_form(m_mu * s, cfg.weights.q);
        } else {
            mean_term = quadratic_form(m * s, cfg.weights.q);
        }
        cost += (mean_term + effort + trace_product(cfg.weights.q, p * s2)) * cfg.dt_s;
        if (split) {
            // m carries only the initial condition; the bias responses evolve
            // separately from zero.
            m = m + cfg.dt_s * (model.a_bar * m);
            m_nu = m_nu + cfg.dt_s * (model.a_bar * m_nu + drift_nu);
            m_mu = m_mu + cfg.dt_s * (model.a_bar * m_mu + drift_mu);
        } else {
            m = m + cfg.dt_s * (model.a_bar * m + model.drift);
        }
        p = p + cfg.dt_s * (model.a_bar * p + p * a_bar_t + model.diffusion);
        p = p.symmetrized();
    }
    if (!std::isfinite(p.a11) || !std::isfinite(m.x)) {
        throw NumericalError("design_cost: propagation diverged");
    }
    double terminal_mean;
    if (split) {
        terminal_mean = quadratic_form(m * s, cfg.weights.q_terminal) +
                        quadratic_form(m_nu * s, cfg.weights.q_terminal) +
                        quadratic_form(m_mu * s, cfg.weights.q_terminal);
    } else {
        terminal_mean = quadratic_form(m * s, cfg.weights.q_terminal);
    }
    cost += terminal_mean + trace_product(cfg.weights.q_terminal, p * s2);
    return cost;
}

namespace {

double design_cost_or_inf(double lambda, const NoiseSpec& own, const NoiseSpec& haptic,
                          const DesignConfig& cfg) {
    try {
        return design_cost(lambda, own, haptic, cfg);
    } catch (const NumericalError&) {
        return kInf;
    }
}

} // namespace

OptimalImpedance optimal_lambda(const NoiseSpec& own, const NoiseSpec& haptic,
                                const DesignConfig& cfg) {
    cfg.validate();
    const int n = cfg.grid_points;
    std::vector<double> costs(n);
    double best_cost = kInf;
    int best = 0;
    double worst_finite = -kInf;
    for (int i = 0; i < n; ++i) {
        const double lambda = static_cast<double>(i) / static_cast<double>(n - 1);
        costs[i] = design_cost_or_inf(lambda, own, haptic, cfg);
        if (costs[i] < best_cost) {
            best_cost = costs[i];
            best = i;
        }
        if (std::isfinite(costs[i])) worst_finite = std::max(worst_finite, costs[i]);
    }
    if (!std::isfinite(best_cost)) {
        throw NumericalError("optimal_lambda: no impedance admits a stable propagation");
    }

    // Flat landscape over the feasible candidates: report the tie and the
    // smallest grid minimizer.
    if (worst_finite - best_cost < 1e-12) {
        return {static_cast<double>(best) / static_cast<double>(n - 1), best_cost, true};
    }

    // Golden-section refinement inside the bracket around the best grid point.
    const double step = 1.0 / static_cast<double>(n - 1);
    double lo = std::max(0.0, static_cast<double>(best) * step - step);
    double hi = std::min(1.0, static_cast<double>(best) * step + step);
    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    double f1 = design_cost_or_inf(x1, own, haptic, cfg);
    double f2 = design_cost_or_inf(x2, own, haptic, cfg);
    while (hi - lo > cfg.refine_tol) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kInvPhi * (hi - lo);
            f1 = design_cost_or_inf(x1, own, haptic, cfg);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kInvPhi * (hi - lo);
            f2 = design_cost_or_inf(x2, own, haptic, cfg);
        }
    }
    const double refined = (f1 <= f2) ? x1 : x2;
    const double refined_cost = std::min(f1, f2);
    if (refined_cost < best_cost) {
        return {refined, refined_cost, false};
    }
    return {static_cast<double>(best) * step, best_cost, false};
}

double partner_haptic_bias_deg(const NoiseSpec& partner, const DesignConfig& cfg) {
    // One-shot pass: the partner optimizes against an unbiased haptic channel,
    // and its stationary mean error becomes the bias it exports to the agent.
    const NoiseSpec unbiased{0.0, cfg.haptic_std_deg};
    const OptimalImpedance opt = optimal_lambda(partner, unbiased, cfg);
    if (opt.lambda <= 0.0) {
        return std::abs(partner.bias_deg);
    }
    const AgentConfig agent = design_agent(opt.lambda, partner, cfg);
    const MomentTrajectory traj =
        propagate_moments(agent, cfg.connection, unbiased, cfg.init, cfg.dt_s, cfg.horizon_s);
    return std::abs(rad_to_deg(traj.back().mean.x));
}

double stationary_error_deg(double lambda, const NoiseSpec& own, const NoiseSpec& haptic,
                            const DesignConfig& cfg) {
    const AgentConfig agent = design_agent(lambda, own, cfg);
    if (!cfg.independent_bias_signs) {
        const MomentTrajectory traj =
            propagate_moments(agent, cfg.connection, haptic, cfg.init, cfg.dt_s, cfg.horizon_s);
        const StateMoments& tail = traj.back();
        return rad_to_deg(std::sqrt(tail.mean.x * tail.mean.x + tail.cov.a11));
    }

    // Unaligned biases: the two mean responses add in quadrature.
    const NoiseSpec haptic_centered{0.0, haptic.std_deg};
    const MomentTrajectory own_resp = propagate_moments(agent, cfg.connection, haptic_centered,
                                                        cfg.init, cfg.dt_s, cfg.horizon_s);
    AgentConfig unbiased = agent;
    unbiased.sensing.bias_deg = 0.0;
    const MomentTrajectory haptic_resp = propagate_moments(
        unbiased, cfg.connection, NoiseSpec{std::abs(haptic.bias_deg), haptic.std_deg},
        StateMoments{}, cfg.dt_s, cfg.horizon_s);
    const double m_own = own_resp.back().mean.x;
    const double m_haptic = haptic_resp.back().mean.x;
    return rad_to_deg(std::sqrt(m_own * m_own + m_haptic * m_haptic + own_resp.back().cov.a11));
}

double ImpedanceSurface::lambda_min() const {
    double v = lambda.at(0).at(0);
    for (const auto& row : lambda) {
        for (double l : row) v = std::min(v, l);
    }
    return v;
}

double ImpedanceSurface::lambda_max() const {
    double v = lambda.at(0).at(0);
    for (const auto& row : lambda) {
        for (double l : row) v = std::max(v, l);
    }
    return v;
}

ImpedanceSurface impedance_surface(const std::vector<NoiseSpec>& own_grid,
                                   const std::vector<NoiseSpec>& partner_grid,
                                   const DesignConfig& cfg, unsigned jobs) {
    if (own_grid.empty() || partner_grid.empty()) {
        throw ConfigError("impedance_surface: noise grids must be nonempty");
    }
    cfg.validate();

    ImpedanceSurface surface;
    surface.own_bias_deg.reserve(own_grid.size());
    for (const NoiseSpec& s : own_grid) surface.own_bias_deg.push_back(s.bias_deg);
    surface.partner_bias_deg.reserve(partner_grid.size());
    for (const NoiseSpec& s : partner_grid) surface.partner_bias_deg.push_back(s.bias_deg);

    surface.partner_haptic_bias_deg.resize(partner_grid.size());
    for (std::size_t j = 0; j < partner_grid.size(); ++j) {
        surface.partner_haptic_bias_deg[j] = partner_haptic_bias_deg(partner_grid[j], cfg);
    }

    surface.lambda.assign(own_grid.size(), std::vector<double>(partner_grid.size(), 0.0));
    const std::size_t cells = own_grid.size() * partner_grid.size();
    std::atomic<std::size_t> next{0};
    auto run_cells = [&]() {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= cells) return;
            const std::size_t i = c / partner_grid.size();
            const std::size_t j = c % partner_grid.size();
            const NoiseSpec haptic{-surface.partner_haptic_bias_deg[j], cfg.haptic_std_deg};
            surface.lambda[i][j] = optimal_lambda(own_grid[i], haptic, cfg).lambda;
        }
    };

    unsigned workers = jobs != 0 ? jobs : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, cells));
    if (workers <= 1) {
        run_cells();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run_cells);
        for (std::thread& t : pool) t.join();
    }
    return surface;
}

} // namespace soie
