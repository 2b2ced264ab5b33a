#include "soie/moments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "soie/angles.hpp"
#include "soie/errors.hpp"

namespace soie {

namespace {

// The explicit Euler update skews the covariance off the PSD cone during
// transients, by an amount that grows with dt |A|. Mild skew is projected
// back; severe indefiniteness (or a non-finite entry) means the step cannot
// integrate these dynamics.
Mat2 clamp_psd(const Mat2& m, const char* who) {
    if (!std::isfinite(m.a11) || !std::isfinite(m.a12) || !std::isfinite(m.a22)) {
        throw NumericalError(std::string(who) + ": covariance diverged; reduce dt");
    }
    const auto eig = m.symmetric_eigenvalues();
    if (eig[0] >= 0.0) return m;
    if (eig[1] <= 0.0 || -eig[0] > 0.3 * eig[1]) {
        throw NumericalError(std::string(who) +
                             ": covariance lost positive semi-definiteness; reduce dt");
    }
    return {m.a11 - eig[0], m.a12, m.a21, m.a22 - eig[0]};
}

void check_weights_psd(const Mat2& m, const char* name) {
    const Mat2 sym = m.symmetrized();
    if (std::abs(m.a12 - m.a21) > 1e-12 * std::max(1.0, m.max_abs())) {
        throw ConfigError(std::string(name) + " must be symmetric");
    }
    if (sym.symmetric_eigenvalues()[0] < -1e-12) {
        throw ConfigError(std::string(name) + " must be positive semi-definite");
    }
}

unsigned worker_count(unsigned jobs, std::size_t tasks) {
    unsigned n = jobs != 0 ? jobs : std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(tasks, 1)));
}

} // namespace

void CostWeights::validate() const {
    check_weights_psd(q, "cost weight Q");
    check_weights_psd(q_terminal, "terminal weight Q_T");
    if (r < 0.0) throw ConfigError("effort weight R must be >= 0");
}

DesignModel design_model_terms(const AgentConfig& agent, const ConnectionSpec& conn,
                               const NoiseSpec& haptic) {
    agent.validate();
    conn.validate();
    haptic.validate();

    const ClosedLoop cl = closed_loop_matrices(agent, conn);
    const ImpedanceGains gains = agent.gains();
    const double k_fb = gains.stiffness_nm_per_rad;
    const double k_conn = conn.stiffness_nm_per_rad;
    const double inv_i = 1.0 / agent.inertia_kg_m2;

    const double nu_bias = deg_to_rad(agent.sensing.bias_deg);
    const double nu_std = deg_to_rad(agent.sensing.std_deg);
    const double mu_bias = deg_to_rad(haptic.bias_deg);
    const double mu_std = deg_to_rad(haptic.std_deg);

    DesignModel model;
    model.a_bar = cl.a_bar;
    model.b = cl.b;
    model.drift = {0.0, (k_conn * mu_bias - k_fb * nu_bias) * inv_i};
    const double torque_var = k_fb * k_fb * nu_std * nu_std + k_conn * k_conn * mu_std * mu_std +
                              agent.motor_std_nm * agent.motor_std_nm;
    model.diffusion = {0.0, 0.0, 0.0, torque_var * inv_i * inv_i};
    return model;
}

MomentTrajectory propagate_moments(const Mat2& a_bar, const Vec2& drift, const Mat2& diffusion,
                                   const StateMoments& init, double dt_s, double horizon_s) {
    if (dt_s <= 0.0) throw ConfigError("dt must be > 0");
    if (horizon_s < dt_s) throw ConfigError("horizon must be at least one step");

    const std::size_t steps = static_cast<std::size_t>(horizon_s / dt_s + 0.5);
    MomentTrajectory traj;
    traj.dt_s = dt_s;
    traj.points.resize(steps + 1);
    traj.points[0] = init;
    traj.points[0].cov = init.cov.symmetrized();

    Vec2 m = traj.points[0].mean;
    Mat2 p = traj.points[0].cov;
    const Mat2 a_bar_t = a_bar.transpose();
    for (std::size_t i = 0; i < steps; ++i) {
        m = m + dt_s * (a_bar * m + drift);
        p = p + dt_s * (a_bar * p + p * a_bar_t + diffusion);
        p = clamp_psd(p.symmetrized(), "propagate_moments");
        traj.points[i + 1] = {m, p};
    }
    return traj;
}

MomentTrajectory propagate_moments(const AgentConfig& agent, const ConnectionSpec& conn,
                                   const NoiseSpec& haptic, const StateMoments& init, double dt_s,
                                   double horizon_s) {
    const DesignModel model = design_model_terms(agent, conn, haptic);
    return propagate_moments(model.a_bar, model.drift, model.diffusion, init, dt_s, horizon_s);
}

namespace {

// Per-step accumulators for one chunk of trials: sums of z and of z z'.
struct ChunkSums {
    std::vector<double> sx, sy, sxx, sxy, syy;

    explicit ChunkSums(std::size_t samples)
        : sx(samples, 0.0), sy(samples, 0.0), sxx(samples, 0.0), sxy(samples, 0.0),
          syy(samples, 0.0) {}

    void add(std::size_t i, const Vec2& z) {
        sx[i] += z.x;
        sy[i] += z.y;
        sxx[i] += z.x * z.x;
        sxy[i] += z.x * z.y;
        syy[i] += z.y * z.y;
    }
};

constexpr std::size_t kChunkTrials = 64;

template <typename PerChunk>
void run_chunked_trials(unsigned jobs, std::size_t n_chunks, const PerChunk& run_chunk) {
    const unsigned workers = worker_count(jobs, n_chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t c = next.fetch_add(1);
                if (c >= n_chunks) return;
                run_chunk(c);
            }
        });
    }
    for (std::thread& t : pool) t.join();
}

} // namespace

MomentTrajectory mc_estimate_moments(const AgentConfig& agent, const ConnectionSpec& conn,
                                     const NoiseSpec& haptic, const StateMoments& init,
                                     double dt_s, double horizon_s, std::size_t n_trials,
                                     std::uint64_t master_seed, unsigned jobs) {
    if (n_trials < 2) throw ConfigError("Monte-Carlo estimation needs at least 2 trials");

    const std::size_t steps = static_cast<std::size_t>(horizon_s / dt_s + 0.5);
    const std::size_t samples = steps + 1;
    const std::size_t n_chunks = (n_trials + kChunkTrials - 1) / kChunkTrials;

    std::vector<ChunkSums> chunks(n_chunks, ChunkSums(samples));
    run_chunked_trials(jobs, n_chunks, [&](std::size_t c) {
        const std::size_t lo = c * kChunkTrials;
        const std::size_t hi = std::min(lo + kChunkTrials, n_trials);
        for (std::size_t trial = lo; trial < hi; ++trial) {
            visit_design_errors(agent, conn, haptic, dt_s, horizon_s,
                                StreamKey{master_seed, trial}, init.mean,
                                NoiseConvention::white_noise,
                                [&](std::size_t i, const Vec2& z) { chunks[c].add(i, z); });
        }
    });

    // Reduce in chunk (trial) order for bit-exactness under any worker count.
    MomentTrajectory traj;
    traj.dt_s = dt_s;
    traj.points.resize(samples);
    const double inv_n = 1.0 / static_cast<double>(n_trials);
    for (std::size_t i = 0; i < samples; ++i) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
        for (const ChunkSums& ch : chunks) {
            sx += ch.sx[i];
            sy += ch.sy[i];
            sxx += ch.sxx[i];
            sxy += ch.sxy[i];
            syy += ch.syy[i];
        }
        const Vec2 mean{sx * inv_n, sy * inv_n};
        const double pxx = sxx * inv_n - mean.x * mean.x;
        const double pxy = sxy * inv_n - mean.x * mean.y;
        const double pyy = syy * inv_n - mean.y * mean.y;
        traj.points[i] = {mean, Mat2{pxx, pxy, pxy, pyy}};
    }
    return traj;
}

std::vector<McCheckpoint> mc_checkpoint_moments(const AgentConfig& agent,
                                                const ConnectionSpec& conn,
                                                const NoiseSpec& haptic, const StateMoments& init,
                                                double dt_s, double horizon_s,
                                                std::size_t n_trials, std::uint64_t master_seed,
                                                const std::vector<double>& times_s,
                                                unsigned jobs) {
    if (n_trials < 2) throw ConfigError("Monte-Carlo estimation needs at least 2 trials");

    std::vector<std::size_t> idx;
    idx.reserve(times_s.size());
    const std::size_t steps = static_cast<std::size_t>(horizon_s / dt_s + 0.5);
    for (double t : times_s) {
        const std::size_t i = static_cast<std::size_t>(t / dt_s + 0.5);
        if (i > steps) throw ConfigError("checkpoint time beyond horizon");
        if (!idx.empty() && i < idx.back()) {
            throw ConfigError("checkpoint times must be ascending");
        }
        idx.push_back(i);
    }

    // First and second sample moments of z and of the products (x^2, xy, y^2),
    // per checkpoint, accumulated per chunk.
    struct CheckSums {
        std::array<double, 5> s1{};   // x, y, xx, xy, yy
        std::array<double, 5> s2{};   // squares of the same quantities
    };
    const std::size_t n_chunks = (n_trials + kChunkTrials - 1) / kChunkTrials;
    std::vector<std::vector<CheckSums>> chunks(n_chunks,
                                               std::vector<CheckSums>(idx.size()));

    run_chunked_trials(jobs, n_chunks, [&](std::size_t c) {
        const std::size_t lo = c * kChunkTrials;
        const std::size_t hi = std::min(lo + kChunkTrials, n_trials);
        std::vector<Vec2> at(idx.size());
        for (std::size_t trial = lo; trial < hi; ++trial) {
            std::size_t cursor = 0;
            visit_design_errors(agent, conn, haptic, dt_s, horizon_s,
                                StreamKey{master_seed, trial}, init.mean,
                                NoiseConvention::white_noise,
                                [&](std::size_t i, const Vec2& z) {
                                    while (cursor < idx.size() && idx[cursor] == i) {
                                        at[cursor] = z;
                                        ++cursor;
                                    }
                                });
            for (std::size_t k = 0; k < idx.size(); ++k) {
                const Vec2& v = at[k];
                const std::array<double, 5> obs{v.x, v.y, v.x * v.x, v.x * v.y, v.y * v.y};
                for (int j = 0; j < 5; ++j) {
                    chunks[c][k].s1[j] += obs[j];
                    chunks[c][k].s2[j] += obs[j] * obs[j];
                }
            }
        }
    });

    const double n = static_cast<double>(n_trials);
    std::vector<McCheckpoint> out(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        std::array<double, 5> s1{};
        std::array<double, 5> s2{};
        for (std::size_t c = 0; c < n_chunks; ++c) {
            for (int j = 0; j < 5; ++j) {
                s1[j] += chunks[c][k].s1[j];
                s2[j] += chunks[c][k].s2[j];
            }
        }
        std::array<double, 5> mean{};
        std::array<double, 5> se{};
        for (int j = 0; j < 5; ++j) {
            mean[j] = s1[j] / n;
            const double var = std::max(0.0, s2[j] / n - mean[j] * mean[j]);
            se[j] = std::sqrt(var / n);
        }
        McCheckpoint& cp = out[k];
        cp.t_s = times_s[k];
        cp.moments.mean = {mean[0], mean[1]};
        const double pxx = mean[2] - mean[0] * mean[0];
        const double pxy = mean[3] - mean[0] * mean[1];
        const double pyy = mean[4] - mean[1] * mean[1];
        cp.moments.cov = {pxx, pxy, pxy, pyy};
        cp.mean_se = {se[0], se[1]};
        // SE of the covariance entries, from the spread of the trial products.
        cp.cov_se = {se[2], se[3], se[3], se[4]};
    }
    return out;
}

double deterministic_cost(const std::vector<StateMoments>& trajectory, double lambda,
                          const CostWeights& weights, double dt_s) {
    if (trajectory.empty()) throw ConfigError("deterministic_cost: empty trajectory");
    if (dt_s <= 0.0) throw ConfigError("dt must be > 0");
    weights.validate();

    const double effort = lambda * weights.r * lambda;
    double cost = 0.0;
    for (std::size_t i = 0; i + 1 < trajectory.size(); ++i) {
        const StateMoments& s = trajectory[i];
        cost += (quadratic_form(s.mean, weights.q) + effort +
                 trace_product(weights.q, s.cov)) * dt_s;
    }
    const StateMoments& last = trajectory.back();
    if (trajectory.size() == 1) {
        cost += (quadratic_form(last.mean, weights.q) + effort +
                 trace_product(weights.q, last.cov)) * dt_s;
    }
    cost += quadratic_form(last.mean, weights.q_terminal) +
            trace_product(weights.q_terminal, last.cov);
    return cost;
}

double euler_stable_dt(const Mat2& a_bar) {
    // Eigenvalues of a_bar: tr/2 +- sqrt(tr^2/4 - det).
    const double half_tr = 0.5 * a_bar.trace();
    const double disc = half_tr * half_tr - a_bar.det();

    double re1, im1, re2, im2;
    if (disc >= 0.0) {
        const double root = std::sqrt(disc);
        re1 = half_tr - root;
        re2 = half_tr + root;
        im1 = im2 = 0.0;
    } else {
        re1 = re2 = half_tr;
        im1 = std::sqrt(-disc);
        im2 = -im1;
    }

    // Moment-map modes are the pairwise sums of state eigenvalues.
    const double sums[3][2] = {
        {2.0 * re1, 2.0 * im1}, {re1 + re2, im1 + im2}, {2.0 * re2, 2.0 * im2}};
    double bound = std::numeric_limits<double>::infinity();
    for (const auto& s : sums) {
        const double re = s[0];
        const double mag2 = s[0] * s[0] + s[1] * s[1];
        if (re >= 0.0) return 0.0;
        if (mag2 > 0.0) bound = std::min(bound, -2.0 * re / mag2);
    }
    return bound;
}

Mat2 lyapunov_steady_state(const Mat2& a_bar, const Mat2& diffusion) {
    if (!a_bar.is_hurwitz()) {
        throw NumericalError("lyapunov_steady_state: matrix is not Hurwitz, no steady state");
    }
    const Mat2 w = diffusion.symmetrized();

    // Unknowns (p11, p12, p22) from the three independent entries of
    // a_bar P + P a_bar' + W = 0.
    double m[3][4] = {
        {2.0 * a_bar.a11, 2.0 * a_bar.a12, 0.0, -w.a11},
        {a_bar.a21, a_bar.a11 + a_bar.a22, a_bar.a12, -w.a12},
        {0.0, 2.0 * a_bar.a21, 2.0 * a_bar.a22, -w.a22},
    };

    // Gaussian elimination with partial pivoting.
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r) {
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        }
        if (std::abs(m[pivot][col]) < 1e-300) {
            throw NumericalError("lyapunov_steady_state: singular system");
        }
        std::swap(m[col], m[pivot]);
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
        }
    }
    const double p11 = m[0][3] / m[0][0];
    const double p12 = m[1][3] / m[1][1];
    const double p22 = m[2][3] / m[2][2];
    return {p11, p12, p12, p22};
}

} // namespace soie
