#include "soie/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "soie/angles.hpp"
#include "soie/errors.hpp"
#include "soie/metrics.hpp"

namespace soie {

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

class Fnv1aHasher {
public:
    void add(const std::string& key, double value) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%s=%.17g;", key.c_str(), value);
        feed(buf);
    }
    void add(const std::string& key, const std::string& value) {
        feed(key + "=" + value + ";");
    }
    std::uint64_t digest() const { return state_; }

private:
    void feed(const std::string& s) {
        for (unsigned char c : s) {
            state_ ^= c;
            state_ *= 0x100000001B3ULL;
        }
    }
    std::uint64_t state_ = 0xCBF29CE484222325ULL;
};

unsigned worker_count(unsigned jobs, std::size_t tasks) {
    unsigned n = jobs != 0 ? jobs : std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(tasks, 1)));
}

template <typename Task>
void parallel_for(std::size_t count, unsigned jobs, const Task& task) {
    const unsigned workers = worker_count(jobs, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                task(i);
            }
        });
    }
    for (std::thread& t : pool) t.join();
}

// Partial sums of one trial's communication series, merged in row order so the
// pooled statistics do not depend on the thread schedule.
struct CommPartial {
    // Pooled Pearson r and SNR inputs, decoded vs truth (radians).
    double n = 0.0;
    double s_dec = 0.0, s_tru = 0.0;
    double s_dec2 = 0.0, s_tru2 = 0.0, s_cross = 0.0;
    double s_dev2 = 0.0;  // mean-square decode deviation
    // Per-trial normalized cross-correlation over +-window lags.
    std::vector<double> xcorr;
    double trial_r = 0.0;
};

constexpr double kDelayWindowS = 2.0;

// Metrics run on 100 Hz series, the hardware recording rate; the simulation
// itself uses the finer stable step.
constexpr double kRecordDtS = 0.01;

std::vector<double> decimate(const std::vector<double>& v, std::size_t stride) {
    if (stride <= 1) return v;
    std::vector<double> out;
    out.reserve(v.size() / stride + 1);
    for (std::size_t i = 0; i < v.size(); i += stride) out.push_back(v[i]);
    return out;
}

CommPartial comm_partial(const std::vector<double>& decoded, const std::vector<double>& truth,
                         double dt_s) {
    CommPartial part;
    const std::size_t n = decoded.size();
    part.n = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        part.s_dec += decoded[i];
        part.s_tru += truth[i];
        part.s_dec2 += decoded[i] * decoded[i];
        part.s_tru2 += truth[i] * truth[i];
        part.s_cross += decoded[i] * truth[i];
        const double dev = decoded[i] - truth[i];
        part.s_dev2 += dev * dev;
    }
    part.trial_r = pearson_r(decoded, truth);

    const double m_dec = part.s_dec / part.n;
    const double m_tru = part.s_tru / part.n;
    const long max_lag =
        std::min(static_cast<long>(kDelayWindowS / dt_s + 0.5), static_cast<long>(n) - 2);

    // Per-lag normalization over the overlapping segments, as in xcorr_delay_s.
    std::vector<double> pe(n + 1, 0.0), te(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double pv = decoded[i] - m_dec;
        const double tv = truth[i] - m_tru;
        pe[i + 1] = pe[i] + pv * pv;
        te[i + 1] = te[i] + tv * tv;
    }
    part.xcorr.assign(static_cast<std::size_t>(2 * max_lag + 1), 0.0);
    for (long lag = -max_lag; lag <= max_lag; ++lag) {
        double s = 0.0;
        const long lo = std::max(0L, lag);
        const long hi = std::min(static_cast<long>(n), static_cast<long>(n) + lag);
        for (long t = lo; t < hi; ++t) {
            s += (decoded[static_cast<std::size_t>(t)] - m_dec) *
                 (truth[static_cast<std::size_t>(t - lag)] - m_tru);
        }
        const double ep = pe[static_cast<std::size_t>(hi)] - pe[static_cast<std::size_t>(lo)];
        const double et = te[static_cast<std::size_t>(hi - lag)] -
                          te[static_cast<std::size_t>(lo - lag)];
        const double norm = std::sqrt(ep * et);
        part.xcorr[static_cast<std::size_t>(lag + max_lag)] = norm > 0.0 ? s / norm : 0.0;
    }
    return part;
}

struct CommAccumulator {
    double n = 0.0;
    double s_dec = 0.0, s_tru = 0.0;
    double s_dec2 = 0.0, s_tru2 = 0.0, s_cross = 0.0;
    double s_dev2 = 0.0;
    double sum_trial_r = 0.0;
    std::size_t trials = 0;
    std::vector<double> xcorr;

    void merge(const CommPartial& p) {
        n += p.n;
        s_dec += p.s_dec;
        s_tru += p.s_tru;
        s_dec2 += p.s_dec2;
        s_tru2 += p.s_tru2;
        s_cross += p.s_cross;
        s_dev2 += p.s_dev2;
        sum_trial_r += p.trial_r;
        ++trials;
        if (xcorr.empty()) xcorr.assign(p.xcorr.size(), 0.0);
        for (std::size_t i = 0; i < p.xcorr.size(); ++i) xcorr[i] += p.xcorr[i];
    }

    CommStats stats(double dt_s) const {
        CommStats s;
        const double cov = s_cross - s_dec * s_tru / n;
        const double vx = s_dec2 - s_dec * s_dec / n;
        const double vy = s_tru2 - s_tru * s_tru / n;
        s.pooled_r = cov / std::sqrt(vx * vy);
        s.mean_trial_r = sum_trial_r / static_cast<double>(trials);
        s.snr_db = 10.0 * std::log10(s_tru2 / s_dev2);
        // Argmax of the pooled cross-correlation, ties toward zero lag.
        const long max_lag = (static_cast<long>(xcorr.size()) - 1) / 2;
        long best_lag = 0;
        double best = xcorr[static_cast<std::size_t>(max_lag)];
        for (long l = 1; l <= max_lag; ++l) {
            for (long lag : {l, -l}) {
                const double c = xcorr[static_cast<std::size_t>(lag + max_lag)];
                if (c > best) {
                    best = c;
                    best_lag = lag;
                }
            }
        }
        s.delay_s = static_cast<double>(best_lag) * dt_s;
        return s;
    }
};

} // namespace

void RunManifest::validate() const {
    target.validate();
    connection.validate();
    design.validate();
    if (dt_s <= 0.0) throw ConfigError("manifest dt must be > 0");
    if (trials_per_cell < 1) throw ConfigError("trials_per_cell must be >= 1");
    if (own_bias_deg.empty() || partner_bias_deg.empty()) {
        throw ConfigError("noise grids must be nonempty");
    }
    if (bias_std_deg < 0.0) throw ConfigError("bias std must be >= 0");
    if (inertia_kg_m2 <= 0.0) throw ConfigError("inertia must be > 0");
    if (motor_std_nm < 0.0) throw ConfigError("motor noise std must be >= 0");
}

std::string RunManifest::hash() const {
    Fnv1aHasher h;
    h.add("experiment", experiment);
    h.add("master_seed", static_cast<double>(master_seed));
    h.add("dt_s", dt_s);
    h.add("target.amplitude_deg", target.amplitude_deg);
    h.add("target.alpha_rad_per_s", target.alpha_rad_per_s);
    h.add("target.beta_rad_per_s", target.beta_rad_per_s);
    h.add("target.duration_s", target.duration_s);
    h.add("target.t0_s", target.t0_s);
    h.add("trials_per_cell", static_cast<double>(trials_per_cell));
    for (std::size_t i = 0; i < own_bias_deg.size(); ++i) {
        h.add("own_bias_deg." + std::to_string(i), own_bias_deg[i]);
    }
    for (std::size_t i = 0; i < partner_bias_deg.size(); ++i) {
        h.add("partner_bias_deg." + std::to_string(i), partner_bias_deg[i]);
    }
    h.add("bias_std_deg", bias_std_deg);
    h.add("connection.stiffness_nm_per_rad", connection.stiffness_nm_per_rad);
    h.add("connection.damping_nm_s_per_rad", connection.damping_nm_s_per_rad);
    h.add("inertia_kg_m2", inertia_kg_m2);
    h.add("motor_std_nm", motor_std_nm);
    h.add("design.inertia_kg_m2", design.inertia_kg_m2);
    h.add("design.connection.stiffness_nm_per_rad", design.connection.stiffness_nm_per_rad);
    h.add("design.connection.damping_nm_s_per_rad", design.connection.damping_nm_s_per_rad);
    h.add("design.q11", design.weights.q.a11);
    h.add("design.q12", design.weights.q.a12);
    h.add("design.q22", design.weights.q.a22);
    h.add("design.qt11", design.weights.q_terminal.a11);
    h.add("design.qt12", design.weights.q_terminal.a12);
    h.add("design.qt22", design.weights.q_terminal.a22);
    h.add("design.r", design.weights.r);
    h.add("design.dt_s", design.dt_s);
    h.add("design.horizon_s", design.horizon_s);
    h.add("design.haptic_std_deg", design.haptic_std_deg);
    h.add("design.motor_std_nm", design.motor_std_nm);
    h.add("design.grid_points", static_cast<double>(design.grid_points));
    h.add("design.refine_tol", design.refine_tol);
    return hex64(h.digest());
}

GridResult run_robot_robot_grid(const RunManifest& manifest, const ImpedanceSurface& surface,
                                unsigned jobs) {
    manifest.validate();
    const std::size_t n_own = manifest.own_bias_deg.size();
    const std::size_t n_partner = manifest.partner_bias_deg.size();
    if (surface.lambda.size() != n_own || surface.lambda.at(0).size() != n_partner) {
        throw MissingPrerequisiteError(
            "impedance surface does not match the manifest noise grid; run optimize first");
    }
    for (std::size_t i = 0; i < n_own; ++i) {
        if (std::abs(surface.own_bias_deg[i] - manifest.own_bias_deg[i]) > 1e-9) {
            throw MissingPrerequisiteError(
                "impedance surface was computed for a different noise grid; run optimize first");
        }
    }
    for (std::size_t j = 0; j < n_partner; ++j) {
        if (std::abs(surface.partner_bias_deg[j] - manifest.partner_bias_deg[j]) > 1e-9) {
            throw MissingPrerequisiteError(
                "impedance surface was computed for a different noise grid; run optimize first");
        }
    }

    GridResult result;
    result.manifest = manifest;
    result.surface = surface;
    result.lambda_high = surface.lambda_max();
    result.lambda_low = surface.lambda_min();

    const std::vector<std::string> controllers{kControllerSoie, kControllerHigh, kControllerLow};
    const std::size_t cells = n_own * n_partner;
    const std::size_t trials = static_cast<std::size_t>(manifest.trials_per_cell);
    const std::size_t total = cells * controllers.size() * trials;

    result.rows.resize(total);
    std::vector<CommPartial> partial_a(total);
    std::vector<CommPartial> partial_b(total);

    result.cell_noise_diff_deg.resize(cells);
    for (std::size_t c = 0; c < cells; ++c) {
        const std::size_t i = c / n_partner;
        const std::size_t j = c % n_partner;
        result.cell_noise_diff_deg[c] =
            std::abs(manifest.own_bias_deg[i] - manifest.partner_bias_deg[j]);
    }

    parallel_for(total, jobs, [&](std::size_t task) {
        const std::size_t trial = task % trials;
        const std::size_t rest = task / trials;
        const std::size_t ctrl = rest % controllers.size();
        const std::size_t cell = rest / controllers.size();
        const std::size_t i = cell / n_partner;
        const std::size_t j = cell % n_partner;

        double lambda_a = 0.0;
        double lambda_b = 0.0;
        if (controllers[ctrl] == kControllerSoie) {
            lambda_a = surface.lambda[i][j];
            lambda_b = surface.lambda[j][i];
        } else if (controllers[ctrl] == kControllerHigh) {
            lambda_a = lambda_b = result.lambda_high;
        } else {
            lambda_a = lambda_b = result.lambda_low;
        }

        AgentConfig agent_a;
        agent_a.inertia_kg_m2 = manifest.inertia_kg_m2;
        agent_a.lambda = lambda_a;
        agent_a.sensing = {manifest.own_bias_deg[i], manifest.bias_std_deg};
        agent_a.motor_std_nm = manifest.motor_std_nm;
        AgentConfig agent_b = agent_a;
        agent_b.lambda = lambda_b;
        agent_b.sensing = {manifest.partner_bias_deg[j], manifest.bias_std_deg};

        // Streams are keyed by (cell, trial) only: controllers see identical
        // noise, so controller comparisons are paired.
        const StreamKey key{manifest.master_seed,
                            static_cast<std::uint64_t>(cell * trials + trial)};
        TargetSpec target = manifest.target;
        target.t0_s = sample_start_offset(target, key.channel(Channel::start_offset));
        // The direction of the display offset is unspecified; one common sign
        // per trial leaves every per-trial metric unchanged (a global
        // symmetry) and keeps pooled series sign-balanced.
        const double bias_sign =
            key.channel(Channel::start_offset, 1).uniform() < 0.5 ? -1.0 : 1.0;
        agent_a.sensing.bias_deg *= bias_sign;
        agent_b.sensing.bias_deg *= bias_sign;

        const TrialRecord rec =
            simulate_coupled_pair(agent_a, agent_b, manifest.connection, target,
                                  manifest.dt_s, key);

        const std::size_t stride =
            std::max<std::size_t>(1, static_cast<std::size_t>(kRecordDtS / rec.dt_s + 0.5));
        const double rec_dt = rec.dt_s * static_cast<double>(stride);
        const std::vector<double> target_rec = decimate(rec.target_rad, stride);
        const std::vector<double> q_a = decimate(rec.agents[0].q_rad, stride);
        const std::vector<double> q_b = decimate(rec.agents[1].q_rad, stride);
        const std::vector<double> torque_rec = decimate(rec.torque_nm, stride);
        const std::vector<double> dec_a = decimate(decode_target(rec, lambda_a, 0), stride);
        const std::vector<double> dec_b = decimate(decode_target(rec, lambda_b, 1), stride);

        GridRow row;
        row.cell = cell;
        row.bias_a_deg = manifest.own_bias_deg[i];
        row.bias_b_deg = manifest.partner_bias_deg[j];
        row.controller = controllers[ctrl];
        row.trial = static_cast<int>(trial);
        row.lambda_a = lambda_a;
        row.lambda_b = lambda_b;
        row.t0_s = target.t0_s;
        row.error_a_deg = rms_tracking_error_deg(q_a, target_rec, rec_dt);
        row.error_b_deg = rms_tracking_error_deg(q_b, target_rec, rec_dt);
        row.error_sum_deg = row.error_a_deg + row.error_b_deg;
        row.effort_nm = rms_effort_nm(torque_rec, rec_dt);
        row.decode_r_a = pearson_r(dec_a, target_rec);
        row.decode_r_b = pearson_r(dec_b, target_rec);
        row.decode_rmse_a_deg = rms_tracking_error_deg(dec_a, target_rec, rec_dt);
        row.decode_rmse_b_deg = rms_tracking_error_deg(dec_b, target_rec, rec_dt);

        result.rows[task] = row;
        partial_a[task] = comm_partial(dec_a, target_rec, rec_dt);
        partial_b[task] = comm_partial(dec_b, target_rec, rec_dt);
    });

    // Deterministic aggregation in row order.
    std::map<std::string, CommAccumulator> comm;
    std::map<std::string, ControllerAggregate> agg;
    for (const std::string& c : controllers) {
        agg[c].cell_error_sum_deg.assign(cells, 0.0);
    }
    for (std::size_t task = 0; task < total; ++task) {
        const GridRow& row = result.rows[task];
        ControllerAggregate& a = agg[row.controller];
        a.trial_error_sum_deg.push_back(row.error_sum_deg);
        a.trial_effort_nm.push_back(row.effort_nm);
        a.cell_error_sum_deg[row.cell] += row.error_sum_deg / static_cast<double>(trials);
        comm[row.controller].merge(partial_a[task]);
        comm[row.controller].merge(partial_b[task]);
    }
    for (const std::string& c : controllers) {
        ControllerAggregate& a = agg[c];
        double se = 0.0;
        double sf = 0.0;
        for (double v : a.trial_error_sum_deg) se += v;
        for (double v : a.trial_effort_nm) sf += v;
        a.mean_error_sum_deg = se / static_cast<double>(a.trial_error_sum_deg.size());
        a.mean_effort_nm = sf / static_cast<double>(a.trial_effort_nm.size());
        const std::size_t stride = std::max<std::size_t>(
            1, static_cast<std::size_t>(kRecordDtS / manifest.dt_s + 0.5));
        a.comm = comm[c].stats(manifest.dt_s * static_cast<double>(stride));
    }

    // Linear trend of the per-cell error difference against the noise gap.
    const auto diff_corr = [&](const std::string& ctrl) {
        CorrelationAccumulator acc;
        for (std::size_t c = 0; c < cells; ++c) {
            const double diff =
                agg[ctrl].cell_error_sum_deg[c] - agg[kControllerSoie].cell_error_sum_deg[c];
            acc.add(diff, result.cell_noise_diff_deg[c]);
        }
        return acc.r();
    };
    result.error_diff_corr_low = diff_corr(kControllerLow);
    result.error_diff_corr_high = diff_corr(kControllerHigh);
    result.by_controller = std::move(agg);
    return result;
}

std::vector<HumanHumanRow> run_human_human_prediction(const HumanModelParams& params,
                                                      const DesignConfig& design) {
    std::vector<HumanHumanRow> rows;
    for (VisualCondition c : {VisualCondition::SS, VisualCondition::SN, VisualCondition::NS,
                              VisualCondition::NN}) {
        const bool self_noisy = (c == VisualCondition::NS || c == VisualCondition::NN);
        const bool partner_noisy = (c == VisualCondition::SN || c == VisualCondition::NN);
        const HumanPrediction pred = predict_human_condition(c, params, design);
        HumanHumanRow row;
        row.condition = c;
        row.self_bias_deg = self_noisy ? params.delta_noisy_deg : params.delta_sharp_deg;
        row.partner_bias_deg = partner_noisy ? params.delta_noisy_deg : params.delta_sharp_deg;
        row.lambda = pred.lambda;
        row.predicted_error_deg = pred.error_deg;
        rows.push_back(row);
    }
    return rows;
}

HumanRobotResult run_human_robot_conditions(const RunManifest& manifest,
                                            const HumanModelParams& human,
                                            const NoiseSpec& robot_noisy, unsigned jobs) {
    manifest.validate();
    const std::vector<VisualCondition> conditions{VisualCondition::SS, VisualCondition::SN,
                                                  VisualCondition::NS, VisualCondition::NN};

    HumanRobotResult result;

    // Robot and human noise per condition; the first letter is the robot side.
    const auto robot_noise = [&](VisualCondition c) -> NoiseSpec {
        const bool noisy = (c == VisualCondition::NS || c == VisualCondition::NN);
        return noisy ? robot_noisy : NoiseSpec{0.0, 0.0};
    };
    const auto human_noise = [&](VisualCondition c) -> NoiseSpec {
        const bool noisy = (c == VisualCondition::SN || c == VisualCondition::NN);
        return {noisy ? human.delta_noisy_deg : human.delta_sharp_deg, human.sensing_std_deg};
    };

    std::map<std::string, double> lambda_robot;
    std::map<std::string, double> lambda_human;
    for (VisualCondition c : conditions) {
        const double mu_from_human = partner_haptic_bias_deg(human_noise(c), manifest.design);
        const double mu_from_robot = partner_haptic_bias_deg(robot_noise(c), manifest.design);
        lambda_robot[to_string(c)] =
            optimal_lambda(robot_noise(c), {-mu_from_human, manifest.design.haptic_std_deg},
                           manifest.design)
                .lambda;
        lambda_human[to_string(c)] =
            optimal_lambda(human_noise(c), {-mu_from_robot, manifest.design.haptic_std_deg},
                           manifest.design)
                .lambda;
        result.soie_lambda[to_string(c)] = lambda_robot[to_string(c)];
    }
    result.hic_lambda = lambda_robot["SN"];

    const std::vector<std::string> controllers{"soie", "hic"};
    const std::size_t trials = static_cast<std::size_t>(manifest.trials_per_cell);
    const std::size_t total = conditions.size() * controllers.size() * trials;
    result.rows.resize(total);

    parallel_for(total, jobs, [&](std::size_t task) {
        const std::size_t trial = task % trials;
        const std::size_t rest = task / trials;
        const std::size_t ctrl = rest % controllers.size();
        const std::size_t ci = rest / controllers.size();
        const VisualCondition c = conditions[ci];

        AgentConfig robot;
        robot.inertia_kg_m2 = manifest.inertia_kg_m2;
        robot.lambda = controllers[ctrl] == "soie" ? lambda_robot[to_string(c)]
                                                   : result.hic_lambda;
        robot.sensing = robot_noise(c);
        robot.motor_std_nm = manifest.motor_std_nm;

        AgentConfig partner;
        partner.inertia_kg_m2 = manifest.inertia_kg_m2;
        partner.lambda = lambda_human[to_string(c)];
        partner.sensing = human_noise(c);
        partner.motor_std_nm = manifest.motor_std_nm;

        const StreamKey key{manifest.master_seed,
                            static_cast<std::uint64_t>(ci * trials + trial)};
        TargetSpec target = manifest.target;
        target.t0_s = sample_start_offset(target, key.channel(Channel::start_offset));
        const double bias_sign =
            key.channel(Channel::start_offset, 1).uniform() < 0.5 ? -1.0 : 1.0;
        robot.sensing.bias_deg *= bias_sign;
        partner.sensing.bias_deg *= bias_sign;

        const TrialRecord rec = simulate_coupled_pair(robot, partner, manifest.connection,
                                                      target, manifest.dt_s, key);

        const std::size_t stride =
            std::max<std::size_t>(1, static_cast<std::size_t>(kRecordDtS / rec.dt_s + 0.5));
        const double rec_dt = rec.dt_s * static_cast<double>(stride);
        const std::vector<double> target_rec = decimate(rec.target_rad, stride);

        HumanRobotRow row;
        row.condition = c;
        row.controller = controllers[ctrl];
        row.trial = static_cast<int>(trial);
        row.lambda_robot = robot.lambda;
        row.lambda_human = partner.lambda;
        row.robot_error_deg =
            rms_tracking_error_deg(decimate(rec.agents[0].q_rad, stride), target_rec, rec_dt);
        row.human_error_deg =
            rms_tracking_error_deg(decimate(rec.agents[1].q_rad, stride), target_rec, rec_dt);
        row.effort_nm = rms_effort_nm(decimate(rec.torque_nm, stride), rec_dt);
        const std::vector<double> dec = decimate(decode_target(rec, robot.lambda, 0), stride);
        row.robot_decode_rmse_deg = rms_tracking_error_deg(dec, target_rec, rec_dt);
        row.robot_decode_r = pearson_r(dec, target_rec);
        result.rows[task] = row;
    });

    for (const HumanRobotRow& row : result.rows) {
        const std::string key = std::string(to_string(row.condition)) + "/" + row.controller;
        result.mean_robot_error_deg[key] += row.robot_error_deg / static_cast<double>(trials);
    }
    return result;
}

// ---------------------------------------------------------------------------
// File output
// ---------------------------------------------------------------------------

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

} // namespace

void write_surface_csv(const std::filesystem::path& path, const ImpedanceSurface& surface,
                       const RunManifest& manifest) {
    std::ofstream out = open_out(path);
    out << "# manifest " << manifest.hash() << "\n";
    out << "own_bias_deg,partner_bias_deg,partner_haptic_bias_deg,lambda,stiffness_nm_per_rad\n";
    for (std::size_t i = 0; i < surface.own_bias_deg.size(); ++i) {
        for (std::size_t j = 0; j < surface.partner_bias_deg.size(); ++j) {
            out << format_double(surface.own_bias_deg[i]) << ','
                << format_double(surface.partner_bias_deg[j]) << ','
                << format_double(surface.partner_haptic_bias_deg[j]) << ','
                << format_double(surface.lambda[i][j]) << ','
                << format_double(surface.lambda[i][j] * kKappa0NmPerRad) << "\n";
        }
    }
}

ImpedanceSurface read_surface_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw MissingPrerequisiteError("impedance surface not found at " + path.string() +
                                       "; run the optimize command first");
    }
    ImpedanceSurface surface;
    std::string line;
    std::vector<std::array<double, 4>> entries;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("own_bias_deg", 0) == 0) continue;
        std::array<double, 4> row{};
        std::istringstream ss(line);
        std::string cell;
        for (int k = 0; k < 4; ++k) {
            if (!std::getline(ss, cell, ',')) {
                throw MissingPrerequisiteError("malformed surface file " + path.string());
            }
            row[static_cast<std::size_t>(k)] = std::stod(cell);
        }
        entries.push_back(row);
    }
    if (entries.empty()) {
        throw MissingPrerequisiteError("surface file is empty: " + path.string());
    }

    for (const auto& e : entries) {
        if (surface.own_bias_deg.empty() || e[0] > surface.own_bias_deg.back()) {
            surface.own_bias_deg.push_back(e[0]);
        }
    }
    for (const auto& e : entries) {
        if (e[0] != entries.front()[0]) break;
        surface.partner_bias_deg.push_back(e[1]);
        surface.partner_haptic_bias_deg.push_back(e[2]);
    }
    const std::size_t cols = surface.partner_bias_deg.size();
    if (cols == 0 || entries.size() % cols != 0 ||
        entries.size() / cols != surface.own_bias_deg.size()) {
        throw MissingPrerequisiteError("surface file has an inconsistent grid: " + path.string());
    }
    surface.lambda.assign(surface.own_bias_deg.size(), std::vector<double>(cols, 0.0));
    for (std::size_t idx = 0; idx < entries.size(); ++idx) {
        surface.lambda[idx / cols][idx % cols] = entries[idx][3];
    }
    return surface;
}

void write_grid_csv(const std::filesystem::path& dir, const GridResult& result) {
    std::filesystem::create_directories(dir);
    const std::string hash = result.manifest.hash();

    {
        std::ofstream out = open_out(dir / "grid_rows.csv");
        out << "# manifest " << hash << "\n";
        out << "cell,bias_a_deg,bias_b_deg,controller,trial,lambda_a,lambda_b,t0_s,"
               "error_a_deg,error_b_deg,error_sum_deg,effort_nm,decode_r_a,decode_r_b,"
               "decode_rmse_a_deg,decode_rmse_b_deg\n";
        for (const GridRow& r : result.rows) {
            out << r.cell << ',' << format_double(r.bias_a_deg) << ','
                << format_double(r.bias_b_deg) << ',' << r.controller << ',' << r.trial << ','
                << format_double(r.lambda_a) << ',' << format_double(r.lambda_b) << ','
                << format_double(r.t0_s) << ',' << format_double(r.error_a_deg) << ','
                << format_double(r.error_b_deg) << ',' << format_double(r.error_sum_deg) << ','
                << format_double(r.effort_nm) << ',' << format_double(r.decode_r_a) << ','
                << format_double(r.decode_r_b) << ',' << format_double(r.decode_rmse_a_deg)
                << ',' << format_double(r.decode_rmse_b_deg) << "\n";
        }
    }
    {
        std::ofstream out = open_out(dir / "grid_summary.csv");
        out << "# manifest " << hash << "\n";
        out << "controller,mean_error_sum_deg,mean_effort_nm,pooled_decode_r,mean_trial_r,"
               "snr_db,delay_s,error_diff_corr\n";
        for (const auto& [name, agg] : result.by_controller) {
            double corr = 0.0;
            if (name == kControllerLow) corr = result.error_diff_corr_low;
            if (name == kControllerHigh) corr = result.error_diff_corr_high;
            out << name << ',' << format_double(agg.mean_error_sum_deg) << ','
                << format_double(agg.mean_effort_nm) << ',' << format_double(agg.comm.pooled_r)
                << ',' << format_double(agg.comm.mean_trial_r) << ','
                << format_double(agg.comm.snr_db) << ',' << format_double(agg.comm.delay_s)
                << ',' << format_double(corr) << "\n";
        }
    }
    write_manifest_json(dir / "manifest.json", result.manifest);
}

void write_human_human_csv(const std::filesystem::path& path,
                           const std::vector<HumanHumanRow>& rows, const RunManifest& manifest) {
    std::ofstream out = open_out(path);
    out << "# manifest " << manifest.hash() << "\n";
    out << "condition,self_bias_deg,partner_bias_deg,lambda,predicted_error_deg\n";
    for (const HumanHumanRow& r : rows) {
        out << to_string(r.condition) << ',' << format_double(r.self_bias_deg) << ','
            << format_double(r.partner_bias_deg) << ',' << format_double(r.lambda) << ','
            << format_double(r.predicted_error_deg) << "\n";
    }
}

void write_human_robot_csv(const std::filesystem::path& dir, const HumanRobotResult& result,
                           const RunManifest& manifest) {
    std::filesystem::create_directories(dir);
    const std::string hash = manifest.hash();
    {
        std::ofstream out = open_out(dir / "hr_rows.csv");
        out << "# manifest " << hash << "\n";
        out << "condition,controller,trial,lambda_robot,lambda_human,robot_error_deg,"
               "human_error_deg,effort_nm,robot_decode_rmse_deg,robot_decode_r\n";
        for (const HumanRobotRow& r : result.rows) {
            out << to_string(r.condition) << ',' << r.controller << ',' << r.trial << ','
                << format_double(r.lambda_robot) << ',' << format_double(r.lambda_human) << ','
                << format_double(r.robot_error_deg) << ',' << format_double(r.human_error_deg)
                << ',' << format_double(r.effort_nm) << ','
                << format_double(r.robot_decode_rmse_deg) << ','
                << format_double(r.robot_decode_r) << "\n";
        }
    }
    {
        std::ofstream out = open_out(dir / "hr_summary.csv");
        out << "# manifest " << hash << "\n";
        out << "condition,controller,lambda_robot,mean_robot_error_deg\n";
        for (const auto& [key, err] : result.mean_robot_error_deg) {
            const std::string cond = key.substr(0, key.find('/'));
            const std::string ctrl = key.substr(key.find('/') + 1);
            const double lam =
                ctrl == "soie" ? result.soie_lambda.at(cond) : result.hic_lambda;
            out << cond << ',' << ctrl << ',' << format_double(lam) << ','
                << format_double(err) << "\n";
        }
    }
}

void write_manifest_json(const std::filesystem::path& path, const RunManifest& manifest) {
    nlohmann::ordered_json j;
    j["experiment"] = manifest.experiment;
    j["hash"] = manifest.hash();
    j["master_seed"] = manifest.master_seed;
    j["dt_s"] = manifest.dt_s;
    j["target"] = {{"amplitude_deg", manifest.target.amplitude_deg},
                   {"alpha_rad_per_s", manifest.target.alpha_rad_per_s},
                   {"beta_rad_per_s", manifest.target.beta_rad_per_s},
                   {"duration_s", manifest.target.duration_s}};
    j["trials_per_cell"] = manifest.trials_per_cell;
    j["own_bias_deg"] = manifest.own_bias_deg;
    j["partner_bias_deg"] = manifest.partner_bias_deg;
    j["bias_std_deg"] = manifest.bias_std_deg;
    j["connection"] = {{"stiffness_nm_per_rad", manifest.connection.stiffness_nm_per_rad},
                       {"damping_nm_s_per_rad", manifest.connection.damping_nm_s_per_rad}};
    j["inertia_kg_m2"] = manifest.inertia_kg_m2;
    j["motor_std_nm"] = manifest.motor_std_nm;
    j["design"] = {{"stiffness_nm_per_rad", manifest.design.connection.stiffness_nm_per_rad},
                   {"horizon_s", manifest.design.horizon_s},
                   {"dt_s", manifest.design.dt_s},
                   {"q_position", manifest.design.weights.q.a11},
                   {"q_velocity_s2", manifest.design.weights.q.a22},
                   {"effort_weight_per_s2", manifest.design.weights.r},
                   {"haptic_std_deg", manifest.design.haptic_std_deg}};
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
}

} // namespace soie
