// Acceptance suite: runs every study-level requirement end to end and prints
// one PASS/FAIL line per criterion. Returns the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "soie/config.hpp"
#include "soie/errors.hpp"
#include "soie/experiments.hpp"
#include "soie/metrics.hpp"

using namespace soie;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. Stationary covariance of the propagated moments against the direct
//    Lyapunov solve, 50 random Hurwitz configurations, < 1e-6 relative
//    Frobenius error, under 5 seconds.
// ---------------------------------------------------------------------------
Outcome criterion_1() {
    const auto start = std::chrono::steady_clock::now();
    SeededStream rng(20260808, 0, Channel::optimizer);

    int tested = 0;
    double worst = 0.0;
    while (tested < 50) {
        Mat2 a{-3.0 + 6.0 * rng.uniform(), -3.0 + 6.0 * rng.uniform(),
               -3.0 + 6.0 * rng.uniform(), -3.0 + 6.0 * rng.uniform()};
        if (!a.is_hurwitz()) continue;

        // Decay rate of the slowest mode; skip near-marginal draws.
        const double half_tr = 0.5 * a.trace();
        const double disc = half_tr * half_tr - a.det();
        const double re_min =
            disc >= 0.0 ? std::min(-(half_tr - std::sqrt(disc)), -(half_tr + std::sqrt(disc)))
                        : -half_tr;
        if (re_min < 0.15) continue;

        const Mat2 g{-1.0 + 2.0 * rng.uniform(), -1.0 + 2.0 * rng.uniform(),
                     -1.0 + 2.0 * rng.uniform(), -1.0 + 2.0 * rng.uniform()};
        const Mat2 w = g * g.transpose() + Mat2::diagonal(1e-3, 1e-3);

        const double dt = 0.25 * euler_stable_dt(a);
        const double horizon = 12.0 / re_min;
        const MomentTrajectory traj =
            propagate_moments(a, Vec2{}, w, StateMoments{}, dt, horizon);
        const Mat2 direct = lyapunov_steady_state(a, w);
        const double rel = (traj.back().cov - direct).frobenius() / direct.frobenius();
        worst = std::max(worst, rel);
        ++tested;
    }

    const double elapsed = seconds_since(start);
    Outcome out;
    out.pass = worst < 1e-6 && elapsed < 5.0;
    out.detail = fmt("worst relative error %.2e (< 1e-6), %.2f s (< 5 s)", worst, elapsed);
    return out;
}

// ---------------------------------------------------------------------------
// 2. Monte-Carlo moments (n = 20000, default physical parameters) against the
//    propagated moments, per entry within 3 empirical standard errors at
//    t = 5, 10, 20 s, under 2 minutes.
// ---------------------------------------------------------------------------
Outcome criterion_2() {
    const auto start = std::chrono::steady_clock::now();

    AgentConfig agent;
    agent.inertia_kg_m2 = 0.0080;
    agent.lambda = 1.0;
    agent.sensing = {2.56, 0.05};
    const ConnectionSpec conn{17.32, 0.0};
    const NoiseSpec haptic{-1.0, 0.05};
    const double dt = 1e-4;
    const double horizon = 20.0;
    const std::vector<double> times{5.0, 10.0, 20.0};

    const MomentTrajectory det =
        propagate_moments(agent, conn, haptic, StateMoments{}, dt, horizon);
    const auto checks = mc_checkpoint_moments(agent, conn, haptic, StateMoments{}, dt, horizon,
                                              20000, 20260808, times, 0);

    double worst_z = 0.0;
    for (const McCheckpoint& cp : checks) {
        const std::size_t i = static_cast<std::size_t>(cp.t_s / dt + 0.5);
        const StateMoments& d = det.points[i];
        const double entries[5][2] = {
            {cp.moments.mean.x - d.mean.x, cp.mean_se.x},
            {cp.moments.mean.y - d.mean.y, cp.mean_se.y},
            {cp.moments.cov.a11 - d.cov.a11, cp.cov_se.a11},
            {cp.moments.cov.a12 - d.cov.a12, cp.cov_se.a12},
            {cp.moments.cov.a22 - d.cov.a22, cp.cov_se.a22},
        };
        for (const auto& e : entries) {
            if (e[1] > 0.0) worst_z = std::max(worst_z, std::abs(e[0]) / e[1]);
        }
    }

    const double elapsed = seconds_since(start);
    Outcome out;
    out.pass = worst_z < 3.0 && elapsed < 120.0;
    out.detail = fmt("worst |z| %.2f (< 3 MC standard errors), %.1f s (< 120 s)", worst_z,
                     elapsed);
    return out;
}

// ---------------------------------------------------------------------------
// 3. Surface trends: lambda* non-increasing in own noise, non-decreasing in
//    partner noise (at most one violation per line), and the own-noise range
//    strictly exceeds the partner-noise range.
// ---------------------------------------------------------------------------
Outcome criterion_3(const ImpedanceSurface& surface) {
    const std::size_t rows = surface.lambda.size();
    const std::size_t cols = surface.lambda.front().size();

    int bad_lines = 0;
    for (std::size_t j = 0; j < cols; ++j) {  // own axis: non-increasing down a column
        int violations = 0;
        for (std::size_t i = 0; i + 1 < rows; ++i) {
            if (surface.lambda[i + 1][j] > surface.lambda[i][j] + 1e-12) ++violations;
        }
        if (violations > 1) ++bad_lines;
    }
    for (std::size_t i = 0; i < rows; ++i) {  // partner axis: non-decreasing along a row
        int violations = 0;
        for (std::size_t j = 0; j + 1 < cols; ++j) {
            if (surface.lambda[i][j + 1] < surface.lambda[i][j] - 1e-12) ++violations;
        }
        if (violations > 1) ++bad_lines;
    }

    double own_range = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
        own_range += surface.lambda[0][j] - surface.lambda[rows - 1][j];
    }
    own_range /= static_cast<double>(cols);
    double partner_range = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        partner_range += surface.lambda[i][cols - 1] - surface.lambda[i][0];
    }
    partner_range /= static_cast<double>(rows);

    Outcome out;
    out.pass = bad_lines == 0 && own_range > partner_range;
    out.detail = fmt("lines with >1 violation: %d, own range %.4f, partner range %.4f (own > "
                     "partner: %s)",
                     bad_lines, own_range, partner_range,
                     own_range > partner_range ? "yes" : "no");
    return out;
}

// ---------------------------------------------------------------------------
// 4. Robot-robot orderings at 20 trials per cell: mean effort fixed_low <
//    soie < fixed_high and mean error soie < min(fixed), paired t-tests
//    p < 0.05, under 10 minutes.
// ---------------------------------------------------------------------------
Outcome criterion_4(const GridResult& grid, double elapsed) {
    const ControllerAggregate& soie = grid.by_controller.at(kControllerSoie);
    const ControllerAggregate& high = grid.by_controller.at(kControllerHigh);
    const ControllerAggregate& low = grid.by_controller.at(kControllerLow);

    const bool effort_order = low.mean_effort_nm < soie.mean_effort_nm &&
                              soie.mean_effort_nm < high.mean_effort_nm;
    const bool error_order =
        soie.mean_error_sum_deg < std::min(low.mean_error_sum_deg, high.mean_error_sum_deg);

    const double p_effort_low =
        paired_test(low.trial_effort_nm, soie.trial_effort_nm, PairedTestKind::TTest).p_value;
    const double p_effort_high =
        paired_test(high.trial_effort_nm, soie.trial_effort_nm, PairedTestKind::TTest).p_value;
    const double p_error_low =
        paired_test(soie.trial_error_sum_deg, low.trial_error_sum_deg, PairedTestKind::TTest)
            .p_value;
    const double p_error_high =
        paired_test(soie.trial_error_sum_deg, high.trial_error_sum_deg, PairedTestKind::TTest)
            .p_value;
    const double worst_p =
        std::max(std::max(p_effort_low, p_effort_high), std::max(p_error_low, p_error_high));

    Outcome out;
    out.pass = effort_order && error_order && worst_p < 0.05 && elapsed < 600.0;
    out.detail = fmt("effort %.3f<%.3f<%.3f %s, error %.3f<min(%.3f,%.3f) %s, worst p %.1e, "
                     "%.0f s (< 600 s)",
                     low.mean_effort_nm, soie.mean_effort_nm, high.mean_effort_nm,
                     effort_order ? "ok" : "BAD", soie.mean_error_sum_deg,
                     low.mean_error_sum_deg, high.mean_error_sum_deg,
                     error_order ? "ok" : "BAD", worst_p, elapsed);
    return out;
}

// ---------------------------------------------------------------------------
// 5. Communication metrics: pooled decoded-target r soie > fixed_low >
//    fixed_high with r_soie >= 0.7, SNR soie above both, delay soie below
//    both.
// ---------------------------------------------------------------------------
Outcome criterion_5(const GridResult& grid) {
    const CommStats& soie = grid.by_controller.at(kControllerSoie).comm;
    const CommStats& high = grid.by_controller.at(kControllerHigh).comm;
    const CommStats& low = grid.by_controller.at(kControllerLow).comm;

    const bool r_order = soie.pooled_r > low.pooled_r && low.pooled_r > high.pooled_r;
    const bool r_floor = soie.pooled_r >= 0.7;
    const bool snr_order = soie.snr_db > high.snr_db && soie.snr_db > low.snr_db;
    const bool delay_order = soie.delay_s < high.delay_s && soie.delay_s < low.delay_s;

    Outcome out;
    out.pass = r_order && r_floor && snr_order && delay_order;
    out.detail =
        fmt("r %.4f/%.4f/%.4f order %s floor %s, snr %.2f/%.2f/%.2f dB order %s, delay "
            "%.3f/%.3f/%.3f s order %s",
            soie.pooled_r, low.pooled_r, high.pooled_r, r_order ? "ok" : "BAD",
            r_floor ? "ok" : "BAD", soie.snr_db, low.snr_db, high.snr_db,
            snr_order ? "ok" : "BAD", soie.delay_s, low.delay_s, high.delay_s,
            delay_order ? "ok" : "BAD");
    return out;
}

// ---------------------------------------------------------------------------
// 6. Per-cell error difference against soie grows linearly with the
//    inter-agent noise difference: correlation >= 0.9 for both fixed
//    controllers.
// ---------------------------------------------------------------------------
Outcome criterion_6(const GridResult& grid) {
    Outcome out;
    out.pass = grid.error_diff_corr_low >= 0.9 && grid.error_diff_corr_high >= 0.9;
    out.detail = fmt("correlation low %.4f, high %.4f (>= 0.9)", grid.error_diff_corr_low,
                     grid.error_diff_corr_high);
    return out;
}

// ---------------------------------------------------------------------------
// 7. Human-model fit: parameters generating the targets are recovered within
//    5 percent, and the fitted model reproduces the cocontraction and error
//    trends.
// ---------------------------------------------------------------------------
Outcome criterion_7(const DesignConfig& design) {
    const HumanModelParams truth;  // 2.56 deg, 3.67 deg, R = 4.02
    DesignConfig cfg = design;
    cfg.weights.r = truth.effort_weight;

    HumanTargets targets;
    for (VisualCondition c : {VisualCondition::SS, VisualCondition::SN, VisualCondition::NS,
                              VisualCondition::NN}) {
        const HumanPrediction pred = predict_human_condition(c, truth, cfg);
        targets[c] = {pred.error_deg, pred.lambda};
    }

    PsoConfig pso;
    pso.particles = 24;
    pso.iterations = 110;
    pso.seed = 7;
    pso.jobs = 0;
    pso.bounds = {{0.0, 10.0}, {0.0, 10.0}, {0.1, 50.0}};
    const HumanFitResult fit = fit_human_hyperparams(targets, pso, design);

    const double rel_sharp =
        std::abs(fit.params.delta_sharp_deg - truth.delta_sharp_deg) / truth.delta_sharp_deg;
    const double rel_noisy =
        std::abs(fit.params.delta_noisy_deg - truth.delta_noisy_deg) / truth.delta_noisy_deg;
    const double rel_r =
        std::abs(fit.params.effort_weight - truth.effort_weight) / truth.effort_weight;
    const bool recovered = rel_sharp <= 0.05 && rel_noisy <= 0.05 && rel_r <= 0.05;

    DesignConfig fitted_cfg = design;
    fitted_cfg.weights.r = fit.params.effort_weight;
    const auto rows = run_human_human_prediction(fit.params, fitted_cfg);
    std::map<VisualCondition, HumanHumanRow> by;
    for (const auto& r : rows) by[r.condition] = r;
    const bool coc_own = by[VisualCondition::NS].lambda < by[VisualCondition::SS].lambda &&
                         by[VisualCondition::NN].lambda < by[VisualCondition::SN].lambda;
    const bool coc_partner =
        by[VisualCondition::SN].lambda >= by[VisualCondition::SS].lambda - 1e-6 &&
        by[VisualCondition::NN].lambda >= by[VisualCondition::NS].lambda - 1e-6;
    const bool err_both =
        by[VisualCondition::SN].predicted_error_deg >
            by[VisualCondition::SS].predicted_error_deg &&
        by[VisualCondition::NS].predicted_error_deg >
            by[VisualCondition::SS].predicted_error_deg &&
        by[VisualCondition::NN].predicted_error_deg >
            by[VisualCondition::SN].predicted_error_deg &&
        by[VisualCondition::NN].predicted_error_deg >
            by[VisualCondition::NS].predicted_error_deg;

    Outcome out;
    out.pass = recovered && coc_own && coc_partner && err_both;
    out.detail = fmt("recovery %.2f%%/%.2f%%/%.2f%% (<= 5%%) %s, cocontraction trends %s/%s, "
                     "error trend %s",
                     100.0 * rel_sharp, 100.0 * rel_noisy, 100.0 * rel_r,
                     recovered ? "ok" : "BAD", coc_own ? "ok" : "BAD",
                     coc_partner ? "ok" : "BAD", err_both ? "ok" : "BAD");
    return out;
}

// ---------------------------------------------------------------------------
// 8. Human-robot conditions: sharp-robot conditions get a stiffer optimum
//    than noisy-robot conditions, and the adaptive robot tracks at least half
//    a degree better than the constant high-impedance baseline in NS and NN.
// ---------------------------------------------------------------------------
Outcome criterion_8(const LabConfig& cfg) {
    RunManifest manifest = cfg.human_robot_manifest();
    manifest.master_seed = 20260808;
    manifest.dt_s = 1e-3;

    const HumanRobotResult result =
        run_human_robot_conditions(manifest, cfg.human, cfg.robot_noisy, 0);

    const bool stiff_order = result.soie_lambda.at("SN") > result.soie_lambda.at("NS") &&
                             result.soie_lambda.at("SN") > result.soie_lambda.at("NN") &&
                             result.soie_lambda.at("SS") > result.soie_lambda.at("NS") &&
                             result.soie_lambda.at("SS") > result.soie_lambda.at("NN");

    const double red_ns = result.mean_robot_error_deg.at("NS/hic") -
                          result.mean_robot_error_deg.at("NS/soie");
    const double red_nn = result.mean_robot_error_deg.at("NN/hic") -
                          result.mean_robot_error_deg.at("NN/soie");
    const bool error_gain = red_ns >= 0.5 && red_nn >= 0.5;

    Outcome out;
    out.pass = stiff_order && error_gain;
    out.detail = fmt("lambda SN/SS/NS/NN = %.3f/%.3f/%.3f/%.3f order %s, error reduction NS "
                     "%.2f deg, NN %.2f deg (>= 0.5)",
                     result.soie_lambda.at("SN"), result.soie_lambda.at("SS"),
                     result.soie_lambda.at("NS"), result.soie_lambda.at("NN"),
                     stiff_order ? "ok" : "BAD", red_ns, red_nn);
    return out;
}

// ---------------------------------------------------------------------------
// 9. Determinism: the grid command produces byte-identical CSV files for
//    identical manifests under different worker counts.
// ---------------------------------------------------------------------------
Outcome criterion_9() {
    const fs::path base = fs::temp_directory_path() / "soie_acceptance_c9";
    const fs::path dir1 = base / "jobs1";
    const fs::path dir2 = base / "jobs2";
    fs::remove_all(base);
    fs::create_directories(dir1);
    fs::create_directories(dir2);

    const fs::path config = base / "config.json";
    std::ofstream(config) << R"({
        "master_seed": 77,
        "target": {"duration_s": 6.0},
        "grid": {"own_bias_deg": [0, 3, 7], "partner_bias_deg": [0, 3, 7],
                 "trials_per_cell": 2, "dt_s": 0.001}
    })";

    const auto run = [&](const std::string& args) {
        const std::string cmd = std::string(SOIE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };
    const auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    bool ok = run("--config " + config.string() + " --out-dir " + dir1.string() +
                  " --jobs 1 optimize") == 0;
    ok = ok && fs::copy_file(dir1 / "surface.csv", dir2 / "surface.csv");
    ok = ok && run("--config " + config.string() + " --out-dir " + dir1.string() +
                   " --jobs 1 grid") == 0;
    ok = ok && run("--config " + config.string() + " --out-dir " + dir2.string() +
                   " --jobs 2 grid") == 0;

    const bool rows_equal = slurp(dir1 / "grid_rows.csv") == slurp(dir2 / "grid_rows.csv");
    const bool summary_equal =
        slurp(dir1 / "grid_summary.csv") == slurp(dir2 / "grid_summary.csv");
    const bool nonempty = !slurp(dir1 / "grid_rows.csv").empty();

    Outcome out;
    out.pass = ok && rows_equal && summary_equal && nonempty;
    out.detail = fmt("runs ok: %s, rows byte-identical: %s, summary byte-identical: %s",
                     ok ? "yes" : "no", rows_equal ? "yes" : "no",
                     summary_equal ? "yes" : "no");
    return out;
}

// ---------------------------------------------------------------------------
// 10. Swarm sanity: the 3-d sphere reaches |x| < 1e-3 within 200 iterations
//     and 30 particles for every seed in a 10-seed battery.
// ---------------------------------------------------------------------------
Outcome criterion_10() {
    int solved = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        PsoConfig cfg;
        cfg.particles = 30;
        cfg.iterations = 200;
        cfg.seed = seed;
        cfg.jobs = 1;
        cfg.bounds = {{-5.0, 5.0}, {-5.0, 5.0}, {-5.0, 5.0}};
        const PsoResult res = pso_minimize(
            [](const std::vector<double>& x) {
                double s = 0.0;
                for (double v : x) s += v * v;
                return s;
            },
            cfg);
        const double norm = std::sqrt(res.best_f);
        worst = std::max(worst, norm);
        if (norm < 1e-3) ++solved;
    }
    Outcome out;
    out.pass = solved == 10;
    out.detail = fmt("%d/10 seeds reached |x| < 1e-3, worst %.2e", solved, worst);
    return out;
}

} // namespace

int main() {
    std::printf("== acceptance suite ==\n");
    int failures = 0;
    const auto report = [&](int id, const char* label, const Outcome& out) {
        std::printf("[%s] criterion %2d - %s: %s\n", out.pass ? "PASS" : "FAIL", id, label,
                    out.detail.c_str());
        std::fflush(stdout);
        if (!out.pass) ++failures;
    };

    const LabConfig cfg = default_config();

    report(1, "moment-oracle equivalence", criterion_1());
    report(2, "Monte-Carlo consistency", criterion_2());

    // Criteria 3-6 share one surface and one 20-trials-per-cell grid run.
    std::vector<NoiseSpec> own, partner;
    for (double b : cfg.own_bias_deg) own.push_back({b, cfg.bias_std_deg});
    for (double b : cfg.partner_bias_deg) partner.push_back({b, cfg.bias_std_deg});
    const ImpedanceSurface surface = impedance_surface(own, partner, cfg.design, 0);
    report(3, "surface trends", criterion_3(surface));

    RunManifest manifest = cfg.grid_manifest();
    manifest.master_seed = 20260808;
    manifest.trials_per_cell = 20;
    const auto grid_start = std::chrono::steady_clock::now();
    const GridResult grid = run_robot_robot_grid(manifest, surface, 0);
    const double grid_elapsed = seconds_since(grid_start);
    report(4, "robot-robot orderings", criterion_4(grid, grid_elapsed));
    report(5, "communication metrics", criterion_5(grid));
    report(6, "linear error-difference trend", criterion_6(grid));

    report(7, "human-model fit", criterion_7(cfg.design));
    report(8, "human-robot conditions", criterion_8(cfg));
    report(9, "export determinism", criterion_9());
    report(10, "swarm sanity", criterion_10());

    std::printf("== %d criterion(s) failed ==\n", failures);
    return failures;
}
