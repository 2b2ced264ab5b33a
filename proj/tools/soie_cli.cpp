// Command-line laboratory for stochastic-optimal-information-and-effort
// impedance control: offline impedance optimization, robot-robot and
// human-robot batch studies, the human hyperparameter fit and result reports.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "soie/config.hpp"
#include "soie/errors.hpp"
#include "soie/metrics.hpp"

namespace fs = std::filesystem;
using namespace soie;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;
constexpr int kExitNumerical = 4;

struct GlobalOptions {
    std::string config_path;
    std::string out_dir = "results";
    std::optional<std::uint64_t> seed;
    std::optional<double> dt;
    unsigned jobs = 0;
};

LabConfig effective_config(const GlobalOptions& opt) {
    LabConfig cfg = opt.config_path.empty() ? default_config() : load_config(opt.config_path);
    if (opt.seed) cfg.master_seed = *opt.seed;
    if (opt.dt) {
        cfg.grid_dt_s = *opt.dt;
    }
    return cfg;
}

std::vector<NoiseSpec> to_specs(const std::vector<double>& biases, double std_deg) {
    std::vector<NoiseSpec> specs;
    specs.reserve(biases.size());
    for (double b : biases) specs.push_back({b, std_deg});
    return specs;
}

int cmd_optimize(const GlobalOptions& opt, const std::vector<double>& own_override,
                 const std::vector<double>& partner_override) {
    LabConfig cfg = effective_config(opt);
    if (!own_override.empty()) cfg.own_bias_deg = own_override;
    if (!partner_override.empty()) cfg.partner_bias_deg = partner_override;

    const RunManifest manifest = cfg.grid_manifest();
    const ImpedanceSurface surface =
        impedance_surface(to_specs(cfg.own_bias_deg, cfg.bias_std_deg),
                          to_specs(cfg.partner_bias_deg, cfg.bias_std_deg), cfg.design, opt.jobs);

    fs::create_directories(opt.out_dir);
    const fs::path path = fs::path(opt.out_dir) / "surface.csv";
    write_surface_csv(path, surface, manifest);

    std::printf("# optimal impedance parameter lambda, rows: own bias, columns: partner bias\n");
    std::printf("%8s", "own\\par");
    for (double p : cfg.partner_bias_deg) std::printf(" %7.3g", p);
    std::printf("\n");
    for (std::size_t i = 0; i < surface.lambda.size(); ++i) {
        std::printf("%8.3g", cfg.own_bias_deg[i]);
        for (double l : surface.lambda[i]) std::printf(" %7.4f", l);
        std::printf("\n");
    }
    std::printf("lambda range: [%.4f, %.4f]  stiffness range: [%.2f, %.2f] Nm/rad\n",
                surface.lambda_min(), surface.lambda_max(),
                surface.lambda_min() * kKappa0NmPerRad,
                surface.lambda_max() * kKappa0NmPerRad);
    std::printf("wrote %s\n", path.string().c_str());
    return kExitOk;
}

int cmd_grid_human_robot(const GlobalOptions& opt, LabConfig cfg) {
    const RunManifest manifest = cfg.human_robot_manifest();
    const HumanRobotResult result =
        run_human_robot_conditions(manifest, cfg.human, cfg.robot_noisy, opt.jobs);
    write_human_robot_csv(opt.out_dir, result, manifest);

    std::printf("%-10s %-6s %14s %18s\n", "condition", "ctrl", "lambda_robot",
                "mean_robot_error");
    for (const auto& [key, err] : result.mean_robot_error_deg) {
        const std::string cond = key.substr(0, key.find('/'));
        const std::string ctrl = key.substr(key.find('/') + 1);
        const double lam = ctrl == "soie" ? result.soie_lambda.at(cond) : result.hic_lambda;
        std::printf("%-10s %-6s %14.4f %18.4f\n", cond.c_str(), ctrl.c_str(), lam, err);
    }
    std::printf("wrote %s and %s\n", (fs::path(opt.out_dir) / "hr_rows.csv").string().c_str(),
                (fs::path(opt.out_dir) / "hr_summary.csv").string().c_str());
    return kExitOk;
}

int cmd_grid(const GlobalOptions& opt, int trials_override, const std::string& experiment) {
    LabConfig cfg = effective_config(opt);
    if (trials_override > 0) {
        cfg.trials_per_cell = trials_override;
        cfg.trials_per_condition = trials_override;
    }
    if (experiment == "human_robot") {
        return cmd_grid_human_robot(opt, cfg);
    }
    if (experiment != "robot_robot") {
        throw ConfigError("unknown experiment '" + experiment +
                          "' (expected robot_robot or human_robot)");
    }

    const fs::path surface_path = fs::path(opt.out_dir) / "surface.csv";
    const ImpedanceSurface surface = read_surface_csv(surface_path);

    const RunManifest manifest = cfg.grid_manifest();
    const GridResult result = run_robot_robot_grid(manifest, surface, opt.jobs);
    write_grid_csv(opt.out_dir, result);

    std::printf("%-12s %16s %14s %10s %8s %8s\n", "controller", "mean_error_sum", "mean_effort",
                "pooled_r", "snr_db", "delay_s");
    for (const auto& [name, agg] : result.by_controller) {
        std::printf("%-12s %16.4f %14.4f %10.4f %8.3f %8.3f\n", name.c_str(),
                    agg.mean_error_sum_deg, agg.mean_effort_nm, agg.comm.pooled_r,
                    agg.comm.snr_db, agg.comm.delay_s);
    }
    std::printf("error-diff correlation with noise difference: low %.4f, high %.4f\n",
                result.error_diff_corr_low, result.error_diff_corr_high);
    std::printf("wrote %s and %s\n", (fs::path(opt.out_dir) / "grid_rows.csv").string().c_str(),
                (fs::path(opt.out_dir) / "grid_summary.csv").string().c_str());
    return kExitOk;
}

int cmd_fit(const GlobalOptions& opt, const std::string& targets_path) {
    LabConfig cfg = effective_config(opt);
    const HumanTargets targets = load_human_targets(targets_path);
    if (opt.seed) cfg.pso.seed = *opt.seed;
    cfg.pso.jobs = opt.jobs;
    if (cfg.pso.bounds.empty()) {
        cfg.pso.bounds = {{0.0, 10.0}, {0.0, 10.0}, {0.1, 50.0}};
    }

    const HumanFitResult fit = fit_human_hyperparams(targets, cfg.pso, cfg.design);

    fs::create_directories(opt.out_dir);
    const fs::path path = fs::path(opt.out_dir) / "fitted.json";
    nlohmann::ordered_json j;
    j["manifest"] = cfg.grid_manifest().hash();
    j["delta_sharp_deg"] = fit.params.delta_sharp_deg;
    j["delta_noisy_deg"] = fit.params.delta_noisy_deg;
    j["effort_weight_per_s2"] = fit.params.effort_weight;
    j["objective"] = fit.objective;
    j["pso_seed"] = cfg.pso.seed;
    j["pso_particles"] = cfg.pso.particles;
    j["pso_iterations"] = cfg.pso.iterations;
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << j.dump(2) << "\n";

    std::printf("fitted hyperparameters:\n");
    std::printf("  delta_sharp  = %.4f deg\n", fit.params.delta_sharp_deg);
    std::printf("  delta_noisy  = %.4f deg\n", fit.params.delta_noisy_deg);
    std::printf("  effort weight = %.4f /s^2\n", fit.params.effort_weight);
    std::printf("  objective     = %.6g\n", fit.objective);
    std::printf("wrote %s\n", path.string().c_str());

    DesignConfig design = cfg.design;
    design.weights.r = fit.params.effort_weight;
    const auto rows = run_human_human_prediction(fit.params, design);
    const fs::path hh = fs::path(opt.out_dir) / "hh_prediction.csv";
    write_human_human_csv(hh, rows, cfg.grid_manifest());
    std::printf("condition  lambda   predicted_error_deg\n");
    for (const auto& r : rows) {
        std::printf("%9s  %.4f   %.4f\n", to_string(r.condition), r.lambda,
                    r.predicted_error_deg);
    }
    std::printf("wrote %s\n", hh.string().c_str());
    return kExitOk;
}

int cmd_simulate(const GlobalOptions& opt, double own_bias, double partner_bias,
                 double lambda_a, double lambda_b) {
    LabConfig cfg = effective_config(opt);

    AgentConfig a;
    a.inertia_kg_m2 = cfg.inertia_kg_m2;
    a.lambda = lambda_a;
    a.sensing = {own_bias, cfg.bias_std_deg};
    a.motor_std_nm = cfg.motor_std_nm;
    AgentConfig b = a;
    b.lambda = lambda_b;
    b.sensing = {partner_bias, cfg.bias_std_deg};

    const StreamKey key{cfg.master_seed, 0};
    TargetSpec target = cfg.target;
    target.t0_s = sample_start_offset(target, key.channel(Channel::start_offset));
    const TrialRecord rec =
        simulate_coupled_pair(a, b, cfg.connection, target, cfg.grid_dt_s, key);

    fs::create_directories(opt.out_dir);
    const fs::path path = fs::path(opt.out_dir) / "trial.csv";
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << "# manifest " << cfg.grid_manifest().hash() << "\n";
    out << "t_s,target_rad,q_a_rad,q_b_rad,sensed_a_rad,sensed_b_rad,torque_nm\n";
    for (std::size_t i = 0; i < rec.samples(); ++i) {
        out << format_double(rec.time_s[i]) << ',' << format_double(rec.target_rad[i]) << ','
            << format_double(rec.agents[0].q_rad[i]) << ','
            << format_double(rec.agents[1].q_rad[i]) << ','
            << format_double(rec.agents[0].sensed_target_rad[i]) << ','
            << format_double(rec.agents[1].sensed_target_rad[i]) << ','
            << format_double(rec.torque_nm[i]) << "\n";
    }

    const double err_a = rms_tracking_error_deg(rec.agents[0].q_rad, rec.target_rad, rec.dt_s);
    const double err_b = rms_tracking_error_deg(rec.agents[1].q_rad, rec.target_rad, rec.dt_s);
    std::printf("trial: error_a %.4f deg, error_b %.4f deg, effort %.4f Nm, t0 %.4f s\n", err_a,
                err_b, rms_effort_nm(rec.torque_nm, rec.dt_s), target.t0_s);
    std::printf("wrote %s\n", path.string().c_str());
    return kExitOk;
}

struct SummaryLine {
    std::string controller;
    double mean_error = 0.0, mean_effort = 0.0, pooled_r = 0.0, mean_trial_r = 0.0;
    double snr = 0.0, delay = 0.0, diff_corr = 0.0;
};

int cmd_report(const GlobalOptions& opt) {
    const fs::path dir(opt.out_dir);
    const fs::path summary_path = dir / "grid_summary.csv";
    std::ifstream in(summary_path);
    if (!in) {
        throw MissingPrerequisiteError("no grid results in " + dir.string() +
                                       "; run the grid command first");
    }

    std::map<std::string, SummaryLine> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("controller", 0) == 0) continue;
        std::istringstream ss(line);
        SummaryLine s;
        std::string cell;
        std::getline(ss, s.controller, ',');
        const auto next = [&]() {
            if (!std::getline(ss, cell, ',')) {
                throw MissingPrerequisiteError("malformed summary file " +
                                               summary_path.string());
            }
            return std::stod(cell);
        };
        s.mean_error = next();
        s.mean_effort = next();
        s.pooled_r = next();
        s.mean_trial_r = next();
        s.snr = next();
        s.delay = next();
        s.diff_corr = next();
        lines[s.controller] = s;
    }
    if (lines.size() != 3) {
        throw MissingPrerequisiteError("summary file incomplete: " + summary_path.string());
    }

    std::printf("%-12s %16s %14s %10s %8s %8s\n", "controller", "mean_error_sum", "mean_effort",
                "pooled_r", "snr_db", "delay_s");
    for (const auto& [name, s] : lines) {
        std::printf("%-12s %16.4f %14.4f %10.4f %8.3f %8.3f\n", name.c_str(), s.mean_error,
                    s.mean_effort, s.pooled_r, s.snr, s.delay);
    }

    const SummaryLine& soie = lines.at(kControllerSoie);
    const SummaryLine& high = lines.at(kControllerHigh);
    const SummaryLine& low = lines.at(kControllerLow);
    const auto trend = [](const char* name, bool ok) {
        std::printf("%-58s %s\n", name, ok ? "PASS" : "FAIL");
        return ok;
    };
    bool all = true;
    all &= trend("effort ordering: fixed_low < soie < fixed_high",
                 low.mean_effort < soie.mean_effort && soie.mean_effort < high.mean_effort);
    all &= trend("error ordering: soie < min(fixed_low, fixed_high)",
                 soie.mean_error < std::min(low.mean_error, high.mean_error));
    all &= trend("decode correlation ordering: soie > fixed_low > fixed_high",
                 soie.pooled_r > low.pooled_r && low.pooled_r > high.pooled_r);
    all &= trend("snr ordering: soie > both fixed controllers",
                 soie.snr > high.snr && soie.snr > low.snr);
    all &= trend("delay ordering: soie < both fixed controllers",
                 soie.delay < high.delay && soie.delay < low.delay);
    all &= trend("error-difference trend r >= 0.9 (low and high)",
                 low.diff_corr >= 0.9 && high.diff_corr >= 0.9);
    std::printf("%s\n", all ? "all trends hold" : "some trends failed");
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic-optimal-information-and-effort impedance laboratory"};
    app.require_subcommand(1);

    GlobalOptions opt;
    app.add_option("--config", opt.config_path, "JSON configuration file");
    app.add_option("--out-dir", opt.out_dir, "directory for result files");
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "master seed override");
    double dt_value = 0.0;
    auto* dt_opt = app.add_option("--dt", dt_value, "simulation time step override (s)");
    app.add_option("--jobs", opt.jobs, "worker threads (0 = hardware)");

    auto* optimize = app.add_subcommand("optimize", "compute the optimal impedance surface");
    std::vector<double> own_override, partner_override;
    optimize->add_option("--own-bias", own_override, "own-noise bias grid override (deg)");
    optimize->add_option("--partner-bias", partner_override,
                         "partner-noise bias grid override (deg)");

    auto* grid = app.add_subcommand("grid", "run a batch experiment over noise conditions");
    int trials_override = 0;
    std::string experiment = "robot_robot";
    grid->add_option("--trials-per-cell", trials_override, "trials per noise cell");
    grid->add_option("--experiment", experiment, "robot_robot (default) or human_robot");

    auto* fit = app.add_subcommand("fit", "fit the human model hyperparameters");
    std::string targets_path;
    fit->add_option("--targets", targets_path, "experiment targets CSV")->required();

    auto* simulate = app.add_subcommand("simulate", "run one coupled-pair trial");
    double sim_own = 7.0, sim_partner = 0.0, sim_lambda_a = 0.3, sim_lambda_b = 0.3;
    simulate->add_option("--own-bias", sim_own, "agent A sensing bias (deg)");
    simulate->add_option("--partner-bias", sim_partner, "agent B sensing bias (deg)");
    simulate->add_option("--lambda-a", sim_lambda_a, "agent A impedance parameter");
    simulate->add_option("--lambda-b", sim_lambda_b, "agent B impedance parameter");

    auto* report = app.add_subcommand("report", "summarize grid results and trend checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (seed_opt->count() > 0) opt.seed = seed_value;
        if (dt_opt->count() > 0) opt.dt = dt_value;
        if (optimize->parsed()) return cmd_optimize(opt, own_override, partner_override);
        if (grid->parsed()) return cmd_grid(opt, trials_override, experiment);
        if (fit->parsed()) return cmd_fit(opt, targets_path);
        if (simulate->parsed()) {
            return cmd_simulate(opt, sim_own, sim_partner, sim_lambda_a, sim_lambda_b);
        }
        if (report->parsed()) return cmd_report(opt);
    } catch (const MissingPrerequisiteError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMissing;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}
