#include "soie/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "soie/errors.hpp"

namespace soie {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& scope) {
    for (const auto& [key, value] : j.items()) {
        if (allowed.find(key) == allowed.end()) {
            throw ConfigError("unknown config key '" + scope + key + "'");
        }
    }
}

double get_num(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) {
        throw ConfigError(std::string("config key '") + key + "' must be a number");
    }
    return j.at(key).get<double>();
}

std::vector<double> get_list(const json& j, const char* key, std::vector<double> fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_array()) {
        throw ConfigError(std::string("config key '") + key + "' must be an array of numbers");
    }
    std::vector<double> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_number()) {
            throw ConfigError(std::string("config key '") + key + "' must contain only numbers");
        }
        out.push_back(v.get<double>());
    }
    return out;
}

void parse_target(const json& j, TargetSpec& t, const std::string& scope) {
    reject_unknown_keys(j, {"amplitude_deg", "alpha_rad_per_s", "beta_rad_per_s", "duration_s",
                            "t0_s"},
                        scope);
    t.amplitude_deg = get_num(j, "amplitude_deg", t.amplitude_deg);
    t.alpha_rad_per_s = get_num(j, "alpha_rad_per_s", t.alpha_rad_per_s);
    t.beta_rad_per_s = get_num(j, "beta_rad_per_s", t.beta_rad_per_s);
    t.duration_s = get_num(j, "duration_s", t.duration_s);
    t.t0_s = get_num(j, "t0_s", t.t0_s);
}

} // namespace

RunManifest LabConfig::grid_manifest() const {
    RunManifest m;
    m.experiment = "robot_robot_grid";
    m.master_seed = master_seed;
    m.dt_s = grid_dt_s;
    m.target = target;
    m.trials_per_cell = trials_per_cell;
    m.own_bias_deg = own_bias_deg;
    m.partner_bias_deg = partner_bias_deg;
    m.bias_std_deg = bias_std_deg;
    m.connection = connection;
    m.inertia_kg_m2 = inertia_kg_m2;
    m.motor_std_nm = motor_std_nm;
    m.design = design;
    return m;
}

RunManifest LabConfig::human_robot_manifest() const {
    RunManifest m;
    m.experiment = "human_robot_conditions";
    m.master_seed = master_seed;
    m.dt_s = grid_dt_s;
    m.target = human_robot_target;
    m.trials_per_cell = trials_per_condition;
    m.own_bias_deg = {0.0, robot_noisy.bias_deg};
    m.partner_bias_deg = {human.delta_sharp_deg, human.delta_noisy_deg};
    m.bias_std_deg = bias_std_deg;
    m.connection = connection;
    m.inertia_kg_m2 = inertia_kg_m2;
    m.motor_std_nm = motor_std_nm;
    m.design = design;
    return m;
}

LabConfig default_config() { return LabConfig{}; }

LabConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // Translate the byte offset into a line number for the diagnostic.
        std::size_t line = 1;
        for (std::size_t i = 0; i < std::min(e.byte, text.size()); ++i) {
            if (text[i] == '\n') ++line;
        }
        throw ConfigError("malformed config " + path.string() + " (line " +
                          std::to_string(line) + "): " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");

    reject_unknown_keys(j, {"master_seed", "target", "connection", "agent", "design", "grid",
                            "human", "pso"},
                        "");

    LabConfig cfg = default_config();

    if (j.contains("master_seed")) {
        if (!j.at("master_seed").is_number_unsigned()) {
            throw ConfigError("config key 'master_seed' must be a nonnegative integer");
        }
        cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    }
    if (j.contains("target")) parse_target(j.at("target"), cfg.target, "target.");
    if (j.contains("connection")) {
        const json& c = j.at("connection");
        reject_unknown_keys(c, {"stiffness_nm_per_rad", "damping_nm_s_per_rad"}, "connection.");
        cfg.connection.stiffness_nm_per_rad =
            get_num(c, "stiffness_nm_per_rad", cfg.connection.stiffness_nm_per_rad);
        cfg.connection.damping_nm_s_per_rad =
            get_num(c, "damping_nm_s_per_rad", cfg.connection.damping_nm_s_per_rad);
    }
    if (j.contains("agent")) {
        const json& a = j.at("agent");
        reject_unknown_keys(a, {"inertia_kg_m2", "motor_std_nm"}, "agent.");
        cfg.inertia_kg_m2 = get_num(a, "inertia_kg_m2", cfg.inertia_kg_m2);
        cfg.motor_std_nm = get_num(a, "motor_std_nm", cfg.motor_std_nm);
    }
    if (j.contains("design")) {
        const json& d = j.at("design");
        reject_unknown_keys(d, {"stiffness_nm_per_rad", "damping_nm_s_per_rad", "horizon_s",
                                "dt_s", "q_position", "q_velocity_s2", "q_terminal_position",
                                "q_terminal_velocity_s2", "effort_weight_per_s2",
                                "haptic_std_deg", "grid_points", "refine_tol"},
                            "design.");
        DesignConfig& dc = cfg.design;
        dc.connection.stiffness_nm_per_rad =
            get_num(d, "stiffness_nm_per_rad", dc.connection.stiffness_nm_per_rad);
        dc.connection.damping_nm_s_per_rad =
            get_num(d, "damping_nm_s_per_rad", dc.connection.damping_nm_s_per_rad);
        dc.horizon_s = get_num(d, "horizon_s", dc.horizon_s);
        dc.dt_s = get_num(d, "dt_s", dc.dt_s);
        dc.weights.q.a11 = get_num(d, "q_position", dc.weights.q.a11);
        dc.weights.q.a22 = get_num(d, "q_velocity_s2", dc.weights.q.a22);
        dc.weights.q_terminal.a11 = get_num(d, "q_terminal_position", dc.weights.q_terminal.a11);
        dc.weights.q_terminal.a22 =
            get_num(d, "q_terminal_velocity_s2", dc.weights.q_terminal.a22);
        dc.weights.r = get_num(d, "effort_weight_per_s2", dc.weights.r);
        dc.haptic_std_deg = get_num(d, "haptic_std_deg", dc.haptic_std_deg);
        dc.grid_points = static_cast<int>(get_num(d, "grid_points", dc.grid_points));
        dc.refine_tol = get_num(d, "refine_tol", dc.refine_tol);
    }
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        reject_unknown_keys(g, {"own_bias_deg", "partner_bias_deg", "bias_std_deg",
                                "trials_per_cell", "dt_s"},
                            "grid.");
        cfg.own_bias_deg = get_list(g, "own_bias_deg", cfg.own_bias_deg);
        cfg.partner_bias_deg = get_list(g, "partner_bias_deg", cfg.partner_bias_deg);
        cfg.bias_std_deg = get_num(g, "bias_std_deg", cfg.bias_std_deg);
        cfg.trials_per_cell = static_cast<int>(get_num(g, "trials_per_cell",
                                                       cfg.trials_per_cell));
        cfg.grid_dt_s = get_num(g, "dt_s", cfg.grid_dt_s);
    }
    if (j.contains("human")) {
        const json& h = j.at("human");
        reject_unknown_keys(h, {"delta_sharp_deg", "delta_noisy_deg", "sensing_std_deg",
                                "robot_noisy_bias_deg", "robot_noisy_std_deg",
                                "target_alpha_rad_per_s", "target_beta_rad_per_s",
                                "target_duration_s", "trials_per_condition"},
                            "human.");
        cfg.human.delta_sharp_deg = get_num(h, "delta_sharp_deg", cfg.human.delta_sharp_deg);
        cfg.human.delta_noisy_deg = get_num(h, "delta_noisy_deg", cfg.human.delta_noisy_deg);
        cfg.human.sensing_std_deg = get_num(h, "sensing_std_deg", cfg.human.sensing_std_deg);
        cfg.robot_noisy.bias_deg = get_num(h, "robot_noisy_bias_deg", cfg.robot_noisy.bias_deg);
        cfg.robot_noisy.std_deg = get_num(h, "robot_noisy_std_deg", cfg.robot_noisy.std_deg);
        cfg.human_robot_target.alpha_rad_per_s =
            get_num(h, "target_alpha_rad_per_s", cfg.human_robot_target.alpha_rad_per_s);
        cfg.human_robot_target.beta_rad_per_s =
            get_num(h, "target_beta_rad_per_s", cfg.human_robot_target.beta_rad_per_s);
        cfg.human_robot_target.duration_s =
            get_num(h, "target_duration_s", cfg.human_robot_target.duration_s);
        cfg.trials_per_condition = static_cast<int>(
            get_num(h, "trials_per_condition", cfg.trials_per_condition));
    }
    if (j.contains("pso")) {
        const json& p = j.at("pso");
        reject_unknown_keys(p, {"particles", "iterations", "inertia", "cognitive", "social",
                                "seed", "delta_bounds_deg", "effort_bounds_per_s2"},
                            "pso.");
        cfg.pso.particles = static_cast<int>(get_num(p, "particles", cfg.pso.particles));
        cfg.pso.iterations = static_cast<int>(get_num(p, "iterations", cfg.pso.iterations));
        cfg.pso.inertia = get_num(p, "inertia", cfg.pso.inertia);
        cfg.pso.cognitive = get_num(p, "cognitive", cfg.pso.cognitive);
        cfg.pso.social = get_num(p, "social", cfg.pso.social);
        if (p.contains("seed")) {
            cfg.pso.seed = static_cast<std::uint64_t>(get_num(p, "seed", 1.0));
        }
        const std::vector<double> db = get_list(p, "delta_bounds_deg", {0.0, 10.0});
        const std::vector<double> eb = get_list(p, "effort_bounds_per_s2", {0.1, 50.0});
        if (db.size() != 2 || eb.size() != 2) {
            throw ConfigError("pso bounds must be [lo, hi] pairs");
        }
        cfg.pso.bounds = {{db[0], db[1]}, {db[0], db[1]}, {eb[0], eb[1]}};
    }

    // Validate the assembled configuration as a whole.
    cfg.target.validate();
    cfg.connection.validate();
    cfg.design.validate();
    cfg.grid_manifest().validate();
    return cfg;
}

HumanTargets load_human_targets(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open targets file " + path.string());

    HumanTargets targets;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#' || line.rfind("condition", 0) == 0) continue;
        std::istringstream ss(line);
        std::string cond, err, coc;
        if (!std::getline(ss, cond, ',') || !std::getline(ss, err, ',') ||
            !std::getline(ss, coc, ',')) {
            throw ConfigError("targets file " + path.string() + " line " +
                              std::to_string(lineno) + ": expected condition,error_deg,value");
        }
        VisualCondition c;
        if (cond == "SS") c = VisualCondition::SS;
        else if (cond == "SN") c = VisualCondition::SN;
        else if (cond == "NS") c = VisualCondition::NS;
        else if (cond == "NN") c = VisualCondition::NN;
        else {
            throw ConfigError("targets file line " + std::to_string(lineno) +
                              ": unknown condition '" + cond + "'");
        }
        try {
            targets[c] = {std::stod(err), std::stod(coc)};
        } catch (const std::exception&) {
            throw ConfigError("targets file line " + std::to_string(lineno) +
                              ": values must be numeric");
        }
    }
    for (VisualCondition c : {VisualCondition::SS, VisualCondition::SN, VisualCondition::NS,
                              VisualCondition::NN}) {
        if (targets.find(c) == targets.end()) {
            throw ConfigError(std::string("targets file is missing condition ") + to_string(c));
        }
    }
    return targets;
}

} // namespace soie
