#include "soie/pso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <atomic>
#include <thread>

#include "soie/angles.hpp"
#include "soie/errors.hpp"
#include "soie/random.hpp"

namespace soie {

void PsoConfig::validate() const {
    if (particles < 2) throw ConfigError("pso needs at least 2 particles");
    if (iterations < 1) throw ConfigError("pso needs at least 1 iteration");
    if (bounds.empty()) throw ConfigError("pso bounds missing");
    for (const auto& [lo, hi] : bounds) {
        if (!(lo < hi)) throw ConfigError("pso bounds must satisfy lo < hi");
    }
}

PsoResult pso_minimize(const std::function<double(const std::vector<double>&)>& objective,
                       const PsoConfig& config) {
    config.validate();
    const std::size_t dim = config.bounds.size();
    const std::size_t count = static_cast<std::size_t>(config.particles);
    constexpr double kInf = std::numeric_limits<double>::infinity();

    SeededStream rng(config.seed, 0, Channel::optimizer);

    // Synchronous global-best swarm: moves are drawn serially, the objective
    // evaluations of one iteration run concurrently, and the best-updates are
    // applied in particle order, so results do not depend on the worker count.
    std::vector<std::vector<double>> pos(count, std::vector<double>(dim));
    std::vector<std::vector<double>> vel(count, std::vector<double>(dim));
    std::vector<std::vector<double>> best_pos(count, std::vector<double>(dim));
    std::vector<double> best_f(count, kInf);
    std::vector<double> f(count, kInf);

    std::vector<double> vmax(dim);
    for (std::size_t d = 0; d < dim; ++d) {
        vmax[d] = 0.5 * (config.bounds[d].second - config.bounds[d].first);
    }

    const auto evaluate_all = [&]() {
        unsigned workers =
            config.jobs != 0 ? config.jobs : std::max(1u, std::thread::hardware_concurrency());
        workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
        const auto eval_one = [&](std::size_t p) {
            const double v = objective(pos[p]);
            f[p] = std::isfinite(v) ? v : kInf;
        };
        if (workers <= 1) {
            for (std::size_t p = 0; p < count; ++p) eval_one(p);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&]() {
                for (;;) {
                    const std::size_t p = next.fetch_add(1);
                    if (p >= count) return;
                    eval_one(p);
                }
            });
        }
        for (std::thread& t : pool) t.join();
    };

    PsoResult result;
    result.best_f = kInf;

    for (std::size_t p = 0; p < count; ++p) {
        for (std::size_t d = 0; d < dim; ++d) {
            const auto [lo, hi] = config.bounds[d];
            pos[p][d] = lo + (hi - lo) * rng.uniform();
            vel[p][d] = vmax[d] * (2.0 * rng.uniform() - 1.0);
        }
    }
    evaluate_all();
    for (std::size_t p = 0; p < count; ++p) {
        best_pos[p] = pos[p];
        best_f[p] = f[p];
        if (f[p] < result.best_f) {
            result.best_f = f[p];
            result.best_x = pos[p];
        }
    }
    if (!std::isfinite(result.best_f)) {
        throw NumericalError("pso: every initial particle was rejected");
    }

    for (int iter = 0; iter < config.iterations; ++iter) {
        for (std::size_t p = 0; p < count; ++p) {
            for (std::size_t d = 0; d < dim; ++d) {
                const auto [lo, hi] = config.bounds[d];
                const double r1 = rng.uniform();
                const double r2 = rng.uniform();
                double v = config.inertia * vel[p][d] +
                           config.cognitive * r1 * (best_pos[p][d] - pos[p][d]) +
                           config.social * r2 * (result.best_x[d] - pos[p][d]);
                v = std::clamp(v, -vmax[d], vmax[d]);
                double x = pos[p][d] + v;
                // Reflect at the box boundary.
                if (x < lo) {
                    x = std::min(hi, lo + (lo - x));
                    v = -v;
                } else if (x > hi) {
                    x = std::max(lo, hi - (x - hi));
                    v = -v;
                }
                pos[p][d] = x;
                vel[p][d] = v;
            }
        }
        evaluate_all();
        bool any_accepted = false;
        for (std::size_t p = 0; p < count; ++p) {
            if (std::isfinite(f[p])) any_accepted = true;
            if (f[p] < best_f[p]) {
                best_f[p] = f[p];
                best_pos[p] = pos[p];
            }
            if (f[p] < result.best_f) {
                result.best_f = f[p];
                result.best_x = pos[p];
            }
        }
        if (!any_accepted) {
            throw NumericalError("pso: all particles rejected in iteration " +
                                 std::to_string(iter));
        }
        result.trace.push_back(result.best_f);
    }
    return result;
}

const char* to_string(VisualCondition c) {
    switch (c) {
        case VisualCondition::SS: return "SS";
        case VisualCondition::SN: return "SN";
        case VisualCondition::NS: return "NS";
        case VisualCondition::NN: return "NN";
    }
    return "??";
}

namespace {

bool self_is_noisy(VisualCondition c) {
    return c == VisualCondition::NS || c == VisualCondition::NN;
}

bool partner_is_noisy(VisualCondition c) {
    return c == VisualCondition::SN || c == VisualCondition::NN;
}

} // namespace

HumanPrediction predict_human_condition(VisualCondition condition, const HumanModelParams& params,
                                        const DesignConfig& design) {
    const NoiseSpec self{self_is_noisy(condition) ? params.delta_noisy_deg
                                                  : params.delta_sharp_deg,
                         params.sensing_std_deg};
    const NoiseSpec partner{partner_is_noisy(condition) ? params.delta_noisy_deg
                                                        : params.delta_sharp_deg,
                            params.sensing_std_deg};

    const double mu_bias = partner_haptic_bias_deg(partner, design);
    const NoiseSpec haptic{-mu_bias, design.haptic_std_deg};
    const OptimalImpedance opt = optimal_lambda(self, haptic, design);

    HumanPrediction pred;
    pred.lambda = opt.lambda;
    pred.error_deg = stationary_error_deg(opt.lambda, self, haptic, design);
    return pred;
}

HumanFitResult fit_human_hyperparams(const HumanTargets& targets, PsoConfig pso,
                                     DesignConfig design) {
    for (VisualCondition c : {VisualCondition::SS, VisualCondition::SN, VisualCondition::NS,
                              VisualCondition::NN}) {
        if (targets.find(c) == targets.end()) {
            throw ConfigError(std::string("fit_human_hyperparams: missing condition ") +
                              to_string(c));
        }
    }
    if (pso.bounds.empty()) {
        pso.bounds = {{0.0, 10.0}, {0.0, 10.0}, {0.1, 50.0}};
    }
    if (pso.bounds.size() != 3) {
        throw ConfigError("fit_human_hyperparams: expects 3-dimensional bounds");
    }

    double error_scale = 0.0;
    double coc_scale = 0.0;
    for (const auto& [c, t] : targets) {
        error_scale += t.error_deg;
        coc_scale += t.cocontraction;
    }
    error_scale /= static_cast<double>(targets.size());
    coc_scale /= static_cast<double>(targets.size());
    if (error_scale <= 0.0 || coc_scale <= 0.0) {
        throw ConfigError("fit_human_hyperparams: target means must be positive");
    }

    const auto objective = [&](const std::vector<double>& x) {
        HumanModelParams params;
        params.delta_sharp_deg = x[0];
        params.delta_noisy_deg = x[1];
        params.effort_weight = x[2];
        DesignConfig cfg = design;
        cfg.weights.r = params.effort_weight;

        // The two partner closures (sharp, noisy) are shared across conditions.
        const NoiseSpec sharp{params.delta_sharp_deg, params.sensing_std_deg};
        const NoiseSpec noisy{params.delta_noisy_deg, params.sensing_std_deg};
        const double mu_sharp = partner_haptic_bias_deg(sharp, cfg);
        const double mu_noisy = partner_haptic_bias_deg(noisy, cfg);

        double obj = 0.0;
        for (const auto& [c, target] : targets) {
            const NoiseSpec& self = self_is_noisy(c) ? noisy : sharp;
            const double mu_bias = partner_is_noisy(c) ? mu_noisy : mu_sharp;
            const NoiseSpec haptic{-mu_bias, cfg.haptic_std_deg};
            const OptimalImpedance opt = optimal_lambda(self, haptic, cfg);
            const double err = stationary_error_deg(opt.lambda, self, haptic, cfg);

            const double de = (err - target.error_deg) / error_scale;
            const double dc = (opt.lambda - target.cocontraction) / coc_scale;
            obj += de * de + dc * dc;
        }
        return obj;
    };

    const PsoResult res = pso_minimize(objective, pso);
    HumanFitResult fit;
    fit.params.delta_sharp_deg = res.best_x[0];
    fit.params.delta_noisy_deg = res.best_x[1];
    fit.params.effort_weight = res.best_x[2];
    fit.objective = res.best_f;
    fit.pso = res;
    return fit;
}

} // namespace soie
