#include "morl/npg.hpp"

#include <cmath>
#include <limits>

#include "morl/errors.hpp"
#include "morl/oracle.hpp"

namespace morl {

namespace {

void validate_config(const NpgConfig& config) {
    if (config.outer_iters < 0) throw ConfigError("npg: outer_iters must be nonnegative");
    if (config.inner_iters < 1) throw ConfigError("npg: inner_iters must be at least 1");
    if (config.horizon < 1) throw ConfigError("npg: horizon must be at least 1");
    if (!(config.step_alpha > 0.0)) throw ConfigError("npg: step_alpha must be positive");
    if (config.step_beta && !(*config.step_beta > 0.0)) {
        throw ConfigError("npg: step_beta must be positive");
    }
    if (config.batch_inner < 1) throw ConfigError("npg: inner batch must be at least 1");
    if (config.estimator == EstimatorKind::kEmpirical && config.batch_returns < 1) {
        throw ConfigError("npg: return batch must be at least 1");
    }
    if (config.estimator == EstimatorKind::kMlmc && config.batch_max < 1) {
        throw ConfigError("npg: batch_max must be at least 1");
    }
    if (config.threads < 1) throw ConfigError("npg: threads must be at least 1");
}

Eigen::VectorXd resolve_vector(const Eigen::VectorXd& given, int dim, const char* what) {
    if (given.size() == 0) return Eigen::VectorXd::Zero(dim);
    if (given.size() != dim) {
        throw ConfigError(std::string("npg: ") + what + " has size " +
                          std::to_string(given.size()) + ", expected " + std::to_string(dim));
    }
    return given;
}

RunReport run_outer_loop(const TabularMdp& mdp, const Scalarization& f, const NpgConfig& config) {
    validate_config(config);
    if (f.n_objectives() != mdp.n_objectives()) {
        throw ConfigError("npg: scalarization objective count does not match the mdp");
    }

    const int dim = mdp.n_states() * mdp.n_actions();
    SoftmaxPolicy policy(resolve_vector(config.theta_init, dim, "theta_init"), mdp.n_states(),
                         mdp.n_actions());
    const Eigen::VectorXd omega_start = resolve_vector(config.omega_init, dim, "omega_init");

    const double score_sq = SoftmaxPolicy::score_bound() * SoftmaxPolicy::score_bound();
    double fisher_floor = oracle::exact_fisher(mdp, policy).range_floor;
    auto beta_of = [&](double mu) {
        if (config.step_beta) return *config.step_beta;
        if (!(mu > 0.0)) {
            throw ConfigError("npg: fisher floor is zero at the current policy; set step_beta");
        }
        return mu / score_sq;
    };
    double beta = beta_of(fisher_floor);

    RunReport report;
    report.config = config;
    report.theta_init = policy.theta();
    report.fisher_floor_used = fisher_floor;
    report.beta_used = beta;
    report.iterations.reserve(config.outer_iters);

    Eigen::VectorXd omega = omega_start;
    for (int k = 0; k < config.outer_iters; ++k) {
        if (config.refresh_fisher_floor && k > 0) {
            fisher_floor = oracle::exact_fisher(mdp, policy).range_floor;
            beta = beta_of(fisher_floor);
        }

        Eigen::VectorXd partials;
        long outer_trajectories = 0;
        int level_q = -1;
        bool level_truncated = false;

        if (config.estimator == EstimatorKind::kEmpirical) {
            const ReturnEstimate j_hat = empirical_return(
                mdp, policy, config.horizon, config.batch_returns,
                LaneBlock{config.master_seed, static_cast<std::uint64_t>(k), phase::kReturnBatch},
                config.threads);
            partials = f.grad(j_hat.value);
            outer_trajectories = config.batch_returns;
        } else {
            const MlmcPartials mp = mlmc_partials(
                mdp, policy, f, config.horizon, config.batch_max,
                LaneBlock{config.master_seed, static_cast<std::uint64_t>(k), phase::kMlmcLevelDraw},
                LaneBlock{config.master_seed, static_cast<std::uint64_t>(k), phase::kMlmcBatch},
                config.coupled_base, config.threads);
            partials = mp.partials;
            outer_trajectories = mp.trajectories_used;
            level_q = mp.level_q;
            level_truncated = mp.truncated;
        }

        const InnerStepSupplier supplier = [&](int n) {
            return sample_inner_batch(
                mdp, policy, partials, config.horizon, config.batch_inner,
                LaneBlock{config.master_seed, static_cast<std::uint64_t>(k),
                          phase::inner(static_cast<std::uint64_t>(n))},
                config.fisher_normalized, config.threads);
        };

        const Eigen::VectorXd omega_init = config.warm_start_direction ? omega : omega_start;
        try {
            omega = solve_direction(supplier, config.inner_iters, beta, omega_init);
        } catch (const DivergenceError& e) {
            throw DivergenceError(std::string(e.what()) + " in outer iteration", k);
        }
        policy = policy.updated(config.step_alpha, omega);

        const oracle::ExactValues exact = oracle::exact_values(mdp, policy);
        IterationRecord record;
        record.k = k;
        record.exact_objective = f.value(exact.returns);
        record.exact_returns = exact.returns;
        record.trajectories =
            outer_trajectories + static_cast<long>(config.inner_iters) * config.batch_inner;
        record.omega_norm = omega.norm();
        record.exact_grad_norm = oracle::exact_scalarized_gradient(mdp, policy, f).norm();
        record.level_q = level_q;
        record.level_truncated = level_truncated;
        report.iterations.push_back(std::move(record));

        report.total_trajectories += report.iterations.back().trajectories;
    }

    report.total_env_steps = report.total_trajectories * config.horizon;
    report.theta_final = policy.theta();
    return report;
}

} // namespace

Eigen::VectorXd solve_direction(const InnerStepSupplier& supply, int n_steps, double beta,
                                const Eigen::VectorXd& omega_init) {
    if (n_steps < 1) throw ConfigError("solve_direction: need at least one step");
    if (!(beta > 0.0)) throw ConfigError("solve_direction: beta must be positive");

    Eigen::VectorXd omega = omega_init;
    for (int n = 0; n < n_steps; ++n) {
        const InnerBatch batch = supply(n);
        omega -= beta * (batch.fisher_mean * omega - batch.grad_mean);
        if (!omega.allFinite()) {
            throw DivergenceError("solve_direction: direction diverged", n);
        }
    }
    return omega;
}

RunReport run_vanilla_npg(const TabularMdp& mdp, const Scalarization& f, const NpgConfig& config) {
    NpgConfig local = config;
    local.estimator = EstimatorKind::kEmpirical;
    return run_outer_loop(mdp, f, local);
}

RunReport run_mlmc_npg(const TabularMdp& mdp, const Scalarization& f, const NpgConfig& config) {
    NpgConfig local = config;
    local.estimator = EstimatorKind::kMlmc;
    return run_outer_loop(mdp, f, local);
}

NpgConfig theorem_schedule(double epsilon, const TheoryConstants& constants, double gamma,
                           TheoremSchedule which, double r0) {
    if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
        throw ConfigError("theorem_schedule: epsilon must lie in (0, 1)");
    }
    if (!(gamma > 0.0) || !(gamma < 1.0)) {
        throw ConfigError("theorem_schedule: gamma must lie in (0, 1)");
    }
    if (!(constants.fisher_floor > 0.0)) {
        throw ConfigError("theorem_schedule: constants need a measured fisher floor");
    }
    if (!(r0 > 0.0)) throw ConfigError("theorem_schedule: r0 must be positive");

    const double mu = constants.fisher_floor;
    const double g1_sq = constants.score_bound * constants.score_bound;
    const double l_j = constants.objective_smoothness;
    const double alpha_cap = mu / (4.0 * l_j * g1_sq);

    auto round_count = [](double x) {
        // Round up, but forgive float residue so 1/(0.01*0.1) stays 1000.
        const double up = std::ceil(x - 1e-9 * std::max(1.0, std::abs(x)));
        if (up >= static_cast<double>(std::numeric_limits<int>::max())) {
            return std::numeric_limits<int>::max();
        }
        return std::max(1, static_cast<int>(up));
    };

    NpgConfig config;
    config.schedule_epsilon = epsilon;

    double alpha = alpha_cap;
    if (which == TheoremSchedule::kMlmc) {
        alpha = alpha_cap * epsilon * std::log(1.0 / epsilon);
        if (alpha > alpha_cap) {
            alpha = alpha_cap;
            config.alpha_clamped = true;
        }
        config.estimator = EstimatorKind::kMlmc;
        config.batch_max = round_count(1.0 / (epsilon * epsilon));
        config.batch_inner = 1;
    } else {
        config.estimator = EstimatorKind::kEmpirical;
        const double batch = 1.0 / ((1.0 - gamma) * (1.0 - gamma) * epsilon);
        config.batch_returns = round_count(batch);
        config.batch_inner = round_count(batch);
    }
    config.step_alpha = alpha;

    // Unit theta-constant for the outer iteration count.
    config.outer_iters = round_count(1.0 / (alpha * epsilon));
    const double n_inner = 4.0 * constants.partial_bound * constants.n_objectives *
                           constants.score_bound /
                           (mu * mu * (1.0 - gamma) * (1.0 - gamma)) *
                           std::log(r0 * r0 / (epsilon * epsilon));
    config.inner_iters = round_count(std::max(n_inner, 1.0));
    config.horizon = round_count(2.0 * std::log(1.0 / epsilon) / std::log(1.0 / gamma));
    return config;
}

} // namespace morl
