#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "morl/estimators.hpp"
#include "morl/mdp.hpp"
#include "morl/policy.hpp"
#include "morl/scalarization.hpp"

namespace morl {

enum class EstimatorKind { kEmpirical, kMlmc };

/// Everything a run needs. Batch fields by role:
///   batch_returns  - B1, trajectories behind the outer return estimate (empirical)
///   batch_inner    - B2 (empirical) or B (mlmc), fresh trajectories per inner step
///   batch_max      - level cap B_max (mlmc)
struct NpgConfig {
    int outer_iters = 100;  // K
    int inner_iters = 10;   // N
    int horizon = 50;       // H
    double step_alpha = 1.0;
    std::optional<double> step_beta;  // unset: fisher_floor / score_bound^2

    EstimatorKind estimator = EstimatorKind::kEmpirical;
    int batch_returns = 16;
    int batch_inner = 16;
    int batch_max = 64;

    std::uint64_t master_seed = 0;
    bool fisher_normalized = true;
    bool coupled_base = true;
    bool refresh_fisher_floor = false;  // re-measure mu each outer iteration
    bool warm_start_direction = false;  // keep omega across outer iterations (off: analysis-faithful)
    int threads = 1;

    Eigen::VectorXd theta_init;  // empty: zeros
    Eigen::VectorXd omega_init;  // empty: zeros

    /// Echoed when the config came from a theorem schedule.
    std::optional<double> schedule_epsilon;
    bool alpha_clamped = false;
};

/// One outer iteration's record; the exact fields are oracle values at the
/// post-update parameters.
struct IterationRecord {
    int k = 0;
    double exact_objective = 0.0;
    Eigen::VectorXd exact_returns;
    long trajectories = 0;
    double omega_norm = 0.0;
    double exact_grad_norm = 0.0;
    int level_q = -1;  // mlmc only
    bool level_truncated = false;
};

struct RunReport {
    std::vector<IterationRecord> iterations;
    long total_trajectories = 0;
    long total_env_steps = 0;  // trajectories * horizon
    NpgConfig config;
    Eigen::VectorXd theta_init;
    Eigen::VectorXd theta_final;
    double fisher_floor_used = 0.0;
    double beta_used = 0.0;
    std::optional<double> reference_value;  // f_star, when a reference optimum exists
};

/// Supplier of the paired per-step estimates (g_n, F_n); both sides of the
/// pair must come from the same batch of trajectories.
using InnerStepSupplier = std::function<InnerBatch(int step)>;

/// Stochastic quadratic solver for the update direction: runs exactly N steps
/// of omega <- omega - beta (F_n omega - g_n) from omega_init. Throws
/// DivergenceError with the failing step index if omega leaves the finite
/// range (beta too large).
Eigen::VectorXd solve_direction(const InnerStepSupplier& supply, int n_steps, double beta,
                                const Eigen::VectorXd& omega_init);

/// Outer loop with the batch-mean return estimate (fixed partials per outer
/// iteration, N inner steps on fresh batches, theta <- theta + alpha omega).
RunReport run_vanilla_npg(const TabularMdp& mdp, const Scalarization& f, const NpgConfig& config);

/// Outer loop with the level-randomized partials estimate.
RunReport run_mlmc_npg(const TabularMdp& mdp, const Scalarization& f, const NpgConfig& config);

enum class TheoremSchedule { kMlmc, kVanilla };

/// Fills the iteration lengths, batch sizes, horizon and step sizes from the
/// published schedules for a target accuracy epsilon:
///   mlmc:    alpha = mu eps log(1/eps) / (4 L_J G1^2), B_max = 1/eps^2, B = 1
///   vanilla: alpha = mu / (4 L_J G1^2), B1 = B2 = 1/((1-gamma)^2 eps)
/// with K = 1/(alpha eps) (unit theta-constant), H = 2 log(1/eps)/log(1/gamma)
/// and N = 4 C M G1 / (mu^2 (1-gamma)^2) * log(r0^2/eps^2). Counts round up.
/// alpha is additionally capped at mu / (4 L_J G1^2); the cap is recorded in
/// the config echo when it binds.
NpgConfig theorem_schedule(double epsilon, const TheoryConstants& constants, double gamma,
                           TheoremSchedule which, double r0 = 1.0);

} // namespace morl
