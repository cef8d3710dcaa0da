#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "morl/mdp.hpp"
#include "morl/npg.hpp"
#include "morl/oracle.hpp"
#include "morl/policy.hpp"
#include "morl/scalarization.hpp"

namespace morl::harness {

// ---------------------------------------------------------------------------
// Rate fitting.
// ---------------------------------------------------------------------------

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
};

/// Ordinary least squares on (ln x, ln y). Needs at least 3 points with
/// distinct x; any y <= 0 is refused (exclude such rows upstream).
SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

// ---------------------------------------------------------------------------
// Bias / variance measurement campaigns.
// ---------------------------------------------------------------------------

enum class MeasureMode { kEnumerate, kMonteCarlo };

/// One batch size's measurements. Bias and variance are taken against the
/// truncated oracle gradient grad f(J_H), which isolates the plug-in error
/// from the horizon tail; the tail itself is reported once per campaign.
struct BiasVarianceRow {
    int batch = 0;            // B, or B_max for the mlmc estimator
    double bias_norm = 0.0;   // ||grad f(J_H) - E[g]||
    double variance = 0.0;    // E ||g - grad f(J_H)||^2
    double mse_returns = 0.0; // E ||J_hat - J_H||^2
    long replications = 0;    // 0 for enumerated rows
    double ci_halfwidth = 0.0;  // 3-sigma on bias_norm; 0 for enumerated rows
    bool excluded_from_fit = false;
};

struct BiasVarianceReport {
    std::vector<BiasVarianceRow> rows;  // sorted by batch ascending
    std::optional<SlopeFit> bias_slope;
    std::optional<SlopeFit> variance_slope;
    std::string estimator_kind;
    std::string scalarization_kind;
    double horizon_tail_norm = 0.0;  // ||grad f(J) - grad f(J_H)||
    int horizon = 0;
};

struct MeasureOptions {
    std::vector<int> batches;
    MeasureMode mode = MeasureMode::kEnumerate;
    long replications = 10000;  // monte carlo mode; at least 1000
    std::uint64_t seed = 0;
    int threads = 1;
    double budget = 1e6;
};

BiasVarianceReport measure_bias_variance(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                                         const Scalarization& f, int horizon, EstimatorKind kind,
                                         const MeasureOptions& options);

// ---------------------------------------------------------------------------
// Inner-loop oracle-error diagnostics.
// ---------------------------------------------------------------------------

/// Empirical estimates of the stochastic-recursion error constants, measured
/// against exact oracle values. Matrix deviations use the Frobenius norm, so
/// the mean-squared noise scales exactly as 1/B for batch means.
struct InnerLoopDiagnostics {
    double fisher_noise_sq = 0.0;     // E ||F_hat_B - F||_F^2
    double fisher_noise_sq_ci = 0.0;  // 3-sigma halfwidth
    double fisher_bias = 0.0;         // ||mean F_hat - F||_F
    double fisher_bias_ci = 0.0;
    double fisher_bias_bound = 0.0;   // G1^2 gamma^H
    double fisher_lambda_max = 0.0;   // oracle largest eigenvalue
    double grad_norm_bound = 0.0;     // C M G1 / (1-gamma)^2
    double initial_error = 0.0;       // R_0 = ||omega*|| for omega_0 = 0
    int batch = 0;
    long replications = 0;
};

InnerLoopDiagnostics measure_inner_loop(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                                        const Scalarization& f, int horizon, int batch,
                                        long replications, std::uint64_t seed,
                                        bool fisher_normalized = true, int threads = 1);

// ---------------------------------------------------------------------------
// Experiment configs and reports.
// ---------------------------------------------------------------------------

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> output_path;
    std::optional<std::string> algorithm;  // "npg" | "mlmc_npg"
};

/// A parsed run config: the model, objective, algorithm and schedule.
struct RunSpec {
    TabularMdp mdp;
    Scalarization scalarization;
    NpgConfig config;
    std::string algorithm;  // "npg" | "mlmc_npg"
    std::string output_path;
};

RunSpec load_run_config(const std::string& path, const CliOverrides& overrides = {});
RunSpec parse_run_config(const std::string& text, const std::string& base_dir,
                         const CliOverrides& overrides = {});

/// Executes the configured run, attaches the grid reference optimum when the
/// model shape supports one, and writes <output>.json and <output>.csv
/// atomically. Returns the report.
RunReport run_experiment(const std::string& config_path, const CliOverrides& overrides = {});

/// Report serialization. The CSV columns are, in order:
/// k, exact_f, gap_to_ref, trajectories_cum, env_steps_cum, omega_norm, level_q.
/// gap_to_ref is nan without a reference; level_q is -1 for vanilla runs.
std::string run_report_json(const RunReport& report);
std::string run_report_csv(const RunReport& report);
std::string bias_report_json(const BiasVarianceReport& report);
std::string bias_report_csv(const BiasVarianceReport& report);
std::string diagnostics_json(const InnerLoopDiagnostics& diag);

/// Full exact-quantity dump for one (mdp, theta, f) triple; the `oracle` CLI
/// subcommand prints this.
std::string oracle_report_json(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                               const Scalarization& f, std::optional<int> horizon);

/// Write-temp-then-rename; never leaves a half-written report.
void write_file_atomic(const std::string& path, const std::string& content);

} // namespace morl::harness
