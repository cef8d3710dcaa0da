#include "morl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "morl/errors.hpp"
#include "morl/estimators.hpp"
#include "morl/parallel.hpp"

namespace morl::harness {

namespace {

using nlohmann::json;

std::string format_double(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

json matrix_rows(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
    }
    return rows;
}

/// Spread of per-group estimates, reported as a 3-sigma halfwidth. Groups are
/// formed by replication index modulo `groups`, so the split is deterministic.
double group_ci(const std::vector<double>& values) {
    const int groups = 10;
    if (values.size() < static_cast<std::size_t>(2 * groups)) return 0.0;
    std::vector<double> means(groups, 0.0);
    std::vector<long> counts(groups, 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        means[i % groups] += values[i];
        ++counts[i % groups];
    }
    double total = 0.0;
    for (int g = 0; g < groups; ++g) {
        means[g] /= static_cast<double>(counts[g]);
        total += means[g];
    }
    total /= groups;
    double var = 0.0;
    for (int g = 0; g < groups; ++g) var += (means[g] - total) * (means[g] - total);
    var /= (groups - 1);
    return 3.0 * std::sqrt(var / groups);
}

} // namespace

// ---------------------------------------------------------------------------
// Rate fitting.
// ---------------------------------------------------------------------------

SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) {
        throw ConfigError("fit_loglog_slope: need at least 3 points");
    }
    for (const auto& [x, y] : points) {
        if (!(x > 0.0)) throw ConfigError("fit_loglog_slope: x values must be positive");
        if (!(y > 0.0)) throw ConfigError("fit_loglog_slope: y values must be positive");
    }

    const std::size_t n = points.size();
    double sx = 0.0, sy = 0.0;
    for (const auto& [x, y] : points) {
        sx += std::log(x);
        sy += std::log(y);
    }
    const double mean_x = sx / n;
    const double mean_y = sy / n;

    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : points) {
        const double dx = std::log(x) - mean_x;
        sxx += dx * dx;
        sxy += dx * (std::log(y) - mean_y);
    }
    if (!(sxx > 0.0)) {
        throw ConfigError("fit_loglog_slope: x values must be distinct");
    }

    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;

    double sse = 0.0;
    for (const auto& [x, y] : points) {
        const double resid = std::log(y) - (fit.intercept + fit.slope * std::log(x));
        sse += resid * resid;
    }
    fit.stderr_slope = n > 2 ? std::sqrt(sse / static_cast<double>(n - 2) / sxx) : 0.0;
    return fit;
}

// ---------------------------------------------------------------------------
// Bias / variance campaigns.
// ---------------------------------------------------------------------------

namespace {

struct CampaignContext {
    Eigen::VectorXd grad_truncated;  // reference: grad f(J_H)
    Eigen::VectorXd returns_truncated;
    double grad_trunc_sq = 0.0;
};

BiasVarianceRow enumerate_row(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                              const Scalarization& f, int horizon, EstimatorKind kind, int batch,
                              double budget, const CampaignContext& ctx,
                              const oracle::TrajectoryEnsemble& ensemble) {
    Eigen::VectorXd mean_partials;
    Eigen::MatrixXd second_moment;
    double mse = 0.0;

    if (kind == EstimatorKind::kEmpirical) {
        const int M = mdp.n_objectives();
        mean_partials = Eigen::VectorXd::Zero(M);
        second_moment = Eigen::MatrixXd::Zero(M, M);
        oracle::for_each_batch_mean(
            ensemble, batch, budget, [&](double weight, const Eigen::VectorXd& j_hat) {
                const Eigen::VectorXd partials = f.grad(j_hat);
                mean_partials += weight * partials;
                second_moment += weight * partials * partials.transpose();
                mse += weight * (j_hat - ensemble.mean_return).squaredNorm();
            });
    } else {
        const auto mlmc =
            oracle::enumerate_mlmc_expectation(mdp, policy, f, horizon, batch, budget);
        mean_partials = mlmc.mean_partials;
        second_moment = mlmc.partials_second_moment;
        const int effective = 1 << mlmc.levels;
        oracle::for_each_batch_mean(ensemble, effective, budget,
                                    [&](double weight, const Eigen::VectorXd& j_hat) {
                                        mse += weight *
                                               (j_hat - ensemble.mean_return).squaredNorm();
                                    });
    }

    BiasVarianceRow row;
    row.batch = batch;
    row.mse_returns = mse;
    const Eigen::VectorXd mean_grad = ensemble.mean_grad_kernel * mean_partials;
    row.bias_norm = (ctx.grad_truncated - mean_grad).norm();
    // E||g - ref||^2 with independent partials and trajectory factors into
    // the partials moments against the gradient-kernel moments.
    row.variance = (ensemble.grad_kernel_moment.array() * second_moment.array()).sum() -
                   2.0 * mean_grad.dot(ctx.grad_truncated) + ctx.grad_trunc_sq;
    row.replications = 0;
    row.ci_halfwidth = 0.0;
    return row;
}

BiasVarianceRow monte_carlo_row(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                                const Scalarization& f, int horizon, EstimatorKind kind,
                                int batch, const MeasureOptions& options,
                                const CampaignContext& ctx) {
    const long reps = options.replications;
    const int d = policy.dim();
    std::vector<Eigen::VectorXd> grads(reps);
    std::vector<double> mse_terms(reps, 0.0);
    const bool empirical = kind == EstimatorKind::kEmpirical;

    parallel_for(static_cast<std::size_t>(reps), options.threads, [&](std::size_t r) {
        // Each (batch, replication) pair owns a disjoint outer index.
        const std::uint64_t outer =
            (static_cast<std::uint64_t>(batch) << 32) + static_cast<std::uint64_t>(r);
        Eigen::VectorXd partials;
        if (empirical) {
            const ReturnEstimate j_hat =
                empirical_return(mdp, policy, horizon, batch,
                                 LaneBlock{options.seed, outer, phase::kReturnBatch}, 1);
            partials = f.grad(j_hat.value);
            mse_terms[r] = (j_hat.value - ctx.returns_truncated).squaredNorm();
        } else {
            const MlmcPartials mp =
                mlmc_partials(mdp, policy, f, horizon, batch,
                              LaneBlock{options.seed, outer, phase::kMlmcLevelDraw},
                              LaneBlock{options.seed, outer, phase::kMlmcBatch}, true, 1);
            partials = mp.partials;
            mse_terms[r] = std::numeric_limits<double>::quiet_NaN();
        }
        const Trajectory eval = sample_trajectory(mdp, policy, horizon,
                                                  RngStream(options.seed, Lane{outer, phase::kEval, 0}));
        grads[r] = reinforce_grad(eval, partials, policy, mdp);
    });

    Eigen::VectorXd mean_grad = Eigen::VectorXd::Zero(d);
    double variance = 0.0;
    for (long r = 0; r < reps; ++r) {
        mean_grad += grads[r];
        variance += (grads[r] - ctx.grad_truncated).squaredNorm();
    }
    mean_grad /= static_cast<double>(reps);
    variance /= static_cast<double>(reps);

    BiasVarianceRow row;
    row.batch = batch;
    row.bias_norm = (ctx.grad_truncated - mean_grad).norm();
    row.variance = variance;
    if (empirical) {
        double mse = 0.0;
        for (double term : mse_terms) mse += term;
        row.mse_returns = mse / static_cast<double>(reps);
    } else {
        row.mse_returns = std::numeric_limits<double>::quiet_NaN();
    }
    row.replications = reps;
    // Noise of the mean-gradient norm, bounded through the per-sample spread.
    row.ci_halfwidth = 3.0 * std::sqrt(variance / static_cast<double>(reps));
    return row;
}

} // namespace

BiasVarianceReport measure_bias_variance(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                                         const Scalarization& f, int horizon, EstimatorKind kind,
                                         const MeasureOptions& options) {
    if (options.batches.empty()) {
        throw ConfigError("measure_bias_variance: empty batch list");
    }
    if (options.mode == MeasureMode::kMonteCarlo && options.replications < 1000) {
        throw BudgetError("measure_bias_variance: monte carlo mode needs at least 1000 replications",
                          1000.0);
    }

    CampaignContext ctx;
    ctx.grad_truncated = oracle::exact_scalarized_gradient_truncated(mdp, policy, f, horizon);
    ctx.returns_truncated = oracle::exact_returns_truncated(mdp, policy, horizon);
    ctx.grad_trunc_sq = ctx.grad_truncated.squaredNorm();

    BiasVarianceReport report;
    report.estimator_kind = kind == EstimatorKind::kEmpirical ? "empirical" : "mlmc";
    report.scalarization_kind = f.family_name();
    report.horizon = horizon;
    report.horizon_tail_norm =
        (oracle::exact_scalarized_gradient(mdp, policy, f) - ctx.grad_truncated).norm();

    std::vector<int> batches = options.batches;
    std::sort(batches.begin(), batches.end());

    if (options.mode == MeasureMode::kEnumerate) {
        const auto ensemble =
            oracle::enumerate_trajectories(mdp, policy, horizon, options.budget);
        for (int batch : batches) {
            report.rows.push_back(enumerate_row(mdp, policy, f, horizon, kind, batch,
                                                options.budget, ctx, ensemble));
        }
    } else {
        for (int batch : batches) {
            report.rows.push_back(
                monte_carlo_row(mdp, policy, f, horizon, kind, batch, options, ctx));
        }
    }

    // Rows at the numerical noise floor carry no rate information (linear
    // objectives have exactly zero plug-in bias); exclude them from the fit.
    std::vector<std::pair<double, double>> bias_points;
    std::vector<std::pair<double, double>> variance_points;
    for (auto& row : report.rows) {
        if (row.bias_norm > 1e-13) {
            bias_points.emplace_back(row.batch, row.bias_norm);
        } else {
            row.excluded_from_fit = true;
        }
        if (row.variance > 1e-13) {
            variance_points.emplace_back(row.batch, row.variance);
        }
    }
    if (bias_points.size() >= 3) report.bias_slope = fit_loglog_slope(bias_points);
    if (variance_points.size() >= 3) report.variance_slope = fit_loglog_slope(variance_points);
    return report;
}

// ---------------------------------------------------------------------------
// Inner-loop diagnostics.
// ---------------------------------------------------------------------------

InnerLoopDiagnostics measure_inner_loop(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                                        const Scalarization& f, int horizon, int batch,
                                        long replications, std::uint64_t seed,
                                        bool fisher_normalized, int threads) {
    if (batch < 1) throw ConfigError("measure_inner_loop: batch must be at least 1");
    if (replications < 100) {
        throw BudgetError("measure_inner_loop: need at least 100 replications", 100.0);
    }

    const oracle::FisherInfo info = oracle::exact_fisher(mdp, policy);
    const double gamma = mdp.discount();
    Eigen::MatrixXd target = info.matrix;
    double bias_bound = SoftmaxPolicy::score_bound() * SoftmaxPolicy::score_bound() *
                        std::pow(gamma, horizon);
    if (!fisher_normalized) {
        target /= (1.0 - gamma);
        bias_bound /= (1.0 - gamma);
    }

    const int d = policy.dim();
    std::vector<Eigen::MatrixXd> samples(replications);
    parallel_for(static_cast<std::size_t>(replications), threads, [&](std::size_t r) {
        Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(d, d);
        const LaneBlock lanes{seed, static_cast<std::uint64_t>(r), phase::kEval};
        for (int i = 0; i < batch; ++i) {
            const Trajectory traj = sample_trajectory(mdp, policy, horizon,
                                                      lanes.stream(static_cast<std::uint64_t>(i)));
            mean += fisher_sample(traj, policy, gamma, fisher_normalized);
        }
        samples[r] = mean / static_cast<double>(batch);
    });

    Eigen::MatrixXd grand_mean = Eigen::MatrixXd::Zero(d, d);
    std::vector<double> noise_terms(replications);
    for (long r = 0; r < replications; ++r) {
        grand_mean += samples[r];
        noise_terms[r] = (samples[r] - target).squaredNorm();  // Frobenius
    }
    grand_mean /= static_cast<double>(replications);

    InnerLoopDiagnostics diag;
    diag.batch = batch;
    diag.replications = replications;
    double noise = 0.0;
    for (double term : noise_terms) noise += term;
    diag.fisher_noise_sq = noise / static_cast<double>(replications);
    diag.fisher_noise_sq_ci = group_ci(noise_terms);
    diag.fisher_bias = (grand_mean - target).norm();
    // The norm of the grand mean errs by at most the mean's own noise, whose
    // second moment is bounded by E||F_hat - F||^2 / R.
    diag.fisher_bias_ci =
        3.0 * std::sqrt(diag.fisher_noise_sq / static_cast<double>(replications));
    diag.fisher_bias_bound = bias_bound;
    diag.fisher_lambda_max = info.lambda_max;

    const TheoryConstants constants = f.constants(gamma);
    diag.grad_norm_bound = constants.partial_bound * constants.n_objectives *
                           constants.score_bound / ((1.0 - gamma) * (1.0 - gamma));
    diag.initial_error = oracle::exact_npg_direction(mdp, policy, f).norm();
    return diag;
}

// ---------------------------------------------------------------------------
// Run configs.
// ---------------------------------------------------------------------------

namespace {

Eigen::VectorXd vector_from_json(const json& arr) {
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v[i] = arr[i].get<double>();
    return v;
}

} // namespace

RunSpec parse_run_config(const std::string& text, const std::string& base_dir,
                         const CliOverrides& overrides) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: parse error: ") + e.what());
    }

    if (!doc.contains("mdp_path")) throw ConfigError("config: missing mdp_path");
    std::filesystem::path mdp_path = doc["mdp_path"].get<std::string>();
    if (mdp_path.is_relative() && !base_dir.empty()) {
        mdp_path = std::filesystem::path(base_dir) / mdp_path;
    }
    if (!std::filesystem::exists(mdp_path)) {
        throw ConfigError("config: mdp_path not found");
    }

    if (!doc.contains("scalarization")) throw ConfigError("config: missing scalarization");

    RunSpec spec{load_mdp_json(mdp_path.string()),
                 Scalarization::from_json(doc["scalarization"].dump()), NpgConfig{}, "npg", ""};

    spec.algorithm = doc.value("algorithm", std::string("npg"));
    if (overrides.algorithm) spec.algorithm = *overrides.algorithm;
    if (spec.algorithm != "npg" && spec.algorithm != "mlmc_npg") {
        throw ConfigError("config: algorithm must be 'npg' or 'mlmc_npg'");
    }

    NpgConfig& config = spec.config;
    config.estimator =
        spec.algorithm == "mlmc_npg" ? EstimatorKind::kMlmc : EstimatorKind::kEmpirical;

    if (doc.contains("theta_init")) {
        config.theta_init = vector_from_json(doc["theta_init"]);
    }
    config.master_seed = doc.value("seed", 0ull);
    config.fisher_normalized = doc.value("fisher_normalized", true);
    config.coupled_base = doc.value("coupled_base", true);
    config.refresh_fisher_floor = doc.value("refresh_fisher_floor", false);
    config.threads = doc.value("threads", 1);

    if (!doc.contains("schedule")) throw ConfigError("config: missing schedule");
    const json& schedule = doc["schedule"];
    if (schedule.contains("explicit")) {
        const json& ex = schedule["explicit"];
        config.outer_iters = ex.value("K", config.outer_iters);
        config.inner_iters = ex.value("N", config.inner_iters);
        config.horizon = ex.value("H", config.horizon);
        config.step_alpha = ex.value("alpha", config.step_alpha);
        if (ex.contains("beta")) config.step_beta = ex["beta"].get<double>();
        if (config.estimator == EstimatorKind::kEmpirical) {
            config.batch_returns = ex.value("B1", config.batch_returns);
            config.batch_inner = ex.value("B2", config.batch_inner);
        } else {
            config.batch_max = ex.value("B_max", config.batch_max);
            config.batch_inner = ex.value("B", config.batch_inner);
        }
    } else if (schedule.contains("theorem")) {
        const json& th = schedule["theorem"];
        if (!th.contains("epsilon")) throw ConfigError("config: theorem schedule needs epsilon");
        const double epsilon = th["epsilon"].get<double>();
        const std::string which = th.value("which", std::string("theorem1"));

        TheoryConstants constants = spec.scalarization.constants(spec.mdp.discount());
        const int dim = spec.mdp.n_states() * spec.mdp.n_actions();
        SoftmaxPolicy at_init(config.theta_init.size() == 0 ? Eigen::VectorXd::Zero(dim)
                                                            : config.theta_init,
                              spec.mdp.n_states(), spec.mdp.n_actions());
        constants.fisher_floor = oracle::exact_fisher(spec.mdp, at_init).range_floor;

        double r0 = th.value("r0", 0.0);
        if (!(r0 > 0.0)) {
            const double direction_norm =
                oracle::exact_npg_direction(spec.mdp, at_init, spec.scalarization).norm();
            r0 = direction_norm > 0.0 ? direction_norm : 1.0;
        }

        const TheoremSchedule kind = which == "theorem2" || which == "vanilla"
                                         ? TheoremSchedule::kVanilla
                                         : TheoremSchedule::kMlmc;
        const std::string scheduled_algorithm =
            kind == TheoremSchedule::kVanilla ? "npg" : "mlmc_npg";
        if (overrides.algorithm && *overrides.algorithm != scheduled_algorithm) {
            throw ConfigError("config: schedule '" + which + "' prescribes the " +
                              scheduled_algorithm + " algorithm but '" + *overrides.algorithm +
                              "' was requested");
        }
        const Eigen::VectorXd keep_theta = config.theta_init;
        NpgConfig scheduled = theorem_schedule(epsilon, constants, spec.mdp.discount(), kind, r0);
        scheduled.master_seed = config.master_seed;
        scheduled.fisher_normalized = config.fisher_normalized;
        scheduled.coupled_base = config.coupled_base;
        scheduled.refresh_fisher_floor = config.refresh_fisher_floor;
        scheduled.threads = config.threads;
        scheduled.theta_init = keep_theta;
        config = scheduled;
        spec.algorithm = kind == TheoremSchedule::kVanilla ? "npg" : "mlmc_npg";
    } else {
        throw ConfigError("config: schedule must contain 'explicit' or 'theorem'");
    }

    spec.output_path = doc.value("output_path", std::string("run_report"));
    if (overrides.seed) config.master_seed = *overrides.seed;
    if (overrides.threads) config.threads = *overrides.threads;
    if (overrides.output_path) spec.output_path = *overrides.output_path;
    return spec;
}

RunSpec load_run_config(const std::string& path, const CliOverrides& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string base_dir = std::filesystem::path(path).parent_path().string();
    return parse_run_config(buffer.str(), base_dir, overrides);
}

RunReport run_experiment(const std::string& config_path, const CliOverrides& overrides) {
    RunSpec spec = load_run_config(config_path, overrides);

    RunReport report = spec.algorithm == "mlmc_npg"
                           ? run_mlmc_npg(spec.mdp, spec.scalarization, spec.config)
                           : run_vanilla_npg(spec.mdp, spec.scalarization, spec.config);

    try {
        report.reference_value =
            oracle::reference_optimum(spec.mdp, spec.scalarization).value;
    } catch (const BudgetError&) {
        // No reference for this model shape; reports carry nan gaps.
    }

    write_file_atomic(spec.output_path + ".json", run_report_json(report));
    write_file_atomic(spec.output_path + ".csv", run_report_csv(report));
    return report;
}

// ---------------------------------------------------------------------------
// Serialization.
// ---------------------------------------------------------------------------

namespace {

json config_to_json(const NpgConfig& config) {
    json doc;
    doc["K"] = config.outer_iters;
    doc["N"] = config.inner_iters;
    doc["H"] = config.horizon;
    doc["alpha"] = config.step_alpha;
    if (config.step_beta) doc["beta"] = *config.step_beta;
    doc["estimator"] = config.estimator == EstimatorKind::kEmpirical ? "empirical" : "mlmc";
    if (config.estimator == EstimatorKind::kEmpirical) {
        doc["B1"] = config.batch_returns;
        doc["B2"] = config.batch_inner;
    } else {
        doc["B_max"] = config.batch_max;
        doc["B"] = config.batch_inner;
        int levels = 0;
        while ((1L << (levels + 1)) <= config.batch_max) ++levels;
        doc["effective_B_max"] = 1L << levels;
    }
    doc["seed"] = config.master_seed;
    doc["fisher_normalized"] = config.fisher_normalized;
    doc["coupled_base"] = config.coupled_base;
    doc["refresh_fisher_floor"] = config.refresh_fisher_floor;
    doc["warm_start_direction"] = config.warm_start_direction;
    doc["threads"] = config.threads;
    if (config.schedule_epsilon) {
        doc["schedule_epsilon"] = *config.schedule_epsilon;
        doc["alpha_clamped"] = config.alpha_clamped;
    }
    return doc;
}

} // namespace

std::string run_report_json(const RunReport& report) {
    json doc;
    doc["algorithm"] =
        report.config.estimator == EstimatorKind::kEmpirical ? "npg" : "mlmc_npg";
    doc["config"] = config_to_json(report.config);
    doc["fisher_floor"] = report.fisher_floor_used;
    doc["beta"] = report.beta_used;
    if (report.reference_value) {
        doc["reference_value"] = *report.reference_value;
    } else {
        doc["reference_value"] = nullptr;
    }
    doc["theta_init"] = to_std(report.theta_init);
    doc["theta_final"] = to_std(report.theta_final);
    doc["total_trajectories"] = report.total_trajectories;
    doc["total_env_steps"] = report.total_env_steps;

    json iterations = json::array();
    for (const auto& record : report.iterations) {
        json row;
        row["k"] = record.k;
        row["exact_f"] = record.exact_objective;
        row["exact_J"] = to_std(record.exact_returns);
        row["trajectories"] = record.trajectories;
        row["omega_norm"] = record.omega_norm;
        row["exact_grad_norm"] = record.exact_grad_norm;
        if (record.level_q >= 0) {
            row["level_q"] = record.level_q;
            row["level_truncated"] = record.level_truncated;
        }
        iterations.push_back(row);
    }
    doc["iterations"] = iterations;
    return doc.dump(2) + "\n";
}

std::string run_report_csv(const RunReport& report) {
    std::ostringstream out;
    out << "k,exact_f,gap_to_ref,trajectories_cum,env_steps_cum,omega_norm,level_q\n";
    long trajectories_cum = 0;
    for (const auto& record : report.iterations) {
        trajectories_cum += record.trajectories;
        const double gap = report.reference_value
                               ? *report.reference_value - record.exact_objective
                               : std::numeric_limits<double>::quiet_NaN();
        out << record.k << ',' << format_double(record.exact_objective) << ','
            << format_double(gap) << ',' << trajectories_cum << ','
            << trajectories_cum * report.config.horizon << ','
            << format_double(record.omega_norm) << ',' << record.level_q << '\n';
    }
    return out.str();
}

std::string bias_report_json(const BiasVarianceReport& report) {
    json doc;
    doc["estimator_kind"] = report.estimator_kind;
    doc["scalarization_kind"] = report.scalarization_kind;
    doc["horizon"] = report.horizon;
    doc["horizon_tail_norm"] = report.horizon_tail_norm;
    json rows = json::array();
    for (const auto& row : report.rows) {
        json r;
        r["B"] = row.batch;
        r["bias_norm"] = row.bias_norm;
        r["variance"] = row.variance;
        if (std::isnan(row.mse_returns)) {
            r["mse_J"] = nullptr;
        } else {
            r["mse_J"] = row.mse_returns;
        }
        r["replications"] = row.replications;
        r["ci_halfwidth"] = row.ci_halfwidth;
        r["excluded_from_fit"] = row.excluded_from_fit;
        rows.push_back(r);
    }
    doc["rows"] = rows;
    auto fit_json = [](const std::optional<SlopeFit>& fit) -> json {
        if (!fit) return nullptr;
        return json{{"slope", fit->slope},
                    {"intercept", fit->intercept},
                    {"stderr", fit->stderr_slope}};
    };
    doc["fitted_slope_bias"] = fit_json(report.bias_slope);
    doc["fitted_slope_variance"] = fit_json(report.variance_slope);
    return doc.dump(2) + "\n";
}

std::string bias_report_csv(const BiasVarianceReport& report) {
    std::ostringstream out;
    out << "B,bias_norm,variance,mse_J,replications,ci_halfwidth,excluded_from_fit\n";
    for (const auto& row : report.rows) {
        out << row.batch << ',' << format_double(row.bias_norm) << ','
            << format_double(row.variance) << ',' << format_double(row.mse_returns) << ','
            << row.replications << ',' << format_double(row.ci_halfwidth) << ','
            << (row.excluded_from_fit ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string diagnostics_json(const InnerLoopDiagnostics& diag) {
    json doc;
    doc["sigma_F_sq"] = diag.fisher_noise_sq;
    doc["sigma_F_sq_ci"] = diag.fisher_noise_sq_ci;
    doc["delta_F"] = diag.fisher_bias;
    doc["delta_F_ci"] = diag.fisher_bias_ci;
    doc["delta_F_bound"] = diag.fisher_bias_bound;
    doc["lambda_F"] = diag.fisher_lambda_max;
    doc["lambda_g"] = diag.grad_norm_bound;
    doc["R_0"] = diag.initial_error;
    doc["batch"] = diag.batch;
    doc["replications"] = diag.replications;
    return doc.dump(2) + "\n";
}

std::string oracle_report_json(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                               const Scalarization& f, std::optional<int> horizon) {
    const oracle::ExactValues values = oracle::exact_values(mdp, policy);
    const oracle::FisherInfo fisher = oracle::exact_fisher(mdp, policy);

    json doc;
    doc["J"] = to_std(values.returns);
    doc["f_of_J"] = f.value(values.returns);
    doc["V"] = matrix_rows(values.state_values);
    json q = json::array(), adv = json::array();
    for (int m = 0; m < mdp.n_objectives(); ++m) {
        q.push_back(matrix_rows(values.action_values[m]));
        adv.push_back(matrix_rows(values.advantages[m]));
    }
    doc["Q"] = q;
    doc["A"] = adv;
    doc["occupancy"] = matrix_rows(values.occupancy);
    doc["state_occupancy"] = to_std(values.state_occupancy);
    doc["grad_f"] = to_std(oracle::exact_scalarized_gradient(mdp, policy, f));
    doc["fisher_eigenvalues"] = to_std(fisher.eigenvalues);
    doc["mu_range"] = fisher.range_floor;
    doc["lambda_F"] = fisher.lambda_max;
    doc["npg_direction"] = to_std(oracle::exact_npg_direction(mdp, policy, f));
    if (horizon) {
        doc["horizon"] = *horizon;
        doc["J_H"] = to_std(oracle::exact_returns_truncated(mdp, policy, *horizon));
        doc["grad_f_H"] =
            to_std(oracle::exact_scalarized_gradient_truncated(mdp, policy, f, *horizon));
    }
    doc["theta"] = to_std(policy.theta());
    doc["scalarization"] = json::parse(f.to_json());
    return doc.dump(2) + "\n";
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::filesystem::path target(path);
    if (target.has_parent_path()) {
        std::filesystem::create_directories(target.parent_path());
    }
    const std::filesystem::path temp = target.string() + ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("report: cannot write '" + temp.string() + "'");
        out << content;
    }
    std::filesystem::rename(temp, target);
}

} // namespace morl::harness
