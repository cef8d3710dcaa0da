// Command-line front end: simulate rollouts, print exact oracle quantities,
// run bias/variance campaigns, launch the two optimizer variants, and fit
// convergence rates from report CSVs.
//
// Exit codes: 0 success, 2 config error, 3 numeric divergence, 4 budget refusal.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "morl/errors.hpp"
#include "morl/estimators.hpp"
#include "morl/harness.hpp"
#include "morl/instances.hpp"
#include "morl/mdp.hpp"
#include "morl/npg.hpp"
#include "morl/oracle.hpp"

namespace {

using nlohmann::json;

struct GlobalFlags {
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> out;
};

std::string slurp(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw morl::ConfigError(std::string(what) + ": cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

Eigen::VectorXd load_theta(const std::string& path) {
    json doc;
    try {
        doc = json::parse(slurp(path, "theta"));
    } catch (const json::parse_error& e) {
        throw morl::ConfigError(std::string("theta: parse error: ") + e.what());
    }
    if (!doc.is_array()) throw morl::ConfigError("theta: expected a flat JSON array");
    Eigen::VectorXd theta(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) theta[i] = doc[i].get<double>();
    return theta;
}

morl::SoftmaxPolicy policy_for(const morl::TabularMdp& mdp, const std::string& theta_path) {
    if (theta_path.empty()) {
        return morl::SoftmaxPolicy(mdp.n_states(), mdp.n_actions());
    }
    return morl::SoftmaxPolicy(load_theta(theta_path), mdp.n_states(), mdp.n_actions());
}

/// Accepts either inline JSON or a path to a JSON file.
std::string json_or_file(const std::string& arg, const char* what) {
    if (!arg.empty() && arg.front() == '{') return arg;
    return slurp(arg, what);
}

void emit(const std::string& content, const std::optional<std::string>& out) {
    if (out) {
        morl::harness::write_file_atomic(*out, content);
    } else {
        std::cout << content;
    }
}

void cmd_simulate(const std::string& mdp_path, const std::string& theta_path, int horizon,
                  int count, const GlobalFlags& flags) {
    const morl::TabularMdp mdp = morl::load_mdp_json(mdp_path);
    const morl::SoftmaxPolicy policy = policy_for(mdp, theta_path);
    const std::uint64_t seed = flags.seed.value_or(0);

    json trajectories = json::array();
    for (int i = 0; i < count; ++i) {
        const morl::Trajectory traj = morl::sample_trajectory(
            mdp, policy, horizon,
            morl::RngStream(seed, morl::Lane{0, morl::phase::kSimulate,
                                             static_cast<std::uint64_t>(i)}));
        json steps = json::array();
        for (const auto& [s, a] : traj.steps) steps.push_back({s, a});
        trajectories.push_back(steps);
    }
    json doc;
    doc["mdp"] = mdp_path;
    doc["horizon"] = horizon;
    doc["seed"] = seed;
    doc["trajectories"] = trajectories;
    emit(doc.dump(2) + "\n", flags.out);
}

void cmd_oracle(const std::string& mdp_path, const std::string& theta_path,
                const std::string& scal_arg, std::optional<int> horizon,
                const GlobalFlags& flags) {
    const morl::TabularMdp mdp = morl::load_mdp_json(mdp_path);
    const morl::SoftmaxPolicy policy = policy_for(mdp, theta_path);
    morl::Scalarization f =
        scal_arg.empty()
            ? morl::Scalarization::weighted_sum(Eigen::VectorXd::Ones(mdp.n_objectives()))
            : morl::Scalarization::from_json(json_or_file(scal_arg, "scalarization"));
    emit(morl::harness::oracle_report_json(mdp, policy, f, horizon), flags.out);
}

void cmd_estimate_bias(const std::string& config_path, const GlobalFlags& flags) {
    json doc;
    try {
        doc = json::parse(slurp(config_path, "config"));
    } catch (const json::parse_error& e) {
        throw morl::ConfigError(std::string("config: parse error: ") + e.what());
    }
    if (!doc.contains("mdp_path")) throw morl::ConfigError("config: missing mdp_path");
    const std::filesystem::path base = std::filesystem::path(config_path).parent_path();
    std::filesystem::path mdp_path = doc["mdp_path"].get<std::string>();
    if (mdp_path.is_relative()) mdp_path = base / mdp_path;
    if (!std::filesystem::exists(mdp_path)) throw morl::ConfigError("config: mdp_path not found");

    const morl::TabularMdp mdp = morl::load_mdp_json(mdp_path.string());
    if (!doc.contains("scalarization")) throw morl::ConfigError("config: missing scalarization");
    const morl::Scalarization f = morl::Scalarization::from_json(doc["scalarization"].dump());

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(mdp.n_states() * mdp.n_actions());
    if (doc.contains("theta")) {
        const auto& arr = doc["theta"];
        theta.resize(arr.size());
        for (std::size_t i = 0; i < arr.size(); ++i) theta[i] = arr[i].get<double>();
    }
    const morl::SoftmaxPolicy policy(theta, mdp.n_states(), mdp.n_actions());

    morl::harness::MeasureOptions options;
    if (!doc.contains("B_list")) throw morl::ConfigError("config: missing B_list");
    for (const auto& b : doc["B_list"]) options.batches.push_back(b.get<int>());
    const std::string mode = doc.value("mode", std::string("enumerate"));
    options.mode = mode == "montecarlo" ? morl::harness::MeasureMode::kMonteCarlo
                                        : morl::harness::MeasureMode::kEnumerate;
    options.replications = doc.value("replications", 10000L);
    options.seed = flags.seed.value_or(doc.value("seed", 0ull));
    options.threads = flags.threads.value_or(doc.value("threads", 1));
    options.budget = doc.value("budget", 1e6);

    const int horizon = doc.value("horizon", 1);
    const std::string kind_name = doc.value("estimator", std::string("empirical"));
    const morl::EstimatorKind kind =
        kind_name == "mlmc" ? morl::EstimatorKind::kMlmc : morl::EstimatorKind::kEmpirical;

    const auto report = morl::harness::measure_bias_variance(mdp, policy, f, horizon, kind, options);
    const std::string out = flags.out.value_or(doc.value("output_path", std::string("bias_report")));
    morl::harness::write_file_atomic(out + ".json", morl::harness::bias_report_json(report));
    morl::harness::write_file_atomic(out + ".csv", morl::harness::bias_report_csv(report));
}

void cmd_run(const std::string& config_path, const std::string& algorithm,
             const GlobalFlags& flags) {
    morl::harness::CliOverrides overrides;
    overrides.seed = flags.seed;
    overrides.threads = flags.threads;
    overrides.output_path = flags.out;
    overrides.algorithm = algorithm;
    morl::harness::run_experiment(config_path, overrides);
}

void cmd_fit_rates(const std::string& csv_path, const std::string& x_col,
                   const std::string& y_col, bool drop_nonpositive, const GlobalFlags& flags) {
    std::ifstream in(csv_path);
    if (!in) throw morl::ConfigError("fit-rates: cannot open '" + csv_path + "'");

    std::string header;
    if (!std::getline(in, header)) throw morl::ConfigError("fit-rates: empty csv");
    std::vector<std::string> columns;
    {
        std::istringstream hs(header);
        std::string name;
        while (std::getline(hs, name, ',')) columns.push_back(name);
    }
    int xi = -1, yi = -1;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == x_col) xi = static_cast<int>(i);
        if (columns[i] == y_col) yi = static_cast<int>(i);
    }
    if (xi < 0 || yi < 0) {
        throw morl::ConfigError("fit-rates: columns '" + x_col + "'/'" + y_col + "' not found");
    }

    std::vector<std::pair<double, double>> points;
    long dropped = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (static_cast<int>(cells.size()) <= std::max(xi, yi)) continue;
        const double x = std::stod(cells[xi]);
        const double y = std::stod(cells[yi]);
        if (drop_nonpositive && !(y > 0.0)) {  // also drops nan cells
            ++dropped;
            continue;
        }
        points.emplace_back(x, y);
    }

    const morl::harness::SlopeFit fit = morl::harness::fit_loglog_slope(points);
    json doc;
    doc["slope"] = fit.slope;
    doc["intercept"] = fit.intercept;
    doc["stderr"] = fit.stderr_slope;
    doc["points_used"] = points.size();
    doc["points_dropped"] = dropped;
    emit(doc.dump(2) + "\n", flags.out);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Concave-scalarized multi-objective policy optimization on tabular MDPs"};
    app.require_subcommand(1);

    GlobalFlags flags;
    std::uint64_t seed_arg = 0;
    int threads_arg = 1;
    std::string out_arg;
    auto* seed_opt = app.add_option("--seed", seed_arg, "Master seed");
    auto* threads_opt = app.add_option("--threads", threads_arg, "Worker threads");
    auto* out_opt = app.add_option("--out", out_arg, "Output path (default: stdout or config)");

    std::string mdp_path, theta_path, scal_arg, config_path, csv_path;
    std::string x_col = "B", y_col = "bias_norm";
    int horizon = 10, count = 1;
    int oracle_horizon = -1;
    bool drop_nonpositive = false;

    auto* simulate = app.add_subcommand("simulate", "Sample trajectories to a file");
    simulate->add_option("--mdp", mdp_path, "Model JSON")->required();
    simulate->add_option("--theta", theta_path, "Flat theta JSON array file");
    simulate->add_option("--horizon", horizon, "Rollout length")->required();
    simulate->add_option("--num", count, "Number of trajectories")->required();

    auto* oracle_cmd = app.add_subcommand("oracle", "Print exact quantities for (mdp, theta, f)");
    oracle_cmd->add_option("--mdp", mdp_path, "Model JSON")->required();
    oracle_cmd->add_option("--theta", theta_path, "Flat theta JSON array file");
    oracle_cmd->add_option("--scal", scal_arg, "Scalarization JSON (inline or file)");
    oracle_cmd->add_option("--horizon", oracle_horizon, "Also report truncated quantities");

    auto* bias = app.add_subcommand("estimate-bias", "Run a bias/variance campaign");
    bias->add_option("--config", config_path, "Campaign config JSON")->required();

    auto* run_npg = app.add_subcommand("run-npg", "Run the batch-estimator optimizer");
    run_npg->add_option("--config", config_path, "Run config JSON")->required();

    auto* run_mlmc = app.add_subcommand("run-mlmc-npg", "Run the level-randomized optimizer");
    run_mlmc->add_option("--config", config_path, "Run config JSON")->required();

    auto* fit = app.add_subcommand("fit-rates", "Log-log slope fit over CSV columns");
    fit->add_option("--csv", csv_path, "Input CSV")->required();
    fit->add_option("--x", x_col, "x column name");
    fit->add_option("--y", y_col, "y column name");
    fit->add_flag("--drop-nonpositive", drop_nonpositive, "Skip rows with y <= 0");

    for (auto* sub : {simulate, oracle_cmd, bias, run_npg, run_mlmc, fit}) {
        sub->fallthrough();
    }

    CLI11_PARSE(app, argc, argv);

    if (seed_opt->count() > 0) flags.seed = seed_arg;
    if (threads_opt->count() > 0) flags.threads = threads_arg;
    if (out_opt->count() > 0) flags.out = out_arg;

    try {
        if (simulate->parsed()) {
            cmd_simulate(mdp_path, theta_path, horizon, count, flags);
        } else if (oracle_cmd->parsed()) {
            cmd_oracle(mdp_path, theta_path, scal_arg,
                       oracle_horizon > 0 ? std::optional<int>(oracle_horizon) : std::nullopt,
                       flags);
        } else if (bias->parsed()) {
            cmd_estimate_bias(config_path, flags);
        } else if (run_npg->parsed()) {
            cmd_run(config_path, "npg", flags);
        } else if (run_mlmc->parsed()) {
            cmd_run(config_path, "mlmc_npg", flags);
        } else if (fit->parsed()) {
            cmd_fit_rates(csv_path, x_col, y_col, drop_nonpositive, flags);
        }
    } catch (const morl::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return morl::kExitConfig;
    } catch (const morl::DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return morl::kExitConfig;
    } catch (const morl::DivergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return morl::kExitDivergence;
    } catch (const morl::BudgetError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return morl::kExitBudget;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return morl::kExitOk;
}
