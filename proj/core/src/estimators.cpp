#include "morl/estimators.hpp"

#include <cmath>
#include <vector>

#include "morl/errors.hpp"
#include "morl/parallel.hpp"

namespace morl {

ReturnEstimate empirical_return(const TabularMdp& mdp, const SoftmaxPolicy& policy, int horizon,
                                int batch, const LaneBlock& lanes, int threads) {
    if (batch < 1) throw ConfigError("empirical_return: batch must be at least 1");

    std::vector<Eigen::VectorXd> samples(batch);
    parallel_for(static_cast<std::size_t>(batch), threads, [&](std::size_t i) {
        const Trajectory traj =
            sample_trajectory(mdp, policy, horizon, lanes.stream(static_cast<std::uint64_t>(i)));
        samples[i] = truncated_return(traj, mdp);
    });

    ReturnEstimate out;
    out.value = Eigen::VectorXd::Zero(mdp.n_objectives());
    for (const auto& sample : samples) out.value += sample;
    out.value /= static_cast<double>(batch);
    out.batch_size = batch;
    out.horizon = horizon;
    return out;
}

MlmcPartials mlmc_partials(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                           const Scalarization& f, int horizon, int b_max,
                           const LaneBlock& level_lane, const LaneBlock& batch_lanes,
                           bool coupled_base, int threads) {
    if (b_max < 1) throw ConfigError("mlmc_partials: b_max must be at least 1");

    RngStream level_stream = level_lane.stream(0);
    const int level = level_stream.geometric_level();
    const long level_batch = level < 62 ? (1L << level) : -1;
    const bool truncated = level_batch < 0 || level_batch > b_max;

    MlmcPartials out;
    out.level_q = level;
    out.truncated = truncated;

    if (truncated) {
        const Trajectory traj = sample_trajectory(mdp, policy, horizon, batch_lanes.stream(0));
        out.partials = f.grad(truncated_return(traj, mdp));
        out.trajectories_used = 1;
        return out;
    }

    const long batch = level_batch;
    std::vector<Eigen::VectorXd> samples(batch);
    parallel_for(static_cast<std::size_t>(batch), threads, [&](std::size_t i) {
        const Trajectory traj = sample_trajectory(mdp, policy, horizon,
                                                  batch_lanes.stream(static_cast<std::uint64_t>(i)));
        samples[i] = truncated_return(traj, mdp);
    });

    Eigen::VectorXd half_sum = Eigen::VectorXd::Zero(mdp.n_objectives());
    for (long i = 0; i < batch / 2; ++i) half_sum += samples[i];
    Eigen::VectorXd full_sum = half_sum;
    for (long i = batch / 2; i < batch; ++i) full_sum += samples[i];

    Eigen::VectorXd base_return;
    long extra = 0;
    if (coupled_base) {
        base_return = samples[0];
    } else {
        const Trajectory traj = sample_trajectory(
            mdp, policy, horizon, batch_lanes.stream(static_cast<std::uint64_t>(batch)));
        base_return = truncated_return(traj, mdp);
        extra = 1;
    }

    const Eigen::VectorXd coarse = f.grad(half_sum / static_cast<double>(batch / 2));
    const Eigen::VectorXd fine = f.grad(full_sum / static_cast<double>(batch));
    out.partials = f.grad(base_return) + static_cast<double>(batch) * (fine - coarse);
    out.trajectories_used = batch + extra;
    return out;
}

Eigen::VectorXd reinforce_grad(const Trajectory& traj, const Eigen::VectorXd& partials,
                               const SoftmaxPolicy& policy, const TabularMdp& mdp) {
    if (partials.size() != mdp.n_objectives()) {
        throw ConfigError("reinforce_grad: partials size does not match the objective count");
    }
    if (!partials.allFinite()) {
        throw ConfigError("reinforce_grad: non-finite partials");
    }
    const int horizon = traj.horizon();
    const int M = mdp.n_objectives();

    // weight_t = sum_m partials_m * sum_{h>=t} gamma^h r_m(s_h, a_h), built
    // once as a reverse suffix scan.
    std::vector<double> weights(horizon, 0.0);
    Eigen::VectorXd suffix = Eigen::VectorXd::Zero(M);
    double discount_pow = std::pow(mdp.discount(), horizon - 1);
    for (int t = horizon - 1; t >= 0; --t) {
        const auto& [s, a] = traj.steps[t];
        for (int m = 0; m < M; ++m) suffix[m] += discount_pow * mdp.reward(m, s, a);
        weights[t] = partials.dot(suffix);
        discount_pow /= mdp.discount();
    }

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(policy.dim());
    for (int t = 0; t < horizon; ++t) {
        const auto& [s, a] = traj.steps[t];
        if (weights[t] != 0.0) policy.accumulate_score(s, a, weights[t], grad);
    }
    return grad;
}

Eigen::MatrixXd fisher_sample(const Trajectory& traj, const SoftmaxPolicy& policy, double gamma,
                              bool normalized) {
    const int d = policy.dim();
    const int A = policy.n_actions();
    Eigen::MatrixXd fisher = Eigen::MatrixXd::Zero(d, d);
    double weight = normalized ? (1.0 - gamma) : 1.0;
    for (const auto& [s, a] : traj.steps) {
        Eigen::VectorXd score = -policy.action_probs(s);
        score[a] += 1.0;
        fisher.block(s * A, s * A, A, A) += weight * score * score.transpose();
        weight *= gamma;
    }
    return fisher;
}

InnerBatch sample_inner_batch(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                              const Eigen::VectorXd& partials, int horizon, int batch,
                              const LaneBlock& lanes, bool fisher_normalized, int threads) {
    if (batch < 1) throw ConfigError("sample_inner_batch: batch must be at least 1");
    const int d = policy.dim();

    std::vector<Eigen::VectorXd> grads(batch);
    std::vector<Eigen::MatrixXd> fishers(batch);
    parallel_for(static_cast<std::size_t>(batch), threads, [&](std::size_t i) {
        const Trajectory traj =
            sample_trajectory(mdp, policy, horizon, lanes.stream(static_cast<std::uint64_t>(i)));
        grads[i] = reinforce_grad(traj, partials, policy, mdp);
        fishers[i] = fisher_sample(traj, policy, mdp.discount(), fisher_normalized);
    });

    InnerBatch out;
    out.grad_mean = Eigen::VectorXd::Zero(d);
    out.fisher_mean = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < batch; ++i) {
        out.grad_mean += grads[i];
        out.fisher_mean += fishers[i];
    }
    out.grad_mean /= static_cast<double>(batch);
    out.fisher_mean /= static_cast<double>(batch);
    return out;
}

} // namespace morl
