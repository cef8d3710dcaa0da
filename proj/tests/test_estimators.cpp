#include <doctest.h>

#include <cmath>
#include <map>

#include "morl/errors.hpp"
#include "morl/estimators.hpp"
#include "morl/instances.hpp"
#include "morl/oracle.hpp"
#include "test_support.hpp"

using namespace morl;

namespace {

Eigen::VectorXd vec2(double a, double b) {
    Eigen::VectorXd v(2);
    v << a, b;
    return v;
}

} // namespace

TEST_CASE("empirical return is exact when every trajectory is identical") {
    const TabularMdp mdp = instances::deterministic_single(0.5, 1);
    const SoftmaxPolicy policy(1, 1);
    for (int batch : {1, 3, 16}) {
        const ReturnEstimate est =
            empirical_return(mdp, policy, 3, batch, LaneBlock{9, 0, phase::kReturnBatch});
        CHECK(est.value[0] == doctest::Approx(1.75).epsilon(1e-15));
        CHECK(est.batch_size == batch);
    }
}

TEST_CASE("empirical return mean matches the truncated oracle within noise") {
    const TabularMdp mdp = instances::two_state_chain(0.9);
    Eigen::VectorXd theta(4);
    theta << 0.2, -0.5, 0.3, 0.1;
    const SoftmaxPolicy policy(theta, 2, 2);
    const int horizon = 5;
    const Eigen::VectorXd j_h = oracle::exact_returns_truncated(mdp, policy, horizon);

    const int reps = 40000;
    std::vector<double> draws(reps);
    for (int m = 0; m < 2; ++m) {
        for (int r = 0; r < reps; ++r) {
            const ReturnEstimate est = empirical_return(
                mdp, policy, horizon, 2,
                LaneBlock{77, static_cast<std::uint64_t>(r), phase::kReturnBatch});
            draws[r] = est.value[m];
        }
        const auto stat = testing::mean_std(draws);
        CHECK(std::abs(stat.mean - j_h[m]) <= 3.0 * stat.std_error + 1e-12);
    }
}

TEST_CASE("level draws follow the halving distribution") {
    std::map<int, long> histogram;
    const long draws = 200000;
    for (long i = 0; i < draws; ++i) {
        RngStream stream(31, Lane{static_cast<std::uint64_t>(i), phase::kMlmcLevelDraw, 0});
        ++histogram[stream.geometric_level()];
    }
    for (int q = 1; q <= 4; ++q) {
        const double expected = std::pow(0.5, q);
        const double observed = static_cast<double>(histogram[q]) / draws;
        const double sigma = std::sqrt(expected * (1.0 - expected) / draws);
        CHECK(std::abs(observed - expected) <= 4.0 * sigma);
    }
}

TEST_CASE("cap one always degenerates to the single-trajectory plug-in") {
    const TabularMdp mdp = instances::asymmetric_bandit(0.9);
    const SoftmaxPolicy policy(1, 2);
    const auto f = Scalarization::alpha_fair(2, 2.0, 0.05);
    for (int rep = 0; rep < 50; ++rep) {
        const LaneBlock level{5, static_cast<std::uint64_t>(rep), phase::kMlmcLevelDraw};
        const LaneBlock batch{5, static_cast<std::uint64_t>(rep), phase::kMlmcBatch};
        const MlmcPartials mp = mlmc_partials(mdp, policy, f, 2, 1, level, batch);
        CHECK(mp.truncated);
        CHECK(mp.trajectories_used == 1);
        const Trajectory expected_traj = sample_trajectory(mdp, policy, 2, batch.stream(0));
        const Eigen::VectorXd expected = f.grad(truncated_return(expected_traj, mdp));
        CHECK((mp.partials - expected).lpNorm<Eigen::Infinity>() == 0.0);
    }
}

TEST_CASE("telescoping differences vanish on deterministic returns") {
    const TabularMdp mdp = testing::equal_arm_bandit(0.5);
    const SoftmaxPolicy policy(1, 2);
    const auto f = Scalarization::alpha_fair(2, 2.0, 0.1);
    const Eigen::VectorXd expected = f.grad(oracle::exact_returns_truncated(mdp, policy, 3));
    for (int rep = 0; rep < 40; ++rep) {
        const MlmcPartials mp = mlmc_partials(
            mdp, policy, f, 3, 64, LaneBlock{11, static_cast<std::uint64_t>(rep), phase::kMlmcLevelDraw},
            LaneBlock{11, static_cast<std::uint64_t>(rep), phase::kMlmcBatch});
        CHECK((mp.partials - expected).lpNorm<Eigen::Infinity>() <= 1e-12);
        if (!mp.truncated) CHECK(mp.trajectories_used == (1L << mp.level_q));
    }
}

TEST_CASE("sampled level costs match the analytic expectation") {
    const TabularMdp mdp = instances::asymmetric_bandit(0.9);
    const SoftmaxPolicy policy(1, 2);
    const auto f = Scalarization::weighted_sum(vec2(1.0, 1.0));
    const int reps = 20000;
    std::vector<double> costs(reps);
    for (int r = 0; r < reps; ++r) {
        const MlmcPartials mp = mlmc_partials(
            mdp, policy, f, 1, 8, LaneBlock{3, static_cast<std::uint64_t>(r), phase::kMlmcLevelDraw},
            LaneBlock{3, static_cast<std::uint64_t>(r), phase::kMlmcBatch});
        costs[r] = static_cast<double>(mp.trajectories_used);
    }
    const auto stat = testing::mean_std(costs);
    CHECK(std::abs(stat.mean - 3.125) <= 3.0 * stat.std_error);
}

TEST_CASE("uncoupled base draws one extra trajectory") {
    const TabularMdp mdp = instances::asymmetric_bandit(0.9);
    const SoftmaxPolicy policy(1, 2);
    const auto f = Scalarization::weighted_sum(vec2(1.0, 1.0));
    for (int rep = 0; rep < 30; ++rep) {
        const LaneBlock level{13, static_cast<std::uint64_t>(rep), phase::kMlmcLevelDraw};
        const LaneBlock batch{13, static_cast<std::uint64_t>(rep), phase::kMlmcBatch};
        const MlmcPartials coupled = mlmc_partials(mdp, policy, f, 2, 16, level, batch, true);
        const MlmcPartials uncoupled = mlmc_partials(mdp, policy, f, 2, 16, level, batch, false);
        CHECK(coupled.level_q == uncoupled.level_q);
        if (!coupled.truncated) {
            CHECK(uncoupled.trajectories_used == coupled.trajectories_used + 1);
        }
        // Linear objectives are estimator-invariant: both reduce to the weights.
        CHECK((coupled.partials - uncoupled.partials).lpNorm<Eigen::Infinity>() <= 1e-14);
    }
}

TEST_CASE("zero partials or zero rewards give a zero gradient sample") {
    const TabularMdp mdp = instances::symmetric_bandit(0.9);
    const SoftmaxPolicy policy(1, 2);
    const Trajectory traj =
        sample_trajectory(mdp, policy, 5, RngStream(1, Lane{0, phase::kEval, 0}));
    CHECK(reinforce_grad(traj, Eigen::VectorXd::Zero(2), policy, mdp).norm() == 0.0);

    TabularMdp silent = instances::symmetric_bandit(0.9);
    for (int m = 0; m < 2; ++m) {
        for (int a = 0; a < 2; ++a) silent.set_reward(m, 0, a, 0.0);
    }
    CHECK(reinforce_grad(traj, vec2(1.0, 1.0), policy, silent).norm() == 0.0);
}

TEST_CASE("gradient samples satisfy the uniform norm bound") {
    const TabularMdp mdp = instances::two_state_chain(0.9);
    RngStream stream(41, Lane{0, 0, 0});
    for (int trial = 0; trial < 100; ++trial) {
        const SoftmaxPolicy policy(testing::random_vector(stream, 4, 2.0), 2, 2);
        const Eigen::VectorXd partials = testing::random_vector(stream, 2, 3.0);
        const Trajectory traj = sample_trajectory(
            mdp, policy, 30,
            RngStream(7, Lane{0, phase::kEval, static_cast<std::uint64_t>(trial)}));
        const double bound = partials.lpNorm<Eigen::Infinity>() * 2 *
                             SoftmaxPolicy::score_bound() / ((1.0 - 0.9) * (1.0 - 0.9));
        CHECK(reinforce_grad(traj, partials, policy, mdp).norm() <= bound + 1e-12);
    }
}

TEST_CASE("enumeration mean of gradient samples equals the sensitivity oracle") {
    const TabularMdp mdp = instances::two_state_chain(0.9);
    Eigen::VectorXd theta(4);
    theta << 0.1, -0.3, 0.4, 0.2;
    const SoftmaxPolicy policy(theta, 2, 2);
    const auto f = Scalarization::alpha_fair(2, 2.0, 0.1);
    const int horizon = 3;
    const Eigen::VectorXd partials =
        f.grad(oracle::exact_returns_truncated(mdp, policy, horizon));

    // Independent enumeration: walk every (state, action, successor) path and
    // average reinforce_grad directly.
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
    std::function<void(Trajectory&, int, double)> walk = [&](Trajectory& traj, int state,
                                                             double prob) {
        const Eigen::VectorXd action_probs = policy.action_probs(state);
        for (int a = 0; a < 2; ++a) {
            traj.steps.emplace_back(state, a);
            const double p_here = prob * action_probs[a];
            if (traj.horizon() == horizon) {
                mean += p_here * reinforce_grad(traj, partials, policy, mdp);
            } else {
                const Eigen::VectorXd next = mdp.transition_row(state, a);
                for (int sp = 0; sp < 2; ++sp) {
                    if (next[sp] > 0.0) walk(traj, sp, p_here * next[sp]);
                }
            }
            traj.steps.pop_back();
        }
    };
    Trajectory scratch;
    for (int s0 = 0; s0 < 2; ++s0) {
        if (mdp.initial_dist()[s0] > 0.0) walk(scratch, s0, mdp.initial_dist()[s0]);
    }

    const Eigen::VectorXd oracle_grad =
        oracle::exact_scalarized_gradient_truncated(mdp, policy, f, horizon);
    CHECK((mean - oracle_grad).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("single-step fisher sample is the scaled score outer product") {
    const SoftmaxPolicy policy(1, 2);
    const TabularMdp mdp = instances::symmetric_bandit(0.9);
    Trajectory traj;
    traj.steps = {{0, 0}};
    const Eigen::MatrixXd sample = fisher_sample(traj, policy, 0.9, true);
    Eigen::MatrixXd expected(2, 2);
    expected << 0.25, -0.25, -0.25, 0.25;
    expected *= (1.0 - 0.9);
    CHECK((sample - expected).lpNorm<Eigen::Infinity>() <= 1e-15);
}

TEST_CASE("fisher samples are positive semidefinite with bounded trace") {
    const TabularMdp mdp = instances::two_state_chain(0.9);
    RngStream stream(47, Lane{0, 0, 1});
    const int horizon = 20;
    const double g1_sq = 2.0;
    for (int trial = 0; trial < 50; ++trial) {
        const SoftmaxPolicy policy(testing::random_vector(stream, 4, 2.0), 2, 2);
        const Trajectory traj = sample_trajectory(
            mdp, policy, horizon,
            RngStream(8, Lane{0, phase::kEval, static_cast<std::uint64_t>(trial)}));
        const Eigen::MatrixXd normalized = fisher_sample(traj, policy, 0.9, true);
        const Eigen::MatrixXd raw = fisher_sample(traj, policy, 0.9, false);

        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normalized);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
        const double budget = (1.0 - std::pow(0.9, horizon)) / (1.0 - 0.9);
        CHECK(raw.trace() <= g1_sq * budget + 1e-12);
        CHECK(normalized.trace() <= g1_sq * (1.0 - std::pow(0.9, horizon)) + 1e-12);
    }
}

TEST_CASE("fisher sample mean approaches the exact occupancy-weighted matrix") {
    const TabularMdp mdp = instances::two_state_chain(0.9);
    Eigen::VectorXd theta(4);
    theta << 0.3, -0.1, 0.0, 0.4;
    const SoftmaxPolicy policy(theta, 2, 2);
    const Eigen::MatrixXd exact = oracle::exact_fisher(mdp, policy).matrix;

    const int horizon = 140;  // truncation bias ~ 2 * 0.9^140 ~ 8e-7
    const int reps = 30000;
    std::vector<Eigen::MatrixXd> samples(reps);
    for (int r = 0; r < reps; ++r) {
        const Trajectory traj = sample_trajectory(
            mdp, policy, horizon,
            RngStream(66, Lane{0, phase::kEval, static_cast<std::uint64_t>(r)}));
        samples[r] = fisher_sample(traj, policy, 0.9, true);
    }
    std::vector<double> entry(reps);
    for (int r0 = 0; r0 < 4; ++r0) {
        for (int c = r0; c < 4; ++c) {
            for (int r = 0; r < reps; ++r) entry[r] = samples[r](r0, c);
            const auto stat = testing::mean_std(entry);
            CHECK(std::abs(stat.mean - exact(r0, c)) <= 3.0 * stat.std_error + 1e-5);
        }
    }
}

TEST_CASE("batch return estimates are identical across thread counts") {
    const TabularMdp mdp = instances::two_state_chain(0.9);
    const SoftmaxPolicy policy(2, 2);
    const LaneBlock lanes{7, 2, phase::kReturnBatch};
    const ReturnEstimate serial = empirical_return(mdp, policy, 12, 33, lanes, 1);
    const ReturnEstimate parallel = empirical_return(mdp, policy, 12, 33, lanes, 4);
    CHECK(serial.value == parallel.value);
}

TEST_CASE("inner batches are identical across thread counts") {
    const TabularMdp mdp = instances::two_state_chain(0.9);
    const SoftmaxPolicy policy(2, 2);
    const Eigen::VectorXd partials = vec2(0.7, 0.3);
    const LaneBlock lanes{19, 4, phase::inner(2)};
    const InnerBatch serial = sample_inner_batch(mdp, policy, partials, 10, 32, lanes, true, 1);
    const InnerBatch parallel = sample_inner_batch(mdp, policy, partials, 10, 32, lanes, true, 8);
    CHECK(serial.grad_mean == parallel.grad_mean);
    CHECK(serial.fisher_mean == parallel.fisher_mean);
}
