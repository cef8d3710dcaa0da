// Microbenchmarks for the sampling and oracle hot paths.

#include <benchmark/benchmark.h>

#include "morl/estimators.hpp"
#include "morl/instances.hpp"
#include "morl/oracle.hpp"

namespace {

using namespace morl;

const TabularMdp& chain() {
    static const TabularMdp mdp = instances::two_state_chain(0.9);
    return mdp;
}

const SoftmaxPolicy& chain_policy() {
    static const SoftmaxPolicy policy = [] {
        Eigen::VectorXd theta(4);
        theta << 0.3, -0.2, 0.1, 0.4;
        return SoftmaxPolicy(theta, 2, 2);
    }();
    return policy;
}

void bm_sample_trajectory(benchmark::State& state) {
    const int horizon = static_cast<int>(state.range(0));
    std::uint64_t i = 0;
    for (auto _ : state) {
        const Trajectory traj = sample_trajectory(chain(), chain_policy(), horizon,
                                                  RngStream(1, Lane{0, phase::kEval, i++}));
        benchmark::DoNotOptimize(traj.steps.data());
    }
    state.SetItemsProcessed(state.iterations() * horizon);
}
BENCHMARK(bm_sample_trajectory)->Arg(16)->Arg(64)->Arg(256);

void bm_reinforce_grad(benchmark::State& state) {
    const int horizon = static_cast<int>(state.range(0));
    const Trajectory traj = sample_trajectory(chain(), chain_policy(), horizon,
                                              RngStream(1, Lane{0, phase::kEval, 0}));
    Eigen::VectorXd partials(2);
    partials << 0.7, 0.4;
    for (auto _ : state) {
        const Eigen::VectorXd grad = reinforce_grad(traj, partials, chain_policy(), chain());
        benchmark::DoNotOptimize(grad.data());
    }
    state.SetItemsProcessed(state.iterations() * horizon);
}
BENCHMARK(bm_reinforce_grad)->Arg(16)->Arg(64)->Arg(256);

void bm_fisher_sample(benchmark::State& state) {
    const int horizon = static_cast<int>(state.range(0));
    const Trajectory traj = sample_trajectory(chain(), chain_policy(), horizon,
                                              RngStream(1, Lane{0, phase::kEval, 0}));
    for (auto _ : state) {
        const Eigen::MatrixXd sample = fisher_sample(traj, chain_policy(), 0.9, true);
        benchmark::DoNotOptimize(sample.data());
    }
}
BENCHMARK(bm_fisher_sample)->Arg(16)->Arg(64);

void bm_exact_values(benchmark::State& state) {
    for (auto _ : state) {
        const auto values = oracle::exact_values(chain(), chain_policy());
        benchmark::DoNotOptimize(values.returns.data());
    }
}
BENCHMARK(bm_exact_values);

void bm_mlmc_partials(benchmark::State& state) {
    const auto f = Scalarization::alpha_fair(2, 2.0, 0.5);
    std::uint64_t k = 0;
    for (auto _ : state) {
        const MlmcPartials mp =
            mlmc_partials(chain(), chain_policy(), f, 32, 64, LaneBlock{9, k, phase::kMlmcLevelDraw},
                          LaneBlock{9, k, phase::kMlmcBatch});
        benchmark::DoNotOptimize(mp.partials.data());
        ++k;
    }
}
BENCHMARK(bm_mlmc_partials);

void bm_enumerate_batch(benchmark::State& state) {
    const TabularMdp bandit = instances::asymmetric_bandit(0.9);
    const SoftmaxPolicy policy(1, 2);
    const auto f = Scalarization::alpha_fair(2, 2.0, 0.05);
    for (auto _ : state) {
        const auto exact = oracle::enumerate_batch_expectation(bandit, policy, f, 1, 64);
        benchmark::DoNotOptimize(exact.mean_partials.data());
    }
}
BENCHMARK(bm_enumerate_batch);

} // namespace

BENCHMARK_MAIN();
