#pragma once

#include <Eigen/Dense>

#include "morl/mdp.hpp"
#include "morl/policy.hpp"
#include "morl/rng.hpp"
#include "morl/scalarization.hpp"

namespace morl {

/// Batch-mean estimate of the truncated return vector:
/// component m = (1/B) sum_j sum_t gamma^t r_m(s_t^j, a_t^j).
/// Unbiased for J_H; trajectories are drawn on distinct lanes of `lanes`.
struct ReturnEstimate {
    Eigen::VectorXd value;  // J_hat, size M
    int batch_size = 0;
    int horizon = 0;
};

ReturnEstimate empirical_return(const TabularMdp& mdp, const SoftmaxPolicy& policy, int horizon,
                                int batch, const LaneBlock& lanes, int threads = 1);

/// Level-randomized estimate of the scalarization partials. Draws
/// Q with Pr(Q = q) = 2^-q; if 2^Q <= b_max, samples 2^Q trajectories and
/// returns df(J_hat_1) + 2^Q (df(J_hat_{2^Q}) - df(J_hat_{2^{Q-1}})), where
/// the level-(Q-1) mean uses the first half of the same trajectories and the
/// base term the first one (nested coupling). If 2^Q > b_max, one trajectory
/// is sampled and the single-sample plug-in is returned.
///
/// With coupled_base = false the base term draws one extra independent
/// trajectory; trajectories_used reports whatever was actually sampled.
struct MlmcPartials {
    Eigen::VectorXd partials;   // size M
    int level_q = 0;            // drawn level
    bool truncated = false;     // 2^Q > b_max
    long trajectories_used = 0;
};

MlmcPartials mlmc_partials(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                           const Scalarization& f, int horizon, int b_max,
                           const LaneBlock& level_lane, const LaneBlock& batch_lanes,
                           bool coupled_base = true, int threads = 1);

/// Score-function gradient estimate from one trajectory with fixed partials:
///   g = sum_t score(s_t, a_t) * sum_m partials_m * sum_{h >= t} gamma^h r_m(s_h, a_h).
/// The inner discount weight is gamma^h, not gamma^{h-t}. Suffix sums make
/// this O(H (M + A)) per trajectory.
Eigen::VectorXd reinforce_grad(const Trajectory& traj, const Eigen::VectorXd& partials,
                               const SoftmaxPolicy& policy, const TabularMdp& mdp);

/// One-trajectory Fisher estimate sum_t gamma^t score_t score_t^T, scaled by
/// (1 - gamma) when `normalized` (the occupancy-measure convention matched by
/// the exact Fisher). Positive semidefinite by construction.
Eigen::MatrixXd fisher_sample(const Trajectory& traj, const SoftmaxPolicy& policy, double gamma,
                              bool normalized);

/// One inner-loop step's batch: B fresh trajectories on distinct lanes, their
/// gradient samples (with the fixed partials) and Fisher samples averaged in
/// index order, so the result is independent of the thread count.
struct InnerBatch {
    Eigen::VectorXd grad_mean;    // size d
    Eigen::MatrixXd fisher_mean;  // d x d
};

InnerBatch sample_inner_batch(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                              const Eigen::VectorXd& partials, int horizon, int batch,
                              const LaneBlock& lanes, bool fisher_normalized, int threads = 1);

} // namespace morl
