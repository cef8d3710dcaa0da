#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "morl/mdp.hpp"
#include "morl/policy.hpp"
#include "morl/scalarization.hpp"

namespace morl::oracle {

/// Exact linear-algebra quantities of one (mdp, policy) pair.
///
/// V_m solves (I - gamma P_pi) V_m = rbar_m with the policy-averaged reward
/// rbar; Q_m = r_m + gamma P V_m; J_m = rho . V_m. The state occupancy is
/// d_rho = (1 - gamma) rho^T (I - gamma P_pi)^{-1} and the state-action
/// occupancy nu(s,a) = d_rho(s) pi(a|s). All linear systems are solved
/// directly and residual-checked to 1e-10.
struct ExactValues {
    Eigen::VectorXd returns;                 // J, size M
    Eigen::MatrixXd state_values;            // V, M x S
    std::vector<Eigen::MatrixXd> action_values;  // Q[m], S x A
    std::vector<Eigen::MatrixXd> advantages;     // A[m] = Q[m] - V[m], S x A
    Eigen::MatrixXd occupancy;               // nu, S x A, sums to 1
    Eigen::VectorXd state_occupancy;         // d_rho, size S
};

ExactValues exact_values(const TabularMdp& mdp, const SoftmaxPolicy& policy);

/// Same computation for an explicit row-stochastic policy matrix (S x A);
/// used by the reference-optimum grid, which searches over probabilities
/// rather than logits.
ExactValues exact_values_probs(const TabularMdp& mdp, const Eigen::MatrixXd& probs);

/// Distribution of s_t for t = 0..horizon-1 under the policy, one row per t.
Eigen::MatrixXd forward_state_distributions(const TabularMdp& mdp, const Eigen::MatrixXd& probs,
                                            int horizon);

/// Finite-horizon return vector J_H via the forward distribution recursion.
/// Satisfies ||J - J_H||_inf <= gamma^H / (1 - gamma).
Eigen::VectorXd exact_returns_truncated(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                                        int horizon);

/// d x M matrix whose column m is the exact gradient of J_m with respect to
/// theta, assembled from occupancy, advantages and scores.
Eigen::MatrixXd exact_return_gradients(const TabularMdp& mdp, const SoftmaxPolicy& policy);

/// Exact gradient of the finite-horizon returns, obtained by propagating the
/// parameter sensitivity of the state distribution through the forward
/// recursion. Independent of the score-function estimator path.
Eigen::MatrixXd exact_return_gradients_truncated(const TabularMdp& mdp,
                                                 const SoftmaxPolicy& policy, int horizon);

/// Chain-rule gradient sum_m df/dJ_m (J) * grad J_m of the scalarized
/// objective. Scalarization domain errors propagate.
Eigen::VectorXd exact_scalarized_gradient(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                                          const Scalarization& f);

/// Same against the truncated objective f(J_H).
Eigen::VectorXd exact_scalarized_gradient_truncated(const TabularMdp& mdp,
                                                    const SoftmaxPolicy& policy,
                                                    const Scalarization& f, int horizon);

/// Exact Fisher matrix F = sum_{s,a} nu(s,a) score(s,a) score(s,a)^T with its
/// eigendecomposition. The softmax-tabular Fisher is structurally singular
/// along per-state constant shifts of theta, so the pseudoinverse uses a rank
/// cutoff of 1e-10 * lambda_max; range_floor is the smallest retained
/// eigenvalue (the non-degeneracy constant on the quotient space).
struct FisherInfo {
    Eigen::MatrixXd matrix;
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXd eigenvectors;  // columns, same order
    double lambda_max = 0.0;
    double range_floor = 0.0;
    double cutoff = 0.0;

    /// F^dagger v restricted to the retained eigenspace.
    Eigen::VectorXd pseudo_solve(const Eigen::VectorXd& v) const;
    /// Projection of v onto the retained eigenspace.
    Eigen::VectorXd project_range(const Eigen::VectorXd& v) const;
};

FisherInfo exact_fisher(const TabularMdp& mdp, const SoftmaxPolicy& policy);

/// Exact update direction F^dagger grad f(J). Residual against the range
/// projection is checked to 1e-8.
Eigen::VectorXd exact_npg_direction(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                                    const Scalarization& f);

// ---------------------------------------------------------------------------
// Brute-force enumeration instruments.
// ---------------------------------------------------------------------------

/// Exhaustive enumeration of all length-H trajectories with their exact
/// probabilities, compressed to distinct return outcomes. Also carries the
/// exact moments of the per-trajectory gradient kernel G(tau) (the d x M
/// matrix with column m = sum_t score(s_t,a_t) * sum_{h>=t} gamma^h r_m),
/// so that the score-gradient estimator with fixed partials v is G(tau) v.
struct TrajectoryEnsemble {
    std::vector<double> probs;               // per distinct return outcome
    std::vector<Eigen::VectorXd> outcomes;   // distinct return vectors
    Eigen::VectorXd mean_return;             // == J_H
    double return_scatter = 0.0;             // E ||J(tau) - J_H||^2
    Eigen::MatrixXd mean_grad_kernel;        // E[G],     d x M
    Eigen::MatrixXd grad_kernel_moment;      // E[G^T G], M x M
};

TrajectoryEnsemble enumerate_trajectories(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                                          int horizon, double budget = 1e6);

/// Visits every B-sample batch mean reachable from the outcome set, weighted
/// by its multinomial probability: fn(weight, j_hat). The number of terms is
/// C(B + n - 1, n - 1) for n distinct outcomes; exceeding `budget` raises
/// BudgetError with the required count.
void for_each_batch_mean(const TrajectoryEnsemble& ensemble, int batch, double budget,
                         const std::function<void(double, const Eigen::VectorXd&)>& fn);

/// Exact expectations of the batch-B plug-in estimator.
struct BatchExpectation {
    Eigen::VectorXd mean_partials;           // E[df(J_hat_{H,B})]
    Eigen::MatrixXd partials_second_moment;  // E[df df^T], M x M
    double return_mse = 0.0;                 // E ||J_hat - J_H||^2
    Eigen::VectorXd mean_grad;               // E[g] = E[G] E[df] (independent lanes)
};

BatchExpectation enumerate_batch_expectation(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                                             const Scalarization& f, int horizon, int batch,
                                             double budget = 1e6);

/// Exact first and second moments of the level-randomized estimator with
/// nested coupling (the level-(q-1) mean reuses the first half of the level-q
/// sample, and the base term its first trajectory). The mean telescopes to
/// the batch-2^floor(log2 b_max) plug-in expectation.
struct MlmcExpectation {
    Eigen::VectorXd mean_partials;
    Eigen::MatrixXd partials_second_moment;
    double expected_trajectories = 0.0;  // analytic: J + 2^-J, J = floor(log2 b_max)
    int levels = 0;                      // J
};

MlmcExpectation enumerate_mlmc_expectation(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                                           const Scalarization& f, int horizon, int b_max,
                                           double budget = 1e6);

/// Analytic expected trajectory count of the truncated level draw.
double mlmc_expected_trajectories(int b_max);

// ---------------------------------------------------------------------------
// Reference optimum by grid search.
// ---------------------------------------------------------------------------

/// Best scalarized value over stochastic policies, by grid search on the
/// action-probability simplex with local refinement (ternary search on the
/// concave one-dimensional case). Supports 1-state MDPs with up to 3 actions
/// and 2-state MDPs with 2 actions; anything else is refused with
/// BudgetError. grid_resolution is points per dimension, at least 1000.
struct ReferenceOptimum {
    double value = 0.0;
    Eigen::MatrixXd policy_probs;  // S x A
};

ReferenceOptimum reference_optimum(const TabularMdp& mdp, const Scalarization& f,
                                   int grid_resolution = 2000);

} // namespace morl::oracle
