#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "morl/policy.hpp"
#include "morl/rng.hpp"

namespace morl {

/// Finite MDP with M reward channels. Transitions are stored as one S x S
/// matrix per action (row = current state); rewards as one S x A matrix per
/// objective, with entries in [0, 1]. The horizon is never part of the model:
/// it is a parameter of sampling.
class TabularMdp {
public:
    TabularMdp(int n_states, int n_actions, int n_objectives, double discount);

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    int n_objectives() const { return n_objectives_; }
    double discount() const { return discount_; }

    void set_transition(int state, int action, const Eigen::VectorXd& next_dist);
    void set_reward(int objective, int state, int action, double value);
    void set_initial_dist(const Eigen::VectorXd& rho);

    /// Row-distribution over successor states for (state, action).
    Eigen::VectorXd transition_row(int state, int action) const;
    /// S x S transition matrix of a fixed action.
    const Eigen::MatrixXd& transition_matrix(int action) const { return transitions_[action]; }
    /// S x A reward table of one objective.
    const Eigen::MatrixXd& reward_matrix(int objective) const { return rewards_[objective]; }
    double reward(int objective, int state, int action) const {
        return rewards_[objective](state, action);
    }
    const Eigen::VectorXd& initial_dist() const { return initial_dist_; }

    /// Reward vector across objectives at (state, action).
    Eigen::VectorXd reward_vector(int state, int action) const;

private:
    int n_states_;
    int n_actions_;
    int n_objectives_;
    double discount_;
    std::vector<Eigen::MatrixXd> transitions_;  // per action, S x S
    std::vector<Eigen::MatrixXd> rewards_;      // per objective, S x A
    Eigen::VectorXd initial_dist_;
};

/// Invariant check. Violations are data, not failures: the list is empty iff
/// the model is valid, and each entry names the offending index and rule.
std::vector<std::string> validate_mdp(const TabularMdp& mdp);

/// One sampled rollout of fixed length.
struct Trajectory {
    std::vector<std::pair<int, int>> steps;  // (state, action)

    int horizon() const { return static_cast<int>(steps.size()); }
};

/// Rolls out `horizon` steps: s0 ~ rho, a_t ~ pi(.|s_t), s_{t+1} ~ P(.|s_t, a_t).
/// Deterministic given the stream. Throws ConfigError on a policy/mdp
/// dimension mismatch.
Trajectory sample_trajectory(const TabularMdp& mdp, const SoftmaxPolicy& policy, int horizon,
                             RngStream stream);

/// Discounted reward sums along the trajectory, one component per objective:
/// component m = sum_t gamma^t r_m(s_t, a_t).
Eigen::VectorXd truncated_return(const Trajectory& traj, const TabularMdp& mdp);

/// JSON file format: keys n_states, n_actions, n_objectives, gamma,
/// rho (array), transitions ([s][a][s']), rewards ([m][s][a]). The loader
/// validates and throws ConfigError on any violation.
TabularMdp load_mdp_json(const std::string& path);
TabularMdp parse_mdp_json(const std::string& text);
std::string mdp_to_json(const TabularMdp& mdp);
void save_mdp_json(const TabularMdp& mdp, const std::string& path);

} // namespace morl
