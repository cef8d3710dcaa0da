#include "morl/instances.hpp"

namespace morl::instances {

namespace {

TabularMdp bandit(double gamma, const Eigen::MatrixXd& arm_rewards) {
    // arm_rewards: one row per arm, one column per objective.
    const int n_actions = static_cast<int>(arm_rewards.rows());
    const int n_objectives = static_cast<int>(arm_rewards.cols());
    TabularMdp mdp(1, n_actions, n_objectives, gamma);
    Eigen::VectorXd loop(1);
    loop << 1.0;
    for (int a = 0; a < n_actions; ++a) {
        mdp.set_transition(0, a, loop);
        for (int m = 0; m < n_objectives; ++m) {
            mdp.set_reward(m, 0, a, arm_rewards(a, m));
        }
    }
    Eigen::VectorXd rho(1);
    rho << 1.0;
    mdp.set_initial_dist(rho);
    return mdp;
}

} // namespace

TabularMdp symmetric_bandit(double gamma) {
    Eigen::MatrixXd arms(2, 2);
    arms << 1.0, 0.0,  //
        0.0, 1.0;
    return bandit(gamma, arms);
}

TabularMdp asymmetric_bandit(double gamma) {
    // Moderate contrast keeps small batch means inside the smooth region of
    // the utilities, so measured decay rates reflect the asymptotic regime
    // rather than rare-outcome transients.
    Eigen::MatrixXd arms(2, 2);
    arms << 0.9, 0.3,  //
        0.45, 0.8;
    return bandit(gamma, arms);
}

TabularMdp two_state_chain(double gamma) {
    TabularMdp mdp(2, 2, 2, gamma);

    Eigen::VectorXd row(2);
    // Action 0 holds, action 1 switches (with some slip).
    row << 0.9, 0.1;
    mdp.set_transition(0, 0, row);
    row << 0.2, 0.8;
    mdp.set_transition(0, 1, row);
    row << 0.1, 0.9;
    mdp.set_transition(1, 0, row);
    row << 0.8, 0.2;
    mdp.set_transition(1, 1, row);

    // Channel 0 pays in state 0, channel 1 in state 1; staying put pays best.
    mdp.set_reward(0, 0, 0, 1.0);
    mdp.set_reward(0, 0, 1, 0.6);
    mdp.set_reward(0, 1, 0, 0.05);
    mdp.set_reward(0, 1, 1, 0.1);
    mdp.set_reward(1, 0, 0, 0.05);
    mdp.set_reward(1, 0, 1, 0.15);
    mdp.set_reward(1, 1, 0, 0.9);
    mdp.set_reward(1, 1, 1, 0.5);

    Eigen::VectorXd rho(2);
    rho << 0.7, 0.3;
    mdp.set_initial_dist(rho);
    return mdp;
}

TabularMdp deterministic_single(double gamma, int n_objectives) {
    TabularMdp mdp(1, 1, n_objectives, gamma);
    Eigen::VectorXd loop(1);
    loop << 1.0;
    mdp.set_transition(0, 0, loop);
    for (int m = 0; m < n_objectives; ++m) mdp.set_reward(m, 0, 0, 1.0);
    Eigen::VectorXd rho(1);
    rho << 1.0;
    mdp.set_initial_dist(rho);
    return mdp;
}

} // namespace morl::instances
