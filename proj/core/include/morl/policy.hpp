#pragma once

#include <Eigen/Dense>

namespace morl {

/// Softmax-tabular policy: one logit per (state, action), stored state-major
/// (theta[s * n_actions + a]). Immutable value type; updates return copies.
///
/// pi(a|s) = exp(theta[s,a]) / sum_b exp(theta[s,b]), computed with
/// max-subtraction so extreme logits cannot overflow.
class SoftmaxPolicy {
public:
    SoftmaxPolicy(int n_states, int n_actions);
    SoftmaxPolicy(Eigen::VectorXd theta, int n_states, int n_actions);

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    int dim() const { return static_cast<int>(theta_.size()); }

    const Eigen::VectorXd& theta() const { return theta_; }

    /// Probability vector over actions in `state`; sums to 1 to 1e-12.
    Eigen::VectorXd action_probs(int state) const;

    /// Full matrix of action probabilities, one row per state.
    Eigen::MatrixXd prob_matrix() const;

    /// Score function: gradient of log pi(action|state) with respect to theta.
    /// Zero outside the state's block; within it, indicator(action) - pi(.|state).
    Eigen::VectorXd score(int state, int action) const;

    /// acc += weight * score(state, action), touching only the state's block.
    void accumulate_score(int state, int action, double weight, Eigen::Ref<Eigen::VectorXd> acc) const;

    /// New policy with theta + step * direction. Throws DivergenceError if the
    /// direction carries non-finite entries (a diverged inner loop).
    SoftmaxPolicy updated(double step, const Eigen::VectorXd& direction) const;

    /// Uniform bound on ||score||_2 for the softmax-tabular class:
    /// ||indicator - p||_2 <= sqrt(2) over the simplex.
    static double score_bound();

    /// Smoothness constant of the score map for this class (documented
    /// constant; feeds the theory-constant bundle, not runtime decisions).
    static double score_smoothness();

private:
    Eigen::VectorXd theta_;
    int n_states_;
    int n_actions_;
};

} // namespace morl
