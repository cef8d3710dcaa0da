#include "morl/policy.hpp"

#include <cmath>

#include "morl/errors.hpp"

namespace morl {

SoftmaxPolicy::SoftmaxPolicy(int n_states, int n_actions)
    : theta_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_states) * n_actions)),
      n_states_(n_states),
      n_actions_(n_actions) {
    if (n_states < 1 || n_actions < 1) {
        throw ConfigError("policy: n_states and n_actions must be positive");
    }
}

SoftmaxPolicy::SoftmaxPolicy(Eigen::VectorXd theta, int n_states, int n_actions)
    : theta_(std::move(theta)), n_states_(n_states), n_actions_(n_actions) {
    if (n_states < 1 || n_actions < 1) {
        throw ConfigError("policy: n_states and n_actions must be positive");
    }
    if (theta_.size() != static_cast<Eigen::Index>(n_states) * n_actions) {
        throw ConfigError("policy: theta has size " + std::to_string(theta_.size()) +
                          ", expected " + std::to_string(static_cast<long>(n_states) * n_actions));
    }
    if (!theta_.allFinite()) {
        throw ConfigError("policy: theta has non-finite entries");
    }
}

Eigen::VectorXd SoftmaxPolicy::action_probs(int state) const {
    const auto block = theta_.segment(static_cast<Eigen::Index>(state) * n_actions_, n_actions_);
    const double shift = block.maxCoeff();
    Eigen::VectorXd probs = (block.array() - shift).exp();
    probs /= probs.sum();
    return probs;
}

Eigen::MatrixXd SoftmaxPolicy::prob_matrix() const {
    Eigen::MatrixXd probs(n_states_, n_actions_);
    for (int s = 0; s < n_states_; ++s) {
        probs.row(s) = action_probs(s).transpose();
    }
    return probs;
}

Eigen::VectorXd SoftmaxPolicy::score(int state, int action) const {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta_.size());
    accumulate_score(state, action, 1.0, grad);
    return grad;
}

void SoftmaxPolicy::accumulate_score(int state, int action, double weight,
                                     Eigen::Ref<Eigen::VectorXd> acc) const {
    const Eigen::VectorXd probs = action_probs(state);
    auto block = acc.segment(static_cast<Eigen::Index>(state) * n_actions_, n_actions_);
    block.array() -= weight * probs.array();
    block[action] += weight;
}

SoftmaxPolicy SoftmaxPolicy::updated(double step, const Eigen::VectorXd& direction) const {
    if (direction.size() != theta_.size()) {
        throw ConfigError("policy update: direction has size " + std::to_string(direction.size()) +
                          ", expected " + std::to_string(theta_.size()));
    }
    if (!direction.allFinite()) {
        throw DivergenceError("policy update: non-finite direction", 0);
    }
    return SoftmaxPolicy(theta_ + step * direction, n_states_, n_actions_);
}

double SoftmaxPolicy::score_bound() { return std::sqrt(2.0); }

double SoftmaxPolicy::score_smoothness() { return 2.0; }

} // namespace morl
