#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "morl/mdp.hpp"
#include "morl/policy.hpp"
#include "morl/rng.hpp"

namespace morl::testing {

/// Central finite differences of a scalar function of theta.
inline Eigen::VectorXd finite_difference_gradient(
    const std::function<double(const Eigen::VectorXd&)>& fn, const Eigen::VectorXd& at,
    double step) {
    Eigen::VectorXd grad(at.size());
    for (Eigen::Index i = 0; i < at.size(); ++i) {
        Eigen::VectorXd hi = at, lo = at;
        hi[i] += step;
        lo[i] -= step;
        grad[i] = (fn(hi) - fn(lo)) / (2.0 * step);
    }
    return grad;
}

struct MeanStd {
    double mean = 0.0;
    double std_error = 0.0;  // of the mean
};

inline MeanStd mean_std(const std::vector<double>& samples) {
    MeanStd out;
    for (double x : samples) out.mean += x;
    out.mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (double x : samples) var += (x - out.mean) * (x - out.mean);
    var /= static_cast<double>(samples.size() - 1);
    out.std_error = std::sqrt(var / static_cast<double>(samples.size()));
    return out;
}

/// Uniform perturbation vector in [-scale, scale]^dim from a seeded stream.
inline Eigen::VectorXd random_vector(RngStream& stream, int dim, double scale) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = scale * (2.0 * stream.next_double() - 1.0);
    return v;
}

/// One-state two-action model whose reward is the same for both arms, so the
/// return of every trajectory is identical while the policy stays genuinely
/// stochastic.
inline TabularMdp equal_arm_bandit(double gamma) {
    TabularMdp mdp(1, 2, 2, gamma);
    Eigen::VectorXd loop(1);
    loop << 1.0;
    mdp.set_transition(0, 0, loop);
    mdp.set_transition(0, 1, loop);
    for (int a = 0; a < 2; ++a) {
        mdp.set_reward(0, 0, a, 1.0);
        mdp.set_reward(1, 0, a, 0.3);
    }
    Eigen::VectorXd rho(1);
    rho << 1.0;
    mdp.set_initial_dist(rho);
    return mdp;
}

} // namespace morl::testing
