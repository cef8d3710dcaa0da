#include "morl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "morl/errors.hpp"

namespace morl::oracle {

namespace {

constexpr double kResidualTol = 1e-10;
constexpr double kRankCutoffRel = 1e-10;

Eigen::MatrixXd policy_transition(const TabularMdp& mdp, const Eigen::MatrixXd& probs) {
    const int S = mdp.n_states();
    Eigen::MatrixXd p_pi = Eigen::MatrixXd::Zero(S, S);
    for (int a = 0; a < mdp.n_actions(); ++a) {
        p_pi += probs.col(a).asDiagonal() * mdp.transition_matrix(a);
    }
    return p_pi;
}

Eigen::VectorXd policy_reward(const TabularMdp& mdp, const Eigen::MatrixXd& probs,
                              int objective) {
    return (probs.array() * mdp.reward_matrix(objective).array()).rowwise().sum().matrix();
}

void check_policy_shape(const TabularMdp& mdp, const Eigen::MatrixXd& probs) {
    if (probs.rows() != mdp.n_states() || probs.cols() != mdp.n_actions()) {
        throw ConfigError("oracle: policy matrix does not match the mdp");
    }
}

} // namespace

ExactValues exact_values_probs(const TabularMdp& mdp, const Eigen::MatrixXd& probs) {
    check_policy_shape(mdp, probs);
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    const int M = mdp.n_objectives();
    const double gamma = mdp.discount();

    const Eigen::MatrixXd p_pi = policy_transition(mdp, probs);
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S) - gamma * p_pi;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);

    ExactValues out;
    out.returns.resize(M);
    out.state_values.resize(M, S);
    out.action_values.reserve(M);
    out.advantages.reserve(M);

    for (int m = 0; m < M; ++m) {
        const Eigen::VectorXd rbar = policy_reward(mdp, probs, m);
        const Eigen::VectorXd values = lu.solve(rbar);
        const double residual = (system * values - rbar).lpNorm<Eigen::Infinity>();
        if (residual > kResidualTol) {
            throw std::runtime_error("oracle: value solve residual " + std::to_string(residual));
        }
        out.state_values.row(m) = values.transpose();
        out.returns[m] = mdp.initial_dist().dot(values);

        Eigen::MatrixXd q(S, A);
        for (int a = 0; a < A; ++a) {
            q.col(a) = mdp.reward_matrix(m).col(a) + gamma * mdp.transition_matrix(a) * values;
        }
        out.action_values.push_back(q);
        out.advantages.push_back(q - values.replicate(1, A));
    }

    // d_rho solves the transposed system; occupancy splits it over actions.
    const Eigen::VectorXd flow = system.transpose().partialPivLu().solve(mdp.initial_dist());
    out.state_occupancy = (1.0 - gamma) * flow;
    const double occ_sum = out.state_occupancy.sum();
    if (std::abs(occ_sum - 1.0) > kResidualTol) {
        throw std::runtime_error("oracle: state occupancy sums to " + std::to_string(occ_sum));
    }
    out.occupancy = out.state_occupancy.asDiagonal() * probs;
    return out;
}

ExactValues exact_values(const TabularMdp& mdp, const SoftmaxPolicy& policy) {
    return exact_values_probs(mdp, policy.prob_matrix());
}

Eigen::MatrixXd forward_state_distributions(const TabularMdp& mdp, const Eigen::MatrixXd& probs,
                                            int horizon) {
    check_policy_shape(mdp, probs);
    if (horizon < 1) throw ConfigError("oracle: horizon must be at least 1");
    const Eigen::MatrixXd p_pi = policy_transition(mdp, probs);
    Eigen::MatrixXd dists(horizon, mdp.n_states());
    dists.row(0) = mdp.initial_dist().transpose();
    for (int t = 1; t < horizon; ++t) {
        dists.row(t) = dists.row(t - 1) * p_pi;
    }
    return dists;
}

Eigen::VectorXd exact_returns_truncated(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                                        int horizon) {
    const Eigen::MatrixXd probs = policy.prob_matrix();
    const Eigen::MatrixXd dists = forward_state_distributions(mdp, probs, horizon);
    const int M = mdp.n_objectives();
    Eigen::VectorXd totals = Eigen::VectorXd::Zero(M);
    for (int m = 0; m < M; ++m) {
        const Eigen::VectorXd rbar = policy_reward(mdp, probs, m);
        double weight = 1.0;
        for (int t = 0; t < horizon; ++t) {
            totals[m] += weight * dists.row(t).dot(rbar);
            weight *= mdp.discount();
        }
    }
    return totals;
}

Eigen::MatrixXd exact_return_gradients(const TabularMdp& mdp, const SoftmaxPolicy& policy) {
    const ExactValues values = exact_values(mdp, policy);
    const int d = policy.dim();
    const int M = mdp.n_objectives();
    Eigen::MatrixXd grads = Eigen::MatrixXd::Zero(d, M);
    Eigen::VectorXd column(d);
    for (int m = 0; m < M; ++m) {
        column.setZero();
        for (int s = 0; s < mdp.n_states(); ++s) {
            for (int a = 0; a < mdp.n_actions(); ++a) {
                const double weight = values.occupancy(s, a) * values.advantages[m](s, a);
                if (weight != 0.0) policy.accumulate_score(s, a, weight, column);
            }
        }
        grads.col(m) = column / (1.0 - mdp.discount());
    }
    return grads;
}

Eigen::MatrixXd exact_return_gradients_truncated(const TabularMdp& mdp,
                                                 const SoftmaxPolicy& policy, int horizon) {
    if (horizon < 1) throw ConfigError("oracle: horizon must be at least 1");
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    const int M = mdp.n_objectives();
    const int d = policy.dim();
    const double gamma = mdp.discount();
    const Eigen::MatrixXd probs = policy.prob_matrix();
    const Eigen::MatrixXd p_pi = policy_transition(mdp, probs);

    Eigen::MatrixXd rbar(S, M);
    for (int m = 0; m < M; ++m) rbar.col(m) = policy_reward(mdp, probs, m);

    // d rbar_m(u) / d theta_{u,b} = pi(b|u) (r_m(u,b) - rbar_m(u));
    // d P_pi(u,.) / d theta_{u,b} = pi(b|u) (P_b(u,.) - P_pi(u,.)).
    Eigen::VectorXd dist = mdp.initial_dist();
    Eigen::MatrixXd sensitivity = Eigen::MatrixXd::Zero(S, d);  // d dist(s) / d theta_j
    Eigen::MatrixXd grads = Eigen::MatrixXd::Zero(d, M);

    double weight = 1.0;
    for (int t = 0; t < horizon; ++t) {
        grads.noalias() += weight * sensitivity.transpose() * rbar;
        for (int u = 0; u < S; ++u) {
            for (int b = 0; b < A; ++b) {
                const int j = u * A + b;
                const double gate = dist[u] * probs(u, b);
                for (int m = 0; m < M; ++m) {
                    grads(j, m) += weight * gate * (mdp.reward(m, u, b) - rbar(u, m));
                }
            }
        }
        if (t + 1 == horizon) break;

        Eigen::MatrixXd next_sensitivity = p_pi.transpose() * sensitivity;
        for (int u = 0; u < S; ++u) {
            for (int b = 0; b < A; ++b) {
                const int j = u * A + b;
                const double gate = dist[u] * probs(u, b);
                if (gate == 0.0) continue;
                next_sensitivity.col(j) +=
                    gate * (mdp.transition_matrix(b).row(u) - p_pi.row(u)).transpose();
            }
        }
        sensitivity.swap(next_sensitivity);
        dist = p_pi.transpose() * dist;
        weight *= gamma;
    }
    return grads;
}

Eigen::VectorXd exact_scalarized_gradient(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                                          const Scalarization& f) {
    const ExactValues values = exact_values(mdp, policy);
    return exact_return_gradients(mdp, policy) * f.grad(values.returns);
}

Eigen::VectorXd exact_scalarized_gradient_truncated(const TabularMdp& mdp,
                                                    const SoftmaxPolicy& policy,
                                                    const Scalarization& f, int horizon) {
    const Eigen::VectorXd truncated = exact_returns_truncated(mdp, policy, horizon);
    return exact_return_gradients_truncated(mdp, policy, horizon) * f.grad(truncated);
}

// ---------------------------------------------------------------------------
// Fisher matrix and update direction.
// ---------------------------------------------------------------------------

Eigen::VectorXd FisherInfo::pseudo_solve(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        if (eigenvalues[i] > cutoff) {
            out += (eigenvectors.col(i).dot(v) / eigenvalues[i]) * eigenvectors.col(i);
        }
    }
    return out;
}

Eigen::VectorXd FisherInfo::project_range(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        if (eigenvalues[i] > cutoff) {
            out += eigenvectors.col(i).dot(v) * eigenvectors.col(i);
        }
    }
    return out;
}

FisherInfo exact_fisher(const TabularMdp& mdp, const SoftmaxPolicy& policy) {
    const ExactValues values = exact_values(mdp, policy);
    const int A = mdp.n_actions();
    const int d = policy.dim();

    // Scores are block-sparse per state, so the Fisher is block diagonal.
    Eigen::MatrixXd fisher = Eigen::MatrixXd::Zero(d, d);
    for (int s = 0; s < mdp.n_states(); ++s) {
        const Eigen::VectorXd probs = policy.action_probs(s);
        Eigen::MatrixXd block = Eigen::MatrixXd::Zero(A, A);
        for (int a = 0; a < A; ++a) {
            Eigen::VectorXd score = -probs;
            score[a] += 1.0;
            block += values.occupancy(s, a) * score * score.transpose();
        }
        fisher.block(s * A, s * A, A, A) = block;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fisher);
    if (eig.info() != Eigen::Success) {
        throw std::runtime_error("oracle: fisher eigendecomposition failed");
    }

    FisherInfo info;
    info.matrix = fisher;
    info.eigenvalues = eig.eigenvalues();
    info.eigenvectors = eig.eigenvectors();
    info.lambda_max = std::max(info.eigenvalues[info.eigenvalues.size() - 1], 0.0);
    info.cutoff = kRankCutoffRel * info.lambda_max;
    info.range_floor = 0.0;
    for (Eigen::Index i = 0; i < info.eigenvalues.size(); ++i) {
        if (info.eigenvalues[i] > info.cutoff) {
            info.range_floor = info.eigenvalues[i];
            break;
        }
    }
    return info;
}

Eigen::VectorXd exact_npg_direction(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                                    const Scalarization& f) {
    const FisherInfo fisher = exact_fisher(mdp, policy);
    const Eigen::VectorXd grad = exact_scalarized_gradient(mdp, policy, f);
    const Eigen::VectorXd direction = fisher.pseudo_solve(grad);
    const double residual = (fisher.matrix * direction - fisher.project_range(grad)).norm();
    if (residual > 1e-8) {
        throw std::runtime_error("oracle: pseudoinverse residual " + std::to_string(residual));
    }
    return direction;
}

// ---------------------------------------------------------------------------
// Exhaustive trajectory enumeration.
// ---------------------------------------------------------------------------

namespace {

struct PathAccumulator {
    const TabularMdp& mdp;
    const SoftmaxPolicy& policy;
    int horizon;
    Eigen::MatrixXd probs;  // policy matrix

    std::vector<std::pair<int, int>> steps;
    std::unordered_map<std::string, std::size_t> outcome_index;
    TrajectoryEnsemble ensemble;

    Eigen::MatrixXd grad_kernel;  // scratch, d x M

    explicit PathAccumulator(const TabularMdp& mdp_in, const SoftmaxPolicy& policy_in,
                             int horizon_in)
        : mdp(mdp_in), policy(policy_in), horizon(horizon_in), probs(policy_in.prob_matrix()) {
        const int d = policy.dim();
        const int M = mdp.n_objectives();
        ensemble.mean_return = Eigen::VectorXd::Zero(M);
        ensemble.mean_grad_kernel = Eigen::MatrixXd::Zero(d, M);
        ensemble.grad_kernel_moment = Eigen::MatrixXd::Zero(M, M);
        grad_kernel.resize(d, M);
        steps.reserve(horizon);
    }

    void visit_leaf(double prob) {
        Trajectory traj{steps};
        const Eigen::VectorXd ret = truncated_return(traj, mdp);

        // Column m of the kernel: sum_t score(s_t,a_t) * sum_{h>=t} gamma^h r_m.
        grad_kernel.setZero();
        const int M = mdp.n_objectives();
        Eigen::MatrixXd suffix(horizon, M);  // row t: sum_{h>=t} gamma^h r_m
        double weight = std::pow(mdp.discount(), horizon - 1);
        for (int t = horizon - 1; t >= 0; --t) {
            const auto& [s, a] = steps[t];
            for (int m = 0; m < M; ++m) {
                suffix(t, m) = weight * mdp.reward(m, s, a) + (t + 1 < horizon ? suffix(t + 1, m) : 0.0);
            }
            weight /= mdp.discount();
        }
        for (int t = 0; t < horizon; ++t) {
            const auto& [s, a] = steps[t];
            for (int m = 0; m < M; ++m) {
                if (suffix(t, m) != 0.0) {
                    policy.accumulate_score(s, a, suffix(t, m), grad_kernel.col(m));
                }
            }
        }

        ensemble.mean_return += prob * ret;
        ensemble.return_scatter += prob * ret.squaredNorm();
        ensemble.mean_grad_kernel += prob * grad_kernel;
        ensemble.grad_kernel_moment += prob * grad_kernel.transpose() * grad_kernel;

        std::string key(reinterpret_cast<const char*>(ret.data()), sizeof(double) * ret.size());
        auto [it, inserted] = outcome_index.try_emplace(key, ensemble.outcomes.size());
        if (inserted) {
            ensemble.outcomes.push_back(ret);
            ensemble.probs.push_back(prob);
        } else {
            ensemble.probs[it->second] += prob;
        }
    }

    void extend(int state, double prob, int t) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            const double p_step = prob * probs(state, a);
            if (p_step == 0.0) continue;
            steps.emplace_back(state, a);
            if (t + 1 == horizon) {
                visit_leaf(p_step);
            } else {
                const Eigen::VectorXd next = mdp.transition_row(state, a);
                for (int sp = 0; sp < mdp.n_states(); ++sp) {
                    if (next[sp] > 0.0) extend(sp, p_step * next[sp], t + 1);
                }
            }
            steps.pop_back();
        }
    }
};

} // namespace

TrajectoryEnsemble enumerate_trajectories(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                                          int horizon, double budget) {
    if (horizon < 1) throw ConfigError("enumerate_trajectories: horizon must be at least 1");
    const double paths =
        std::pow(static_cast<double>(mdp.n_states()) * mdp.n_actions(), horizon);
    if (paths > budget) {
        throw BudgetError("enumerate_trajectories: outcome space too large", paths);
    }

    PathAccumulator acc(mdp, policy, horizon);
    const Eigen::VectorXd& rho = mdp.initial_dist();
    for (int s = 0; s < mdp.n_states(); ++s) {
        if (rho[s] > 0.0) acc.extend(s, rho[s], 0);
    }
    acc.ensemble.return_scatter -= acc.ensemble.mean_return.squaredNorm();
    acc.ensemble.return_scatter = std::max(acc.ensemble.return_scatter, 0.0);
    return acc.ensemble;
}

namespace {

double composition_count(int batch, int n_outcomes) {
    // C(batch + n - 1, n - 1), computed in floating point for the budget check.
    double count = 1.0;
    for (int i = 1; i < n_outcomes; ++i) {
        count *= static_cast<double>(batch + i) / i;
        if (count > 1e18) return count;  // already hopeless
    }
    return count;
}

/// Walks all ways to split `count` draws over the outcome list; fn receives
/// the multinomial weight and the (undivided) sum of drawn return vectors.
void for_each_composition(const std::vector<double>& probs,
                          const std::vector<Eigen::VectorXd>& outcomes, int count,
                          const std::function<void(double, const Eigen::VectorXd&)>& fn) {
    const int n = static_cast<int>(probs.size());
    const int dim = n > 0 ? static_cast<int>(outcomes[0].size()) : 0;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
    if (count == 0) {
        fn(1.0, sum);
        return;
    }

    // rec(idx, remaining, weight): weight already includes the multinomial
    // factor and probabilities of outcomes < idx.
    std::function<void(int, int, double)> rec = [&](int idx, int remaining, double weight) {
        if (idx == n - 1) {
            fn(weight * std::pow(probs[idx], remaining), sum + remaining * outcomes[idx]);
            return;
        }
        // term(c) = C(remaining, c) p^c, built incrementally so no factorial
        // ever materializes on its own.
        double term = 1.0;
        Eigen::VectorXd saved = sum;
        for (int c = 0; c <= remaining; ++c) {
            if (c > 0) {
                term *= probs[idx] * static_cast<double>(remaining - c + 1) / c;
                sum += outcomes[idx];
            }
            rec(idx + 1, remaining - c, weight * term);
        }
        sum = saved;
    };
    rec(0, count, 1.0);
}

} // namespace

void for_each_batch_mean(const TrajectoryEnsemble& ensemble, int batch, double budget,
                         const std::function<void(double, const Eigen::VectorXd&)>& fn) {
    if (batch < 1) throw ConfigError("for_each_batch_mean: batch must be at least 1");
    const int n = static_cast<int>(ensemble.outcomes.size());
    const double count = composition_count(batch, n);
    if (count > budget) {
        throw BudgetError("for_each_batch_mean: composition count too large", count);
    }
    for_each_composition(ensemble.probs, ensemble.outcomes, batch,
                         [&](double weight, const Eigen::VectorXd& sum) {
                             fn(weight, sum / static_cast<double>(batch));
                         });
}

BatchExpectation enumerate_batch_expectation(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                                             const Scalarization& f, int horizon, int batch,
                                             double budget) {
    const TrajectoryEnsemble ensemble = enumerate_trajectories(mdp, policy, horizon, budget);
    const int M = mdp.n_objectives();

    BatchExpectation out;
    out.mean_partials = Eigen::VectorXd::Zero(M);
    out.partials_second_moment = Eigen::MatrixXd::Zero(M, M);
    out.return_mse = 0.0;

    for_each_batch_mean(ensemble, batch, budget, [&](double weight, const Eigen::VectorXd& j_hat) {
        const Eigen::VectorXd partials = f.grad(j_hat);
        out.mean_partials += weight * partials;
        out.partials_second_moment += weight * partials * partials.transpose();
        out.return_mse += weight * (j_hat - ensemble.mean_return).squaredNorm();
    });
    out.mean_grad = ensemble.mean_grad_kernel * out.mean_partials;
    return out;
}

double mlmc_expected_trajectories(int b_max) {
    if (b_max < 1) throw ConfigError("mlmc_expected_trajectories: b_max must be at least 1");
    int levels = 0;
    while ((1L << (levels + 1)) <= b_max) ++levels;
    return levels + std::pow(2.0, -levels);
}

MlmcExpectation enumerate_mlmc_expectation(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                                           const Scalarization& f, int horizon, int b_max,
                                           double budget) {
    if (b_max < 1) throw ConfigError("enumerate_mlmc_expectation: b_max must be at least 1");
    const TrajectoryEnsemble ensemble = enumerate_trajectories(mdp, policy, horizon, budget);
    const int n = static_cast<int>(ensemble.outcomes.size());
    const int M = mdp.n_objectives();

    int levels = 0;
    while ((1L << (levels + 1)) <= b_max) ++levels;

    // Joint term count across levels: the first trajectory, the rest of the
    // first half, and the second half enumerate independently.
    double total_terms = static_cast<double>(n);  // the truncation tail
    for (int q = 1; q <= levels; ++q) {
        const int half = 1 << (q - 1);
        total_terms +=
            static_cast<double>(n) * composition_count(half - 1, n) * composition_count(half, n);
    }
    if (total_terms > budget) {
        throw BudgetError("enumerate_mlmc_expectation: joint enumeration too large", total_terms);
    }

    MlmcExpectation out;
    out.mean_partials = Eigen::VectorXd::Zero(M);
    out.partials_second_moment = Eigen::MatrixXd::Zero(M, M);
    out.levels = levels;
    out.expected_trajectories = mlmc_expected_trajectories(b_max);

    auto accumulate = [&](double weight, const Eigen::VectorXd& estimate) {
        out.mean_partials += weight * estimate;
        out.partials_second_moment += weight * estimate * estimate.transpose();
    };

    for (int q = 1; q <= levels; ++q) {
        const double level_prob = std::pow(0.5, q);
        const int half = 1 << (q - 1);
        const double boost = static_cast<double>(1 << q);
        for (int first = 0; first < n; ++first) {
            const double p_first = ensemble.probs[first];
            if (p_first == 0.0) continue;
            const Eigen::VectorXd base = f.grad(ensemble.outcomes[first]);
            for_each_composition(
                ensemble.probs, ensemble.outcomes, half - 1,
                [&](double w_rest, const Eigen::VectorXd& sum_rest) {
                    const Eigen::VectorXd half_sum = ensemble.outcomes[first] + sum_rest;
                    const Eigen::VectorXd coarse = f.grad(half_sum / half);
                    for_each_composition(
                        ensemble.probs, ensemble.outcomes, half,
                        [&](double w_second, const Eigen::VectorXd& sum_second) {
                            const Eigen::VectorXd fine =
                                f.grad((half_sum + sum_second) / (2.0 * half));
                            accumulate(level_prob * p_first * w_rest * w_second,
                                       base + boost * (fine - coarse));
                        });
                });
        }
    }

    // Truncated levels: a single trajectory, plug-in only.
    const double tail_prob = std::pow(0.5, levels);
    for (int first = 0; first < n; ++first) {
        if (ensemble.probs[first] == 0.0) continue;
        accumulate(tail_prob * ensemble.probs[first], f.grad(ensemble.outcomes[first]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reference optimum.
// ---------------------------------------------------------------------------

namespace {

double eval_policy_value(const TabularMdp& mdp, const Scalarization& f,
                         const Eigen::MatrixXd& probs) {
    return f.value(exact_values_probs(mdp, probs).returns);
}

Eigen::MatrixXd bandit_probs(double p) {
    Eigen::MatrixXd probs(1, 2);
    probs << p, 1.0 - p;
    return probs;
}

} // namespace

ReferenceOptimum reference_optimum(const TabularMdp& mdp, const Scalarization& f,
                                   int grid_resolution) {
    if (grid_resolution < 1000) {
        throw ConfigError("reference_optimum: grid resolution must be at least 1000");
    }
    const int S = mdp.n_states();
    const int A = mdp.n_actions();

    if (S == 1 && A == 2) {
        // Returns are affine in the arm probability and f is concave, so the
        // 1-D restriction is concave: grid then ternary search.
        double best_p = 0.0;
        double best = -std::numeric_limits<double>::infinity();
        for (int i = 0; i <= grid_resolution; ++i) {
            const double p = static_cast<double>(i) / grid_resolution;
            const double value = eval_policy_value(mdp, f, bandit_probs(p));
            if (value > best) {
                best = value;
                best_p = p;
            }
        }
        double lo = std::max(0.0, best_p - 1.0 / grid_resolution);
        double hi = std::min(1.0, best_p + 1.0 / grid_resolution);
        while (hi - lo > 1e-9) {
            const double m1 = lo + (hi - lo) / 3.0;
            const double m2 = hi - (hi - lo) / 3.0;
            if (eval_policy_value(mdp, f, bandit_probs(m1)) <
                eval_policy_value(mdp, f, bandit_probs(m2))) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        const double p_star = 0.5 * (lo + hi);
        ReferenceOptimum out;
        out.policy_probs = bandit_probs(p_star);
        out.value = eval_policy_value(mdp, f, out.policy_probs);
        return out;
    }

    if (S == 1 && A == 3) {
        auto probs_of = [](double p0, double p1) {
            Eigen::MatrixXd probs(1, 3);
            probs << p0, p1, 1.0 - p0 - p1;
            return probs;
        };
        double best_p0 = 1.0 / 3, best_p1 = 1.0 / 3;
        double best = -std::numeric_limits<double>::infinity();
        // Coarser initial sweep, then zoom: full resolution on the 2-simplex
        // would be quadratic in grid_resolution.
        const int coarse = std::min(grid_resolution, 400);
        for (int i = 0; i <= coarse; ++i) {
            for (int j = 0; j + i <= coarse; ++j) {
                const double p0 = static_cast<double>(i) / coarse;
                const double p1 = static_cast<double>(j) / coarse;
                const double value = eval_policy_value(mdp, f, probs_of(p0, p1));
                if (value > best) {
                    best = value;
                    best_p0 = p0;
                    best_p1 = p1;
                }
            }
        }
        double window = 1.0 / coarse;
        for (int round = 0; round < 5; ++round) {
            const int steps = 20;
            double next_p0 = best_p0, next_p1 = best_p1;
            for (int i = -steps; i <= steps; ++i) {
                for (int j = -steps; j <= steps; ++j) {
                    const double p0 = best_p0 + window * i / steps;
                    const double p1 = best_p1 + window * j / steps;
                    if (p0 < 0.0 || p1 < 0.0 || p0 + p1 > 1.0) continue;
                    const double value = eval_policy_value(mdp, f, probs_of(p0, p1));
                    if (value > best) {
                        best = value;
                        next_p0 = p0;
                        next_p1 = p1;
                    }
                }
            }
            best_p0 = next_p0;
            best_p1 = next_p1;
            window /= steps;
        }
        ReferenceOptimum out;
        out.policy_probs = probs_of(best_p0, best_p1);
        out.value = best;
        return out;
    }

    if (S == 2 && A == 2) {
        auto probs_of = [](double p0, double p1) {
            Eigen::MatrixXd probs(2, 2);
            probs << p0, 1.0 - p0, p1, 1.0 - p1;
            return probs;
        };
        const int coarse = std::min(grid_resolution, 1000);
        double best_p0 = 0.5, best_p1 = 0.5;
        double best = -std::numeric_limits<double>::infinity();
        for (int i = 0; i <= coarse; ++i) {
            for (int j = 0; j <= coarse; ++j) {
                const double p0 = static_cast<double>(i) / coarse;
                const double p1 = static_cast<double>(j) / coarse;
                const double value = eval_policy_value(mdp, f, probs_of(p0, p1));
                if (value > best) {
                    best = value;
                    best_p0 = p0;
                    best_p1 = p1;
                }
            }
        }
        double window = 1.0 / coarse;
        for (int round = 0; round < 5; ++round) {
            const int steps = 20;
            double next_p0 = best_p0, next_p1 = best_p1;
            for (int i = -steps; i <= steps; ++i) {
                for (int j = -steps; j <= steps; ++j) {
                    const double p0 = std::clamp(best_p0 + window * i / steps, 0.0, 1.0);
                    const double p1 = std::clamp(best_p1 + window * j / steps, 0.0, 1.0);
                    const double value = eval_policy_value(mdp, f, probs_of(p0, p1));
                    if (value > best) {
                        best = value;
                        next_p0 = p0;
                        next_p1 = p1;
                    }
                }
            }
            best_p0 = next_p0;
            best_p1 = next_p1;
            window /= steps;
        }
        ReferenceOptimum out;
        out.policy_probs = probs_of(best_p0, best_p1);
        out.value = best;
        return out;
    }

    throw BudgetError("reference_optimum: unsupported mdp shape (" + std::to_string(S) +
                      " states, " + std::to_string(A) + " actions)");
}

} // namespace morl::oracle
