#include "morl/mdp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "morl/errors.hpp"

namespace morl {

namespace {
constexpr double kDistTolerance = 1e-12;
}

TabularMdp::TabularMdp(int n_states, int n_actions, int n_objectives, double discount)
    : n_states_(n_states),
      n_actions_(n_actions),
      n_objectives_(n_objectives),
      discount_(discount) {
    if (n_states < 1 || n_actions < 1 || n_objectives < 1) {
        throw ConfigError("mdp: state, action and objective counts must be positive");
    }
    if (!(discount > 0.0) || !(discount < 1.0)) {
        throw ConfigError("mdp: discount must lie in (0, 1)");
    }
    transitions_.assign(n_actions_, Eigen::MatrixXd::Zero(n_states_, n_states_));
    rewards_.assign(n_objectives_, Eigen::MatrixXd::Zero(n_states_, n_actions_));
    initial_dist_ = Eigen::VectorXd::Zero(n_states_);
    initial_dist_[0] = 1.0;
    // A fresh model self-loops everywhere until transitions are set.
    for (auto& p : transitions_) p.setIdentity(n_states_, n_states_);
}

void TabularMdp::set_transition(int state, int action, const Eigen::VectorXd& next_dist) {
    if (next_dist.size() != n_states_) {
        throw ConfigError("mdp: transition row has wrong length");
    }
    transitions_[action].row(state) = next_dist.transpose();
}

void TabularMdp::set_reward(int objective, int state, int action, double value) {
    rewards_[objective](state, action) = value;
}

void TabularMdp::set_initial_dist(const Eigen::VectorXd& rho) {
    if (rho.size() != n_states_) {
        throw ConfigError("mdp: initial distribution has wrong length");
    }
    initial_dist_ = rho;
}

Eigen::VectorXd TabularMdp::transition_row(int state, int action) const {
    return transitions_[action].row(state).transpose();
}

Eigen::VectorXd TabularMdp::reward_vector(int state, int action) const {
    Eigen::VectorXd r(n_objectives_);
    for (int m = 0; m < n_objectives_; ++m) r[m] = rewards_[m](state, action);
    return r;
}

std::vector<std::string> validate_mdp(const TabularMdp& mdp) {
    std::vector<std::string> violations;
    auto row_issue = [&](const Eigen::VectorXd& dist, const std::string& what) {
        if ((dist.array() < 0.0).any()) {
            violations.push_back(what + " has a negative entry");
            return;
        }
        const double sum = dist.sum();
        if (std::abs(sum - 1.0) > kDistTolerance) {
            std::ostringstream os;
            os << what << " sums to " << sum;
            violations.push_back(os.str());
        }
    };

    for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            std::ostringstream os;
            os << "row (s=" << s << ",a=" << a << ")";
            row_issue(mdp.transition_row(s, a), os.str());
        }
    }
    row_issue(mdp.initial_dist(), "initial distribution");

    for (int m = 0; m < mdp.n_objectives(); ++m) {
        for (int s = 0; s < mdp.n_states(); ++s) {
            for (int a = 0; a < mdp.n_actions(); ++a) {
                const double r = mdp.reward(m, s, a);
                if (!(r >= 0.0) || !(r <= 1.0)) {
                    std::ostringstream os;
                    os << "reward out of [0,1] at (m=" << m << ",s=" << s << ",a=" << a
                       << "): " << r;
                    violations.push_back(os.str());
                }
            }
        }
    }
    return violations;
}

Trajectory sample_trajectory(const TabularMdp& mdp, const SoftmaxPolicy& policy, int horizon,
                             RngStream stream) {
    if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions()) {
        throw ConfigError("sample_trajectory: policy dimensions do not match the mdp");
    }
    if (horizon < 1) {
        throw ConfigError("sample_trajectory: horizon must be at least 1");
    }

    Trajectory traj;
    traj.steps.reserve(horizon);

    const Eigen::VectorXd& rho = mdp.initial_dist();
    int state = stream.categorical({rho.data(), static_cast<std::size_t>(rho.size())});
    for (int t = 0; t < horizon; ++t) {
        const Eigen::VectorXd probs = policy.action_probs(state);
        const int action =
            stream.categorical({probs.data(), static_cast<std::size_t>(probs.size())});
        traj.steps.emplace_back(state, action);
        if (t + 1 < horizon) {
            const Eigen::VectorXd next = mdp.transition_row(state, action);
            state = stream.categorical({next.data(), static_cast<std::size_t>(next.size())});
        }
    }
    return traj;
}

Eigen::VectorXd truncated_return(const Trajectory& traj, const TabularMdp& mdp) {
    Eigen::VectorXd total = Eigen::VectorXd::Zero(mdp.n_objectives());
    double weight = 1.0;
    for (const auto& [state, action] : traj.steps) {
        for (int m = 0; m < mdp.n_objectives(); ++m) {
            total[m] += weight * mdp.reward(m, state, action);
        }
        weight *= mdp.discount();
    }
    return total;
}

// ---------------------------------------------------------------------------
// JSON model files.
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

TabularMdp mdp_from_json(const json& doc) {
    for (const char* key :
         {"n_states", "n_actions", "n_objectives", "gamma", "rho", "transitions", "rewards"}) {
        if (!doc.contains(key)) {
            throw ConfigError(std::string("mdp json: missing key '") + key + "'");
        }
    }
    const int n_states = doc["n_states"].get<int>();
    const int n_actions = doc["n_actions"].get<int>();
    const int n_objectives = doc["n_objectives"].get<int>();
    const double gamma = doc["gamma"].get<double>();

    TabularMdp mdp(n_states, n_actions, n_objectives, gamma);

    const auto& rho = doc["rho"];
    if (static_cast<int>(rho.size()) != n_states) {
        throw ConfigError("mdp json: rho has wrong length");
    }
    Eigen::VectorXd initial(n_states);
    for (int s = 0; s < n_states; ++s) initial[s] = rho[s].get<double>();
    mdp.set_initial_dist(initial);

    const auto& transitions = doc["transitions"];
    if (static_cast<int>(transitions.size()) != n_states) {
        throw ConfigError("mdp json: transitions must be indexed [state][action][next]");
    }
    for (int s = 0; s < n_states; ++s) {
        if (static_cast<int>(transitions[s].size()) != n_actions) {
            throw ConfigError("mdp json: transitions must be indexed [state][action][next]");
        }
        for (int a = 0; a < n_actions; ++a) {
            const auto& row = transitions[s][a];
            if (static_cast<int>(row.size()) != n_states) {
                throw ConfigError("mdp json: transition row has wrong length");
            }
            Eigen::VectorXd dist(n_states);
            for (int sp = 0; sp < n_states; ++sp) dist[sp] = row[sp].get<double>();
            mdp.set_transition(s, a, dist);
        }
    }

    const auto& rewards = doc["rewards"];
    if (static_cast<int>(rewards.size()) != n_objectives) {
        throw ConfigError("mdp json: rewards must be indexed [objective][state][action]");
    }
    for (int m = 0; m < n_objectives; ++m) {
        if (static_cast<int>(rewards[m].size()) != n_states) {
            throw ConfigError("mdp json: rewards must be indexed [objective][state][action]");
        }
        for (int s = 0; s < n_states; ++s) {
            const auto& row = rewards[m][s];
            if (static_cast<int>(row.size()) != n_actions) {
                throw ConfigError("mdp json: reward row has wrong length");
            }
            for (int a = 0; a < n_actions; ++a) {
                mdp.set_reward(m, s, a, row[a].get<double>());
            }
        }
    }

    const auto violations = validate_mdp(mdp);
    if (!violations.empty()) {
        std::string what = "mdp json: invalid model:";
        for (const auto& v : violations) what += "\n  " + v;
        throw ConfigError(what);
    }
    return mdp;
}

} // namespace

TabularMdp parse_mdp_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("mdp json: parse error: ") + e.what());
    }
    return mdp_from_json(doc);
}

TabularMdp load_mdp_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("mdp json: cannot open '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_mdp_json(buffer.str());
}

std::string mdp_to_json(const TabularMdp& mdp) {
    json doc;
    doc["n_states"] = mdp.n_states();
    doc["n_actions"] = mdp.n_actions();
    doc["n_objectives"] = mdp.n_objectives();
    doc["gamma"] = mdp.discount();
    doc["rho"] = std::vector<double>(mdp.initial_dist().data(),
                                     mdp.initial_dist().data() + mdp.n_states());

    json transitions = json::array();
    for (int s = 0; s < mdp.n_states(); ++s) {
        json per_action = json::array();
        for (int a = 0; a < mdp.n_actions(); ++a) {
            const Eigen::VectorXd row = mdp.transition_row(s, a);
            per_action.push_back(std::vector<double>(row.data(), row.data() + row.size()));
        }
        transitions.push_back(per_action);
    }
    doc["transitions"] = transitions;

    json rewards = json::array();
    for (int m = 0; m < mdp.n_objectives(); ++m) {
        json per_state = json::array();
        for (int s = 0; s < mdp.n_states(); ++s) {
            std::vector<double> row(mdp.n_actions());
            for (int a = 0; a < mdp.n_actions(); ++a) row[a] = mdp.reward(m, s, a);
            per_state.push_back(row);
        }
        rewards.push_back(per_state);
    }
    doc["rewards"] = rewards;
    return doc.dump(2);
}

void save_mdp_json(const TabularMdp& mdp, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("mdp json: cannot write '" + path + "'");
    }
    out << mdp_to_json(mdp) << '\n';
}

} // namespace morl
