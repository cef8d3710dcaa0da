#include "morl/scalarization.hpp"

#include <cmath>

#include <json.hpp>

#include "morl/errors.hpp"
#include "morl/policy.hpp"

namespace morl {

namespace {

void check_domain(const Eigen::VectorXd& returns, int n_objectives) {
    if (returns.size() != n_objectives) {
        throw ConfigError("scalarization: return vector has size " +
                          std::to_string(returns.size()) + ", expected " +
                          std::to_string(n_objectives));
    }
    if (!returns.allFinite()) {
        throw DomainError("scalarization: non-finite return vector");
    }
}

} // namespace

Scalarization Scalarization::weighted_sum(Eigen::VectorXd weights) {
    if (weights.size() < 1) throw ConfigError("weighted_sum: empty weight vector");
    if ((weights.array() < 0.0).any()) {
        throw ConfigError("weighted_sum: weights must be nonnegative");
    }
    Scalarization f;
    f.family_ = Family::kWeightedSum;
    f.n_objectives_ = static_cast<int>(weights.size());
    f.weights_ = std::move(weights);
    return f;
}

Scalarization Scalarization::alpha_fair(int n_objectives, double alpha, double floor) {
    if (n_objectives < 1) throw ConfigError("alpha_fair: need at least one objective");
    if (!(alpha > 0.0) || alpha == 1.0) {
        throw ConfigError("alpha_fair: alpha must be positive and different from 1");
    }
    if (!(floor > 0.0)) throw ConfigError("alpha_fair: floor must be positive");
    Scalarization f;
    f.family_ = Family::kAlphaFair;
    f.n_objectives_ = n_objectives;
    f.alpha_ = alpha;
    f.floor_ = floor;
    return f;
}

Scalarization Scalarization::kinked_quadratic(Eigen::VectorXd kinks, double scale) {
    if (kinks.size() < 1) throw ConfigError("kinked_quadratic: empty kink vector");
    if (!(scale > 0.0)) throw ConfigError("kinked_quadratic: scale must be positive");
    Scalarization f;
    f.family_ = Family::kKinkedQuadratic;
    f.n_objectives_ = static_cast<int>(kinks.size());
    f.kinks_ = std::move(kinks);
    f.scale_ = scale;
    return f;
}

const char* Scalarization::family_name() const {
    switch (family_) {
        case Family::kWeightedSum: return "weighted_sum";
        case Family::kAlphaFair: return "alpha_fair";
        case Family::kKinkedQuadratic: return "kinked_quadratic";
    }
    return "unknown";
}

double Scalarization::domain_floor() const {
    return family_ == Family::kAlphaFair ? floor_ : 0.0;
}

double Scalarization::value(const Eigen::VectorXd& returns) const {
    check_domain(returns, n_objectives_);
    switch (family_) {
        case Family::kWeightedSum:
            return weights_.dot(returns);
        case Family::kAlphaFair: {
            if ((returns.array() < 0.0).any()) {
                throw DomainError("alpha_fair: negative return component");
            }
            double total = 0.0;
            for (int m = 0; m < n_objectives_; ++m) {
                const double x = std::max(returns[m], floor_);
                total += std::pow(x, 1.0 - alpha_) / (1.0 - alpha_);
            }
            return total;
        }
        case Family::kKinkedQuadratic: {
            double total = 0.0;
            for (int m = 0; m < n_objectives_; ++m) {
                const double excess = std::max(returns[m] - kinks_[m], 0.0);
                total -= 0.5 * scale_ * excess * excess;
            }
            return total;
        }
    }
    return 0.0;
}

Eigen::VectorXd Scalarization::grad(const Eigen::VectorXd& returns) const {
    check_domain(returns, n_objectives_);
    Eigen::VectorXd partials(n_objectives_);
    switch (family_) {
        case Family::kWeightedSum:
            partials = weights_;
            break;
        case Family::kAlphaFair: {
            if ((returns.array() < 0.0).any()) {
                throw DomainError("alpha_fair: negative return component");
            }
            for (int m = 0; m < n_objectives_; ++m) {
                partials[m] = std::pow(std::max(returns[m], floor_), -alpha_);
            }
            break;
        }
        case Family::kKinkedQuadratic:
            for (int m = 0; m < n_objectives_; ++m) {
                partials[m] = -scale_ * std::max(returns[m] - kinks_[m], 0.0);
            }
            break;
    }
    return partials;
}

TheoryConstants Scalarization::constants(double gamma) const {
    if (!(gamma > 0.0) || !(gamma < 1.0)) {
        throw ConfigError("constants: gamma must lie in (0, 1)");
    }
    const double box_top = 1.0 / (1.0 - gamma);
    TheoryConstants c;
    c.n_objectives = n_objectives_;
    c.score_bound = SoftmaxPolicy::score_bound();
    c.score_smoothness = SoftmaxPolicy::score_smoothness();

    switch (family_) {
        case Family::kWeightedSum:
            c.partial_bound = weights_.maxCoeff();
            c.partial_lipschitz = 0.0;
            c.partial_smoothness = 0.0;
            break;
        case Family::kAlphaFair: {
            // Partials x^-alpha peak at the domain floor.
            const double lo = std::min(floor_, box_top);
            c.partial_bound = std::pow(lo, -alpha_);
            c.partial_lipschitz = alpha_ * std::pow(lo, -alpha_ - 1.0);
            c.partial_smoothness = alpha_ * (alpha_ + 1.0) * std::pow(lo, -alpha_ - 2.0);
            break;
        }
        case Family::kKinkedQuadratic: {
            double worst = 0.0;
            for (int m = 0; m < n_objectives_; ++m) {
                worst = std::max(worst, box_top - kinks_[m]);
            }
            c.partial_bound = scale_ * std::max(worst, 0.0);
            c.partial_lipschitz = scale_;
            c.partial_smoothness.reset();  // the kink breaks differentiability
            break;
        }
    }
    c.objective_smoothness = static_cast<double>(n_objectives_) * c.partial_bound *
                             c.score_smoothness / ((1.0 - gamma) * (1.0 - gamma));
    c.fisher_floor = 0.0;
    return c;
}

// ---------------------------------------------------------------------------
// JSON config block.
// ---------------------------------------------------------------------------

Scalarization Scalarization::from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("scalarization json: parse error: ") + e.what());
    }
    if (!doc.contains("family")) {
        throw ConfigError("scalarization json: missing 'family'");
    }
    const std::string family = doc["family"].get<std::string>();
    if (family == "weighted_sum") {
        if (!doc.contains("weights")) throw ConfigError("weighted_sum: missing 'weights'");
        const auto& w = doc["weights"];
        Eigen::VectorXd weights(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) weights[i] = w[i].get<double>();
        return weighted_sum(std::move(weights));
    }
    if (family == "alpha_fair") {
        if (!doc.contains("alpha")) throw ConfigError("alpha_fair: missing 'alpha'");
        if (!doc.contains("n_objectives")) throw ConfigError("alpha_fair: missing 'n_objectives'");
        const int m = doc["n_objectives"].get<int>();
        const double alpha = doc["alpha"].get<double>();
        if (!doc.contains("delta")) throw ConfigError("alpha_fair: missing 'delta'");
        return alpha_fair(m, alpha, doc["delta"].get<double>());
    }
    if (family == "kinked_quadratic") {
        if (!doc.contains("kinks")) throw ConfigError("kinked_quadratic: missing 'kinks'");
        const auto& k = doc["kinks"];
        Eigen::VectorXd kinks(k.size());
        for (std::size_t i = 0; i < k.size(); ++i) kinks[i] = k[i].get<double>();
        const double kappa = doc.value("kappa", 1.0);
        return kinked_quadratic(std::move(kinks), kappa);
    }
    throw ConfigError("scalarization json: unknown family '" + family + "'");
}

std::string Scalarization::to_json() const {
    nlohmann::json doc;
    doc["family"] = family_name();
    switch (family_) {
        case Family::kWeightedSum:
            doc["weights"] = std::vector<double>(weights_.data(), weights_.data() + weights_.size());
            break;
        case Family::kAlphaFair:
            doc["n_objectives"] = n_objectives_;
            doc["alpha"] = alpha_;
            doc["delta"] = floor_;
            break;
        case Family::kKinkedQuadratic:
            doc["kinks"] = std::vector<double>(kinks_.data(), kinks_.data() + kinks_.size());
            doc["kappa"] = scale_;
            break;
    }
    return doc.dump();
}

} // namespace morl
