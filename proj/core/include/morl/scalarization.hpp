#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

namespace morl {

/// Constants of the objective and policy class on the feasible return box
/// [domain_floor, 1/(1-gamma)]^M. All are supremum bounds over that box.
struct TheoryConstants {
    int n_objectives = 0;            // M
    double partial_bound = 0.0;      // C: sup |d f / d J_m|
    double partial_lipschitz = 0.0;  // L_f: Lipschitz constant of each partial
    std::optional<double> partial_smoothness;  // L_2f: set iff partials are differentiable
    double score_bound = 0.0;        // G1
    double score_smoothness = 0.0;   // G2
    double objective_smoothness = 0.0;  // L_J = M * C * G2 / (1-gamma)^2
    double fisher_floor = 0.0;       // mu: measured range-space floor, filled by the caller
};

/// Concave utility over return vectors. Three families:
///
///   weighted_sum      f(J) = sum_m w_m J_m                      (linear)
///   alpha_fair        f(J) = sum_m J_m^(1-a) / (1-a),  a != 1   (smooth partials)
///   kinked_quadratic  f(J) = -sum_m (kappa/2) max(J_m - c_m, 0)^2
///
/// The kinked family has Lipschitz but not differentiable partials; it is the
/// canonical instance where plug-in gradient bias decays only as 1/sqrt(B).
///
/// alpha_fair clamps each J_m to max(J_m, floor) before evaluating, keeping
/// early-training estimates in-domain while leaving the gradient field
/// untouched wherever returns genuinely exceed the floor. Strictly negative
/// or non-finite components are rejected as domain errors.
class Scalarization {
public:
    enum class Family { kWeightedSum, kAlphaFair, kKinkedQuadratic };

    static Scalarization weighted_sum(Eigen::VectorXd weights);
    static Scalarization alpha_fair(int n_objectives, double alpha, double floor);
    static Scalarization kinked_quadratic(Eigen::VectorXd kinks, double scale);

    /// Default alpha-fair floor: 5% of the per-objective return range.
    static double default_alpha_fair_floor(double gamma) { return 0.05 / (1.0 - gamma); }

    Family family() const { return family_; }
    int n_objectives() const { return n_objectives_; }
    const char* family_name() const;

    double value(const Eigen::VectorXd& returns) const;
    Eigen::VectorXd grad(const Eigen::VectorXd& returns) const;

    /// Constants on [domain_floor(), 1/(1-gamma)]^M, with the policy-class
    /// score constants filled in. fisher_floor is left 0: it is a measured
    /// quantity, not a family property.
    TheoryConstants constants(double gamma) const;

    /// Lower edge of the declared domain box (the clamp floor for alpha_fair,
    /// 0 otherwise).
    double domain_floor() const;

    double alpha() const { return alpha_; }
    double floor() const { return floor_; }
    double scale() const { return scale_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    const Eigen::VectorXd& kinks() const { return kinks_; }

    /// Config block: {"family": "alpha_fair"|"weighted_sum"|"kinked_quadratic",
    /// "alpha": ..., "delta": ..., "weights": [...], "kinks": [...], "kappa": ...}.
    static Scalarization from_json(const std::string& text);
    std::string to_json() const;

private:
    Scalarization() = default;

    Family family_ = Family::kWeightedSum;
    int n_objectives_ = 0;
    double alpha_ = 0.0;
    double floor_ = 0.0;
    double scale_ = 0.0;
    Eigen::VectorXd weights_;
    Eigen::VectorXd kinks_;
};

} // namespace morl
