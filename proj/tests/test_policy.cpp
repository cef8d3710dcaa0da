#include <doctest.h>

#include <cmath>

#include "morl/errors.hpp"
#include "morl/policy.hpp"
#include "test_support.hpp"

using namespace morl;

TEST_CASE("zero logits give the uniform policy") {
    const SoftmaxPolicy policy(1, 2);
    const Eigen::VectorXd probs = policy.action_probs(0);
    CHECK(probs[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(probs[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("logit gap ln(3) gives the 3:1 split") {
    Eigen::VectorXd theta(2);
    theta << std::log(3.0), 0.0;
    const SoftmaxPolicy policy(theta, 1, 2);
    const Eigen::VectorXd probs = policy.action_probs(0);
    CHECK(probs[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(probs[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("extreme logits stay finite through max subtraction") {
    Eigen::VectorXd theta(2);
    theta << 1000.0, 0.0;
    const SoftmaxPolicy policy(theta, 1, 2);
    const Eigen::VectorXd probs = policy.action_probs(0);
    CHECK(std::isfinite(probs[0]));
    CHECK(std::isfinite(probs[1]));
    CHECK(probs[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("probabilities sum to one for random logits") {
    RngStream stream(21, Lane{0, 0, 0});
    for (int trial = 0; trial < 200; ++trial) {
        const SoftmaxPolicy policy(testing::random_vector(stream, 6, 8.0), 2, 3);
        for (int s = 0; s < 2; ++s) {
            CHECK(std::abs(policy.action_probs(s).sum() - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("score of the uniform two-action policy") {
    const SoftmaxPolicy policy(2, 2);
    const Eigen::VectorXd score = policy.score(0, 0);
    CHECK(score[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(score[1] == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(score[2] == 0.0);
    CHECK(score[3] == 0.0);
    CHECK(score.norm() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("scores average to zero under the policy") {
    RngStream stream(33, Lane{0, 0, 1});
    for (int trial = 0; trial < 100; ++trial) {
        const SoftmaxPolicy policy(testing::random_vector(stream, 6, 5.0), 2, 3);
        for (int s = 0; s < 2; ++s) {
            const Eigen::VectorXd probs = policy.action_probs(s);
            Eigen::VectorXd mean = Eigen::VectorXd::Zero(6);
            for (int a = 0; a < 3; ++a) mean += probs[a] * policy.score(s, a);
            CHECK(mean.lpNorm<Eigen::Infinity>() <= 1e-12);
        }
    }
}

TEST_CASE("score matches central differences of log probabilities") {
    RngStream stream(55, Lane{0, 0, 2});
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::VectorXd theta = testing::random_vector(stream, 6, 2.0);
        const SoftmaxPolicy policy(theta, 2, 3);
        for (int s = 0; s < 2; ++s) {
            for (int a = 0; a < 3; ++a) {
                const Eigen::VectorXd numeric = testing::finite_difference_gradient(
                    [&](const Eigen::VectorXd& t) {
                        return std::log(SoftmaxPolicy(t, 2, 3).action_probs(s)[a]);
                    },
                    theta, 1e-5);
                CHECK((numeric - policy.score(s, a)).lpNorm<Eigen::Infinity>() <= 1e-6);
            }
        }
    }
}

TEST_CASE("score norms never exceed the class bound") {
    RngStream stream(77, Lane{0, 0, 3});
    double measured_max = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
        const SoftmaxPolicy policy(testing::random_vector(stream, 4, 12.0), 2, 2);
        const int s = static_cast<int>(stream.next_u64() % 2);
        const int a = static_cast<int>(stream.next_u64() % 2);
        measured_max = std::max(measured_max, policy.score(s, a).norm());
    }
    CHECK(measured_max <= SoftmaxPolicy::score_bound());
    // The bound is approached as the policy concentrates away from the action.
    CHECK(measured_max > 1.2);
}

TEST_CASE("per-state constant shifts leave the policy unchanged") {
    RngStream stream(91, Lane{0, 0, 4});
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::VectorXd theta = testing::random_vector(stream, 6, 4.0);
        const SoftmaxPolicy base(theta, 2, 3);
        Eigen::VectorXd shifted = theta;
        shifted.segment(0, 3).array() += 7.3;  // constant shift of state 0's block
        const SoftmaxPolicy moved(shifted, 2, 3);
        CHECK((base.action_probs(0) - moved.action_probs(0)).lpNorm<Eigen::Infinity>() <= 1e-12);
        CHECK((base.action_probs(1) - moved.action_probs(1)).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
}

TEST_CASE("updates with zero direction or zero step change nothing") {
    const SoftmaxPolicy policy(2, 2);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
    CHECK(policy.updated(1.0, zero).theta() == policy.theta());

    Eigen::VectorXd dir(4);
    dir << 1.0, -2.0, 0.5, 0.0;
    CHECK(policy.updated(0.0, dir).theta() == policy.theta());
}

TEST_CASE("a basis-vector update moves one coordinate") {
    const SoftmaxPolicy policy(2, 2);
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(4);
    dir[0] = 1.0;
    const SoftmaxPolicy next = policy.updated(1.0, dir);
    CHECK(next.theta()[0] == 1.0);
    CHECK(next.theta().tail(3).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("non-finite directions are rejected as divergence") {
    const SoftmaxPolicy policy(1, 2);
    Eigen::VectorXd dir(2);
    dir << std::numeric_limits<double>::quiet_NaN(), 0.0;
    CHECK_THROWS_AS(policy.updated(0.1, dir), DivergenceError);
}
