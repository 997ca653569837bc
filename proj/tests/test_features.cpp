#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fqilog/features.hpp"
#include "fqilog/rng.hpp"

using namespace fqilog;

namespace {

FourierBasis unit_basis(int order = 4) { return FourierBasis(order, BoxBounds({0.0, 0.0}, {1.0, 1.0})); }

struct Problem {
    std::vector<std::vector<double>> states;
    std::vector<int> actions;
    std::vector<double> targets;
};

Problem random_problem(Rng& rng, int n) {
    Problem p;
    for (int i = 0; i < n; ++i) {
        p.states.push_back({rng.uniform(), rng.uniform()});
        p.actions.push_back(static_cast<int>(rng.below(3)));
        // mix of hard 0/1 targets and soft ones
        const double u = rng.uniform();
        p.targets.push_back(u < 0.2 ? 0.0 : (u < 0.4 ? 1.0 : rng.uniform()));
    }
    return p;
}

}  // namespace

TEST_CASE("basis layout") {
    const auto b = unit_basis();
    CHECK(b.size() == 16);
    CHECK(b.coefficients()[0] == std::vector<int>{0, 0});
    CHECK(b.coefficients()[1] == std::vector<int>{0, 1});
    CHECK(b.coefficients()[4] == std::vector<int>{1, 0});
    CHECK(b.coefficients()[15] == std::vector<int>{3, 3});
    CHECK_THROWS(FourierBasis(0, BoxBounds({0.0}, {1.0})));
    CHECK_THROWS(BoxBounds({1.0}, {0.0}));
}

TEST_CASE("features at hand points") {
    const FourierBasis b(4, BoxBounds({-1.2, -0.07}, {0.6, 0.07}));
    // midpoint of the box: xbar = (0.5, 0.5)
    const auto phi = b.features(std::vector<double>{-0.3, 0.0});
    CHECK(phi[0] == 1.0);
    CHECK(phi[4] == doctest::Approx(0.0));             // c = (1, 0)
    CHECK(phi[8] == doctest::Approx(-1.0));            // c = (2, 0)
    CHECK(phi[5] == doctest::Approx(-1.0));            // c = (1, 1): cos(pi)
    const auto corner = b.features(std::vector<double>{-1.2, -0.07});
    for (double v : corner) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("out-of-box states") {
    const auto b = unit_basis();
    CHECK_NOTHROW(b.features(std::vector<double>{1.0 + 1e-10, 0.5}));
    CHECK_THROWS_AS(b.features(std::vector<double>{1.01, 0.5}), std::domain_error);
    CHECK_THROWS(b.features(std::vector<double>{0.5}));
    CHECK_THROWS(b.features(std::vector<double>{std::nan(""), 0.5}));
}

TEST_CASE("sigmoid-linear prediction and gradient") {
    SigmoidLinearModel m(unit_basis(), 3);
    CHECK(m.n_params() == 48);
    const std::vector<double> s = {0.3, 0.8};
    CHECK(m.predict(s, 1) == 0.5);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(48);
    theta(16) = std::log(3.0);  // action 1, constant feature
    m.set_params(theta);
    CHECK(m.predict(s, 1) == doctest::Approx(0.75));
    CHECK(m.predict(s, 0) == 0.5);
    CHECK_THROWS(m.predict(s, 3));
    CHECK_THROWS(m.set_params(Eigen::VectorXd::Zero(47)));

    Rng rng(2);
    for (int i = 0; i < 48; ++i) theta(i) = rng.uniform(-1, 1);
    m.set_params(theta);
    const auto g = m.gradient(s, 2);
    for (int i = 0; i < 48; ++i) {
        Eigen::VectorXd tp = theta, tm = theta;
        const double h = 1e-6;
        tp(i) += h;
        tm(i) -= h;
        SigmoidLinearModel mp(unit_basis(), 3), mm(unit_basis(), 3);
        mp.set_params(tp);
        mm.set_params(tm);
        CHECK(g(i) == doctest::Approx((mp.predict(s, 2) - mm.predict(s, 2)) / (2 * h)).epsilon(1e-6));
    }
}

TEST_CASE("single-sample log objective at theta = 0") {
    const auto b = unit_basis();
    const std::vector<std::vector<double>> states = {{0.2, 0.6}};
    const std::vector<int> actions = {2};
    const auto batch = make_feature_batch(b, 3, states, actions);
    const std::vector<double> t = {1.0};
    const auto [value, grad] = empirical_objective(batch, Eigen::VectorXd::Zero(48), t, LossKind::Log);
    CHECK(value == doctest::Approx(std::log(2.0)));
    const auto phi = b.features(states[0]);
    for (int j = 0; j < 16; ++j) {
        CHECK(grad(j) == 0.0);
        CHECK(grad(32 + j) == doctest::Approx(-0.5 * phi[j]));
    }
}

TEST_CASE("property: analytic gradients match central differences") {
    Rng rng(2024);
    const auto b = unit_basis();
    int checked = 0;
    for (int config = 0; config < 100; ++config) {
        const auto p = random_problem(rng, 30);
        const auto batch = make_feature_batch(b, 3, p.states, p.actions);
        Eigen::VectorXd theta(48);
        const double scale = rng.uniform(0.0, 3.0);
        for (int i = 0; i < 48; ++i) theta(i) = scale * rng.uniform(-1, 1);
        for (LossKind kind : {LossKind::Log, LossKind::Squared}) {
            const auto [v, g] = empirical_objective(batch, theta, p.targets, kind);
            REQUIRE(std::isfinite(v));
            for (int i = 0; i < 48; ++i) {
                const double h = 1e-5 * std::max(1.0, std::abs(theta(i)));
                Eigen::VectorXd tp = theta, tm = theta;
                tp(i) += h;
                tm(i) -= h;
                const double fd = (empirical_objective(batch, tp, p.targets, kind).first -
                                   empirical_objective(batch, tm, p.targets, kind).first) /
                                  (2 * h);
                const double denom = std::max(1e-3, std::max(std::abs(fd), std::abs(g(i))));
                REQUIRE(std::abs(fd - g(i)) / denom <= 1e-5);
                ++checked;
            }
        }
    }
    CHECK(checked == 100 * 2 * 48);
}

TEST_CASE("property: objectives stay finite for large parameters") {
    Rng rng(77);
    const auto b = unit_basis();
    for (int config = 0; config < 50; ++config) {
        const auto p = random_problem(rng, 40);
        const auto batch = make_feature_batch(b, 3, p.states, p.actions);
        Eigen::VectorXd theta(48);
        for (int i = 0; i < 48; ++i) theta(i) = rng.uniform(-1, 1);
        theta *= 1e3 / theta.norm();
        for (LossKind kind : {LossKind::Log, LossKind::Squared}) {
            const auto [v, g] = empirical_objective(batch, theta, p.targets, kind);
            REQUIRE(std::isfinite(v));
            REQUIRE(g.allFinite());
        }
    }
}

TEST_CASE("objective rejects bad targets") {
    const auto b = unit_basis();
    const std::vector<std::vector<double>> states = {{0.2, 0.6}};
    const std::vector<int> actions = {0};
    const auto batch = make_feature_batch(b, 3, states, actions);
    const std::vector<double> bad = {1.5};
    CHECK_THROWS(empirical_objective(batch, Eigen::VectorXd::Zero(48), bad, LossKind::Log));
}

TEST_CASE("tabular fit is the per-cell mean for both losses") {
    const std::vector<int> s = {0, 0, 1, 0}, a = {1, 1, 0, 0};
    const std::vector<double> t = {0.2, 0.6, 0.9, 0.0};
    for (LossKind kind : {LossKind::Log, LossKind::Squared}) {
        const auto m = tabular_fit(2, 2, s, a, t, kind);
        CHECK(m.predict(0, 1) == doctest::Approx(0.4));
        CHECK(m.predict(1, 0) == doctest::Approx(0.9));
        CHECK(m.predict(0, 0) == 0.0);
        CHECK(m.predict(1, 1) == 1.0);  // unseen
    }
}
