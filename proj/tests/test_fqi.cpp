#include <cmath>

#include "doctest.h"
#include "fqilog/errors.hpp"
#include "fqilog/fqi.hpp"
#include "fqilog/rng.hpp"

using namespace fqilog;

namespace {

TabularTransitions random_tabular_data(Rng& rng, int S, int A, int n, double gamma, bool with_terminal) {
    TabularTransitions d;
    const auto mdp = random_mdp(rng.next_u64(), S, A, gamma);
    for (int i = 0; i < n; ++i) {
        // every pair at least once, the rest uniform
        const int s = i < S * A ? i / A : static_cast<int>(rng.below(S));
        const int a = i < S * A ? i % A : static_cast<int>(rng.below(A));
        double u = rng.uniform(), acc = 0.0;
        int s2 = S - 1;
        for (int k = 0; k < S; ++k) {
            acc += mdp.p(s, a, k);
            if (u < acc) {
                s2 = k;
                break;
            }
        }
        d.states.push_back(s);
        d.actions.push_back(a);
        d.costs.push_back(rng.uniform(0.0, 1.0 - gamma));
        d.next_states.push_back(s2);
        d.terminal.push_back(with_terminal && rng.bernoulli(0.1) ? 1 : 0);
    }
    return d;
}

// Holds the arrays behind a TransitionView.
struct Batch {
    std::vector<double> states, costs, next_states;
    std::vector<int> actions, steps;
    std::vector<std::uint8_t> terminal;

    TransitionView view() const {
        return {2, states, actions, costs, next_states, terminal, steps};
    }
};

FourierBasis unit_basis() { return FourierBasis(4, BoxBounds({0.0, 0.0}, {1.0, 1.0})); }

}  // namespace

TEST_CASE("targets at hand values") {
    const std::vector<double> c = {0.2, 0.2, 0.9, 0.0};
    const std::vector<std::uint8_t> term = {0, 1, 0, 0};
    const std::vector<double> nm = {0.2, 0.7, 0.5, 0.3};
    const auto t = compute_targets(c, term, nm, 0.9, true);
    CHECK(t[0] == doctest::Approx(0.38));
    CHECK(t[1] == doctest::Approx(0.2));
    CHECK(t[2] == 1.0);  // 1.35 clipped
    CHECK(t[3] == doctest::Approx(0.27));
    const auto raw = compute_targets(c, term, nm, 0.9, false);
    CHECK(raw[2] == doctest::Approx(1.35));
    const std::vector<double> bad = {1.2};
    const std::vector<std::uint8_t> t1 = {0};
    const std::vector<double> n1 = {0.0};
    CHECK_THROWS_AS(compute_targets(bad, t1, n1, 0.9, true), DataError);
}

TEST_CASE("config validation") {
    FqiConfig c;
    CHECK_NOTHROW(c.validate(false));
    c.gamma = 1.0;
    CHECK_THROWS_AS(c.validate(false), ConfigError);
    CHECK_NOTHROW(c.validate(true));
    c.k = 0;
    CHECK_THROWS_AS(c.validate(true), ConfigError);
}

TEST_CASE("tabular greedy action ties") {
    SaTable f(1, 3);
    f(0, 0) = 0.5; f(0, 1) = 0.2; f(0, 2) = 0.2;
    CHECK(greedy_action(f, 0) == 1);
}

TEST_CASE("property: tabular log and squared FQI produce the same iterates") {
    Rng rng(99);
    for (int dataset = 0; dataset < 20; ++dataset) {
        const int S = 2 + static_cast<int>(rng.below(5)), A = 1 + static_cast<int>(rng.below(3));
        const auto d = random_tabular_data(rng, S, A, 60, 0.9, dataset % 2 == 0);
        FqiConfig cfg;
        cfg.k = 10;
        cfg.gamma = 0.9;
        cfg.loss = LossKind::Log;
        const auto log_it = fqi_tabular(d, S, A, cfg);
        cfg.loss = LossKind::Squared;
        const auto sq_it = fqi_tabular(d, S, A, cfg);
        REQUIRE(log_it.size() == 10);
        for (int k = 0; k < 10; ++k) CHECK(sup_norm_diff(log_it[k], sq_it[k]) <= 1e-10);
    }
}

TEST_CASE("property: tabular FQI converges to the empirical q* at rate gamma^k") {
    Rng rng(4);
    const double gamma = 0.8;
    const auto d = random_tabular_data(rng, 3, 2, 300, gamma, false);
    const auto mdp = empirical_mdp(d, 3, 2, gamma);
    const auto q_hat = optimal_q_exact(mdp);
    FqiConfig cfg;
    cfg.k = 30;
    cfg.gamma = gamma;
    const auto it = fqi_tabular(d, 3, 2, cfg);
    for (int k = 1; k <= 30; ++k) CHECK(sup_norm_diff(it[k - 1], q_hat) <= std::pow(gamma, k) + 1e-9);
}

TEST_CASE("empirical MDP needs full coverage") {
    TabularTransitions d;
    d.states = {0};
    d.actions = {0};
    d.costs = {0.0};
    d.next_states = {1};
    d.terminal = {0};
    CHECK_THROWS_AS(empirical_mdp(d, 2, 1, 0.9), DataError);
}

TEST_CASE("one-step fit recovers a realizable sigmoid target") {
    // terminal transitions with costs drawn from a member of the class
    Rng rng(8);
    const auto basis = unit_basis();
    SigmoidLinearModel truth(basis, 3);
    Eigen::VectorXd theta(48);
    for (int i = 0; i < 48; ++i) theta(i) = rng.uniform(-0.5, 0.5);
    truth.set_params(theta);
    Batch b;
    for (int i = 0; i < 600; ++i) {
        const double x = rng.uniform(), y = rng.uniform();
        const int a = static_cast<int>(rng.below(3));
        b.states.insert(b.states.end(), {x, y});
        b.next_states.insert(b.next_states.end(), {x, y});
        b.actions.push_back(a);
        b.costs.push_back(truth.predict(std::vector<double>{x, y}, a));
        b.terminal.push_back(1);
        b.steps.push_back(0);
    }
    for (LossKind kind : {LossKind::Log, LossKind::Squared}) {
        FqiConfig cfg;
        cfg.loss = kind;
        cfg.k = 1;
        cfg.optimizer.grad_tol = 1e-10;
        cfg.optimizer.max_iters = 2000;
        const auto run = fqi_stationary(b.view(), basis, 3, cfg);
        REQUIRE(run.params.size() == 1);
        CHECK((run.params[0] - theta).norm() <= 1e-3);
        const auto m = run.model_at(0);
        const std::vector<double> s = {0.37, 0.61};
        CHECK(greedy_action(m, s) == greedy_action(truth, s));
    }
}

TEST_CASE("stationary FQI is deterministic and warm starts") {
    Rng rng(15);
    Batch b;
    for (int i = 0; i < 200; ++i) {
        const double x = rng.uniform(), y = rng.uniform();
        b.states.insert(b.states.end(), {x, y});
        b.next_states.insert(b.next_states.end(), {rng.uniform(), rng.uniform()});
        b.actions.push_back(static_cast<int>(rng.below(3)));
        b.costs.push_back(0.05 * x);
        b.terminal.push_back(0);
        b.steps.push_back(0);
    }
    FqiConfig cfg;
    cfg.k = 5;
    cfg.gamma = 0.9;
    const auto r1 = fqi_stationary(b.view(), unit_basis(), 3, cfg);
    const auto r2 = fqi_stationary(b.view(), unit_basis(), 3, cfg);
    REQUIRE(r1.params.size() == 5);
    CHECK(r1.reports.size() == 5);
    CHECK(r1.train_loss.size() == 5);
    for (int j = 0; j < 5; ++j) CHECK(r1.params[j] == r2.params[j]);
    CHECK_FALSE(r1.finite_horizon);
    CHECK_THROWS(r1.model_at(5));
}

TEST_CASE("finite-horizon FQI indexes parameters by step") {
    // step 1 pays cost 1 for action 0 and 0 otherwise; step 0 is free
    Rng rng(16);
    Batch b;
    for (int i = 0; i < 400; ++i) {
        const double x = rng.uniform(), y = rng.uniform();
        const int a = static_cast<int>(rng.below(3));
        const int h = i % 2;
        b.states.insert(b.states.end(), {x, y});
        b.next_states.insert(b.next_states.end(), {rng.uniform(), rng.uniform()});
        b.actions.push_back(a);
        b.costs.push_back(h == 1 && a == 0 ? 1.0 : (h == 0 && a == 1 ? 0.5 : 0.0));
        b.terminal.push_back(h == 1 ? 1 : 0);
        b.steps.push_back(h);
    }
    FqiConfig cfg;
    cfg.gamma = 1.0;
    cfg.k = 1;
    const auto run = fqi_finite_horizon(b.view(), 2, unit_basis(), 3, cfg);
    CHECK(run.finite_horizon);
    REQUIRE(run.params.size() == 2);
    const std::vector<double> s = {0.5, 0.5};
    CHECK(run.act(s, 1) != 0);
    CHECK(run.act(s, 0) != 1);
    CHECK(run.act(s, 7) == run.act(s, 1));  // steps past the horizon reuse the last one
}

TEST_CASE("mismatched state dimension is rejected") {
    Batch b;
    b.states = {0.5, 0.5};
    b.next_states = {0.5, 0.5};
    b.actions = {0};
    b.costs = {0.0};
    b.terminal = {0};
    b.steps = {0};
    const FourierBasis one_d(4, BoxBounds({0.0}, {1.0}));
    CHECK_THROWS_AS(fqi_stationary(b.view(), one_d, 3, FqiConfig{}), DataError);
}
