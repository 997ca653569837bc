#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "fqilog/rng.hpp"
#include "fqilog/tabular_mdp.hpp"

using namespace fqilog;

namespace {

// Two states; action 0 stays, action 1 jumps to the other state.
TabularMdp switch_mdp(double gamma) {
    std::vector<double> P = {1, 0, 0, 1,   // s=0: a=0 stay, a=1 go to 1
                             0, 1, 1, 0};  // s=1: a=0 stay, a=1 go to 0
    std::vector<double> c = {0.0, 0.5 * (1 - gamma), 1.0 - gamma, 0.0};
    return TabularMdp(2, 2, P, c, gamma);
}

double max_abs_diff(const SaTable& a, const SaTable& b) { return sup_norm_diff(a, b); }

}  // namespace

TEST_CASE("constructor validation") {
    CHECK_THROWS(TabularMdp(1, 1, {0.5}, {0.0}, 0.9));        // row sums to 0.5
    CHECK_THROWS(TabularMdp(1, 1, {1.0}, {0.2}, 0.9));        // cost above 1 - gamma
    CHECK_THROWS(TabularMdp(1, 1, {1.0}, {-0.01}, 0.9));
    CHECK_THROWS(TabularMdp(2, 1, {1.0}, {0.0, 0.0}, 0.9));   // wrong shape
    CHECK_NOTHROW(TabularMdp(1, 1, {1.0}, {0.1}, 0.9));
}

TEST_CASE("random instances are valid and reproducible") {
    const auto a = random_mdp(5, 4, 3, 0.8), b = random_mdp(5, 4, 3, 0.8);
    CHECK(a.transition() == b.transition());
    CHECK(a.cost() == b.cost());
    for (int s = 0; s < 4; ++s)
        for (int x = 0; x < 3; ++x) {
            const auto r = a.row(s, x);
            CHECK(std::accumulate(r.begin(), r.end(), 0.0) == doctest::Approx(1.0));
            CHECK(a.c(s, x) >= 0.0);
            CHECK(a.c(s, x) <= 0.2 + 1e-15);
        }
    CHECK(random_mdp(6, 4, 3, 0.8).transition() != a.transition());
}

TEST_CASE("bellman operator at hand values") {
    const auto mdp = switch_mdp(0.5);
    QTable f(2, 2);
    f(0, 0) = 0.4; f(0, 1) = 0.2; f(1, 0) = 0.1; f(1, 1) = 0.3;
    // min f(0,.) = 0.2, min f(1,.) = 0.1
    const auto tf = bellman_apply(mdp, f);
    CHECK(tf(0, 0) == doctest::Approx(0.0 + 0.5 * 0.2));
    CHECK(tf(0, 1) == doctest::Approx(0.25 + 0.5 * 0.1));
    CHECK(tf(1, 0) == doctest::Approx(0.5 + 0.5 * 0.1));
    CHECK(tf(1, 1) == doctest::Approx(0.0 + 0.5 * 0.2));
}

TEST_CASE("greedy ties go to the smallest action") {
    SaTable f(2, 3);
    f(0, 0) = 0.3; f(0, 1) = 0.1; f(0, 2) = 0.1;
    f(1, 0) = 0.2; f(1, 1) = 0.2; f(1, 2) = 0.2;
    CHECK(greedy_actions(f) == std::vector<int>{1, 0});
    const auto pi = greedy_policy_of(f);
    CHECK(pi(0, 1) == 1.0);
    CHECK(pi(0, 2) == 0.0);
}

TEST_CASE("exact q* is a fixed point and value iteration agrees") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto mdp = random_mdp(seed, 5, 3, 0.9);
        const auto q = optimal_q_exact(mdp);
        CHECK(max_abs_diff(bellman_apply(mdp, q), q) <= 1e-12);
        CHECK(max_abs_diff(optimal_q(mdp, 1e-9), q) <= 1e-9);
        for (double v : q.values) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("q* is below q^pi for every deterministic policy") {
    const auto mdp = random_mdp(3, 3, 2, 0.85);
    const auto q_star = optimal_q_exact(mdp);
    for (int code = 0; code < 8; ++code) {
        std::vector<int> acts = {code & 1, (code >> 1) & 1, (code >> 2) & 1};
        const auto pi = TabularPolicy::deterministic(3, 2, acts);
        const auto q_pi = policy_q_exact(mdp, pi);
        CHECK(max_abs_diff(policy_bellman_apply(mdp, pi, q_pi), q_pi) <= 1e-12);
        CHECK(max_abs_diff(policy_q(mdp, pi, 1e-10), q_pi) <= 1e-10);
        for (std::size_t i = 0; i < q_pi.values.size(); ++i) CHECK(q_star.values[i] <= q_pi.values[i] + 1e-12);
    }
}

TEST_CASE("occupancy is a distribution and starts at eta1") {
    const auto mdp = random_mdp(9, 4, 2, 0.9);
    const StateDist eta1 = {0.1, 0.2, 0.3, 0.4};
    const auto pi = TabularPolicy::uniform(4, 2);
    CHECK(occupancy(mdp, eta1, pi, 1) == eta1);
    CHECK_THROWS(occupancy(mdp, eta1, pi, 0));
    const auto e5 = occupancy(mdp, eta1, pi, 5);
    CHECK(std::accumulate(e5.begin(), e5.end(), 0.0) == doctest::Approx(1.0));
    // push_forward of eta x pi is one propagation step
    const auto step = push_forward(mdp, joint(eta1, pi));
    const auto prop = propagate(mdp, eta1, pi);
    for (int s = 0; s < 4; ++s) CHECK(step[s] == doctest::Approx(prop[s]));
    CHECK(value_of(eta1, std::vector<double>{1, 1, 1, 1}) == doctest::Approx(1.0));
}

TEST_CASE("concentrability on a two-state switch") {
    const auto mdp = switch_mdp(0.5);
    const StateDist eta1 = {1.0, 0.0};
    StateActionDist mu(2, 2, 0.25);
    // rho_1 = (1, 0), rho_2 = (1, 1)
    CHECK(concentrability(mdp, eta1, mu, 1) == doctest::Approx(4.0));
    CHECK(concentrability(mdp, eta1, mu, 3) == doctest::Approx(4.0));
    mu(1, 0) = 0.0; mu(1, 1) = 0.5;
    CHECK(std::isinf(concentrability(mdp, eta1, mu, 2)));
    // state 1 is unreachable at step 1, so a zero there is harmless
    CHECK(concentrability(mdp, eta1, mu, 1) == doctest::Approx(4.0));
}

TEST_CASE("max arrival probabilities match brute force over policies") {
    const int S = 4, H = 4;
    const auto mdp = random_mdp(21, S, 2, 0.9);
    const StateDist eta1 = {0.4, 0.3, 0.2, 0.1};
    const auto rho = max_arrival_probabilities(mdp, eta1, H);
    REQUIRE(rho.size() == static_cast<std::size_t>(H));
    // every deterministic Markov policy for steps 1..H-1
    std::vector<std::vector<double>> best(H, std::vector<double>(S, 0.0));
    best[0] = eta1;
    const int per_step = 1 << S;
    for (int code = 0; code < per_step * per_step * per_step; ++code) {
        NonstationaryPolicy pi;
        for (int h = 0, rest = code; h < H - 1; ++h, rest /= per_step) {
            std::vector<int> acts(S);
            for (int s = 0; s < S; ++s) acts[s] = ((rest % per_step) >> s) & 1;
            pi.steps.push_back(TabularPolicy::deterministic(S, 2, acts));
        }
        for (int h = 2; h <= H; ++h) {
            const auto e = occupancy(mdp, eta1, pi, h);
            for (int s = 0; s < S; ++s) best[h - 1][s] = std::max(best[h - 1][s], e[s]);
        }
    }
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) CHECK(rho[h][s] == doctest::Approx(best[h][s]).epsilon(1e-12));
}

TEST_CASE("concentrability simple bounds") {
    const TabularMdp single(1, 3, {1.0, 1.0, 1.0}, {0.0, 0.1, 0.05}, 0.5);
    CHECK(concentrability(single, {1.0}, StateActionDist(1, 3, 1.0 / 3), 10) == doctest::Approx(3.0));
    const auto mdp = random_mdp(8, 5, 3, 0.9);
    CHECK(concentrability(mdp, StateDist(5, 0.2), StateActionDist(5, 3, 1.0 / 15), 20) <= 15.0 + 1e-12);
}

TEST_CASE("property: bellman operator is a sup-norm contraction") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const auto mdp = random_mdp(rng.next_u64(), 4, 2, 0.9);
        QTable f(4, 2), g(4, 2);
        for (auto& v : f.values) v = rng.uniform();
        for (auto& v : g.values) v = rng.uniform();
        CHECK(sup_norm_diff(bellman_apply(mdp, f), bellman_apply(mdp, g)) <= 0.9 * sup_norm_diff(f, g) + 1e-12);
    }
}

TEST_CASE("single-state closed forms") {
    const TabularMdp one(1, 1, {1.0}, {0.05}, 0.9);
    CHECK(optimal_q_exact(one)(0, 0) == doctest::Approx(0.5));
    CHECK(optimal_q(one, 1e-12)(0, 0) == doctest::Approx(0.5));
    QTable f(1, 1, 0.4);
    const TabularMdp other(1, 1, {1.0}, {0.3}, 0.5);
    CHECK(bellman_apply(other, f)(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("weighted norms") {
    const std::vector<double> g = {1.0, -2.0}, nu = {0.5, 0.5};
    CHECK(weighted_norm(g, nu, 1.0) == doctest::Approx(1.5));
    CHECK(weighted_norm(g, nu, 2.0) == doctest::Approx(std::sqrt(2.5)));
}
