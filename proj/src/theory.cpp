#include "fqilog/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "fqilog/core_math.hpp"
#include "fqilog/errors.hpp"
#include "fqilog/rng.hpp"

namespace fqilog {

ViolationTracker::ViolationTracker(std::string lemma_id, double tolerance, std::uint64_t seed)
    : id_(std::move(lemma_id)), tol_(tolerance), seed_(seed), worst_(-std::numeric_limits<double>::infinity()) {}

void ViolationTracker::record(double lhs_minus_rhs) {
    // NaN must never be silently dropped by max().
    if (std::isnan(lhs_minus_rhs)) lhs_minus_rhs = std::numeric_limits<double>::infinity();
    worst_ = std::max(worst_, lhs_minus_rhs);
}

TheoryReport ViolationTracker::report() const {
    TheoryReport r;
    r.lemma_id = id_;
    r.n_instances = instances_;
    r.worst_violation = worst_;
    r.tolerance = tol_;
    r.pass = worst_ <= tol_;
    r.seed = seed_;
    return r;
}

namespace {

// Per-suite stream tags so suites sharing a seed draw independent instances.
enum : std::uint64_t { kTagPointwise = 1, kTagNorm = 2, kTagContraction = 3, kTagDecomposition = 4, kTagConc = 5 };

std::uint64_t instance_seed(std::uint64_t seed, std::uint64_t tag, long i) {
    return derive_seed(derive_seed(seed, tag), static_cast<std::uint64_t>(i));
}

// Scalar in [0,1] with extra mass at and near the boundary.
double random_prob(Rng& rng) {
    const double u = rng.uniform();
    switch (rng.below(6)) {
        case 0: return 0.0;
        case 1: return 1.0;
        case 2: return std::pow(u, 6.0);
        case 3: return 1.0 - std::pow(u, 6.0);
        default: return u;
    }
}

double random_nonneg(Rng& rng, double scale) {
    const double u = rng.uniform();
    switch (rng.below(5)) {
        case 0: return 0.0;
        case 1: return scale * std::pow(u, 6.0);
        default: return scale * u;
    }
}

SaTable random_table(Rng& rng, int S, int A, double scale) {
    SaTable t(S, A);
    for (auto& v : t.values) v = random_nonneg(rng, scale);
    return t;
}

SaTable random_prob_table(Rng& rng, int S, int A) {
    SaTable t(S, A);
    for (auto& v : t.values) v = random_prob(rng);
    return t;
}

// Point masses, flat Dirichlet draws, or sharply skewed draws.
std::vector<double> random_dist(Rng& rng, std::size_t n) {
    const auto kind = rng.below(4);
    if (kind == 0) {
        std::vector<double> d(n, 0.0);
        d[rng.below(n)] = 1.0;
        return d;
    }
    auto d = rng.dirichlet(n);
    if (kind == 1) {
        double total = 0.0;
        for (double& v : d) total += (v = std::pow(v, 4.0));
        for (double& v : d) v /= total;
    }
    return d;
}

// Strictly positive distribution (a valid data distribution mu).
StateActionDist random_positive_sa(Rng& rng, int S, int A) {
    StateActionDist mu(S, A);
    auto d = rng.dirichlet(static_cast<std::size_t>(S) * A);
    double total = 0.0;
    for (double& v : d) total += (v = v + 1e-6);
    for (std::size_t i = 0; i < d.size(); ++i) mu.values[i] = d[i] / total;
    return mu;
}

StateActionDist random_sa_dist(Rng& rng, int S, int A) {
    StateActionDist nu(S, A);
    nu.values = random_dist(rng, static_cast<std::size_t>(S) * A);
    return nu;
}

TabularPolicy random_policy(Rng& rng, int S, int A) {
    if (rng.below(2) == 0) {
        std::vector<int> acts(static_cast<std::size_t>(S));
        for (int& a : acts) a = static_cast<int>(rng.below(static_cast<std::uint64_t>(A)));
        return TabularPolicy::deterministic(S, A, acts);
    }
    TabularPolicy pi(S, A);
    for (int s = 0; s < S; ++s) {
        const auto d = rng.dirichlet(static_cast<std::size_t>(A));
        for (int a = 0; a < A; ++a) pi(s, a) = d[a];
    }
    return pi;
}

struct Instance {
    TabularMdp mdp;
    StateDist eta1;
};

// Random MDP with S <= 6, A <= 3. Costs are sometimes sparse (small-cost regime)
// and occasionally identically zero.
Instance random_instance(Rng& rng, double gamma_max) {
    const int S = 1 + static_cast<int>(rng.below(6));
    const int A = 1 + static_cast<int>(rng.below(3));
    const double gamma = rng.uniform(0.0, gamma_max);
    TabularMdp base = random_mdp(rng.next_u64(), S, A, gamma);
    std::vector<double> cost = base.cost();
    const auto mode = rng.below(10);
    if (mode == 0) {
        std::fill(cost.begin(), cost.end(), 0.0);
    } else if (mode <= 3) {
        for (double& c : cost) {
            if (rng.below(4) != 0) c = 0.0;
        }
    }
    TabularMdp mdp(S, A, base.transition(), std::move(cost), gamma);
    return {std::move(mdp), random_dist(rng, static_cast<std::size_t>(S))};
}

// Admissible distribution: a random nonstationary policy run from eta1 for h - 1
// steps, with the step-h action drawn from its step-h component.
StateActionDist random_admissible(Rng& rng, const Instance& inst, int h_max) {
    const int S = inst.mdp.n_states(), A = inst.mdp.n_actions();
    const int h = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(h_max)));
    NonstationaryPolicy pi;
    for (int i = 0; i < h; ++i) pi.steps.push_back(random_policy(rng, S, A));
    const StateDist eta_h = occupancy(inst.mdp, inst.eta1, pi, h);
    return joint(eta_h, pi.at(h));
}

SaTable sqrt_of(const SaTable& f) {
    SaTable out = f;
    for (double& v : out.values) v = std::sqrt(v);
    return out;
}

SaTable minus(const SaTable& a, const SaTable& b) {
    SaTable out = a;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= b.values[i];
    return out;
}

// || sqrt(f) - sqrt(g) ||_{2, nu}
double hellinger_norm(const SaTable& f, const SaTable& g, const SaTable& nu) {
    return weighted_norm(minus(sqrt_of(f), sqrt_of(g)), nu, 2.0);
}

// pi_{f,g}(s) = argmin_a min{f(s,a), g(s,a)}
TabularPolicy pi_min_pair(const SaTable& f, const SaTable& g) {
    SaTable m = f;
    for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] = std::min(f.values[i], g.values[i]);
    return greedy_policy_of(m);
}

// sum_s eta(s) (sqrt f^(s) - sqrt g^(s))^2, square-rooted.
double min_hellinger_norm(const SaTable& f, const SaTable& g, const StateDist& eta) {
    const auto fm = min_over_actions(f), gm = min_over_actions(g);
    double total = 0.0;
    for (std::size_t s = 0; s < eta.size(); ++s) {
        const double d = std::sqrt(fm[s]) - std::sqrt(gm[s]);
        total += eta[s] * d * d;
    }
    return std::sqrt(total);
}

}  // namespace

XiDelta xi_delta(const TabularMdp& mdp, const StateDist& eta1, const SaTable& f, const QTable& q_star,
                 int horizon) {
    if (!f.same_shape(q_star)) throw std::invalid_argument("xi_delta: shape mismatch");
    XiDelta out;
    out.xi = QTable(f.n_states, f.n_actions);
    out.delta = SaTable(f.n_states, f.n_actions);
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        out.xi.values[i] = f.values[i] + q_star.values[i];
        out.delta.values[i] = triangular_dev(f.values[i], q_star.values[i]);
    }
    const TabularPolicy pi = greedy_policy_of(f);
    const TabularPolicy pi_star = greedy_policy_of(q_star);
    StateDist eta = eta1;
    for (int h = 1; h <= horizon; ++h) {
        if (h > 1) eta = propagate(mdp, eta, pi);
        out.d_f = std::max({out.d_f, weighted_norm(out.delta, joint(eta, pi), 2.0),
                            weighted_norm(out.delta, joint(eta, pi_star), 2.0)});
    }
    return out;
}

std::vector<TheoryReport> verify_pointwise_inequalities(std::uint64_t seed, long n_instances) {
    ViolationTracker chain("hellinger_triangular_chain", kPointwiseTol, seed);
    ViolationTracker shift("sqrt_shift_nonexpansion", kPointwiseTol, seed);
    ViolationTracker minop("min_nonexpansion", kPointwiseTol, seed);

    auto check_chain = [&](double p, double q) {
        const double lhs = (p == 0.0 && q == 0.0) ? 0.0 : 0.25 * (p - q) * (p - q) / (p + q);
        const double d = std::sqrt(p) - std::sqrt(q);
        const double mid = 0.5 * d * d;
        chain.record(std::max(lhs - mid, mid - hellinger_sq(p, q)));
    };

    // Dense grid over [0,1]^2, counted as a single instance.
    for (int i = 0; i <= 100; ++i) {
        for (int j = 0; j <= 100; ++j) check_chain(i / 100.0, j / 100.0);
    }
    chain.count_instance();

    for (long i = 0; i < n_instances; ++i) {
        Rng rng(instance_seed(seed, kTagPointwise, i));

        check_chain(random_prob(rng), random_prob(rng));
        chain.count_instance();

        const double scale = rng.below(2) ? 1.0 : 10.0;
        const double x = random_nonneg(rng, scale), a = random_nonneg(rng, scale), b = random_nonneg(rng, scale);
        shift.record(std::abs(std::sqrt(x + a) - std::sqrt(x + b)) - std::abs(std::sqrt(a) - std::sqrt(b)));
        shift.count_instance();

        const int S = 1 + static_cast<int>(rng.below(6));
        const int A = 1 + static_cast<int>(rng.below(3));
        const double fscale = rng.below(2) ? 1.0 : 3.0;
        const SaTable f = random_table(rng, S, A, fscale);
        const SaTable g = rng.below(8) == 0 ? f : random_table(rng, S, A, fscale);
        const StateDist eta = random_dist(rng, static_cast<std::size_t>(S));
        const double lhs = min_hellinger_norm(f, g, eta);
        const double rhs = hellinger_norm(f, g, joint(eta, pi_min_pair(f, g)));
        minop.record(lhs - rhs);
        minop.count_instance();
    }
    return {chain.report(), shift.report(), minop.report()};
}

std::vector<TheoryReport> verify_norm_inequalities(std::uint64_t seed, long n_instances) {
    ViolationTracker cs("triangular_cauchy_schwarz", kNormTol, seed);
    ViolationTracker xib("xi_sum_bound", kNormTol, seed);
    ViolationTracker com("change_of_measure", kNormTol, seed);
    ViolationTracker sqe("sqrt_expectation_nonexpansion", kNormTol, seed);
    ViolationTracker integ("hellinger_triangular_integrated", kNormTol, seed);
    constexpr int kAdmissibleHorizon = 8;

    for (long i = 0; i < n_instances; ++i) {
        Rng rng(instance_seed(seed, kTagNorm, i));
        const Instance inst = random_instance(rng, 0.95);
        const int S = inst.mdp.n_states(), A = inst.mdp.n_actions();
        const QTable q_star = optimal_q_exact(inst.mdp);

        SaTable f = random_prob_table(rng, S, A);
        if (rng.below(10) == 0) f = q_star;
        const StateActionDist nu_adm = random_admissible(rng, inst, kAdmissibleHorizon);
        const StateActionDist nu_any = random_sa_dist(rng, S, A);
        const StateActionDist mu = rng.below(5) == 0 ? StateActionDist(nu_adm) : random_positive_sa(rng, S, A);
        const double C = concentrability(inst.mdp, inst.eta1, mu, kAdmissibleHorizon);

        SaTable xi(S, A), delta(S, A), diff(S, A);
        for (std::size_t k = 0; k < f.values.size(); ++k) {
            xi.values[k] = f.values[k] + q_star.values[k];
            delta.values[k] = triangular_dev(f.values[k], q_star.values[k]);
            diff.values[k] = f.values[k] - q_star.values[k];
        }

        for (const StateActionDist* nu : {&nu_adm, &nu_any}) {
            const double dn = weighted_norm(delta, *nu, 2.0);
            cs.record(weighted_norm(diff, *nu, 1.0) - std::sqrt(weighted_norm(xi, *nu, 1.0)) * dn);
            xib.record(weighted_norm(xi, *nu, 1.0) - (4.0 * weighted_norm(q_star, *nu, 1.0) + dn * dn));
        }
        cs.count_instance();
        xib.count_instance();

        // The change of measure only applies when mu covers nu (C finite).
        if (std::isfinite(C)) {
            SaTable g(S, A);
            for (double& v : g.values) v = rng.uniform(-2.0, 2.0);
            for (double p : {1.0, 2.0}) {
                com.record(weighted_norm(g, nu_adm, p) - std::pow(C, 1.0 / p) * weighted_norm(g, mu, p));
            }
            com.count_instance();
        }

        {
            const StateActionDist lambda = random_sa_dist(rng, S, A);
            const SaTable g1 = random_table(rng, S, A, 2.0), g2 = random_table(rng, S, A, 2.0);
            const double d = std::sqrt(weighted_norm(g1, lambda, 1.0)) - std::sqrt(weighted_norm(g2, lambda, 1.0));
            sqe.record(d * d - std::pow(hellinger_norm(g1, g2, lambda), 2.0));
            sqe.count_instance();
        }

        {
            const SaTable g = random_prob_table(rng, S, A);
            SaTable tri(S, A), hel(S, A);
            for (std::size_t k = 0; k < f.values.size(); ++k) {
                tri.values[k] = triangular_dev(f.values[k], g.values[k]);
                hel.values[k] = hellinger_sq(f.values[k], g.values[k]);
            }
            const double a = weighted_norm(tri, nu_any, 2.0);
            const double b = std::sqrt(2.0) * hellinger_norm(f, g, nu_any);
            const double c = 2.0 * std::sqrt(weighted_norm(hel, nu_any, 1.0));
            integ.record(std::max(a - b, b - c));
            integ.count_instance();
        }
    }
    return {cs.report(), xib.report(), com.report(), sqe.report(), integ.report()};
}

std::vector<TheoryReport> verify_contraction_suite(std::uint64_t seed, long n_instances) {
    ViolationTracker hc("hellinger_contraction", kContractionTol, seed);
    ViolationTracker pc("pseudo_contraction_at_fixed_point", kContractionTol, seed);
    ViolationTracker one("contraction_one_step", kContractionTol, seed);
    ViolationTracker adm("pseudo_contraction_admissible", kContractionTol, seed);
    ViolationTracker ep("error_propagation", kContractionTol, seed);
    constexpr int kAdmissibleHorizon = 6;
    constexpr int kMaxIterations = 5;

    for (long i = 0; i < n_instances; ++i) {
        Rng rng(instance_seed(seed, kTagContraction, i));
        const Instance inst = random_instance(rng, 0.95);
        const TabularMdp& mdp = inst.mdp;
        const int S = mdp.n_states(), A = mdp.n_actions();
        const double gamma = mdp.discount();
        const QTable q_star = optimal_q_exact(mdp);

        // Contraction of T for arbitrary nu.
        {
            const SaTable f = random_table(rng, S, A, 2.0);
            const SaTable g = rng.below(10) == 0 ? f : random_table(rng, S, A, 2.0);
            const StateActionDist nu = random_sa_dist(rng, S, A);
            const StateActionDist next = joint(push_forward(mdp, nu), pi_min_pair(f, g));
            hc.record(hellinger_norm(bellman_apply(mdp, f), bellman_apply(mdp, g), nu) -
                      std::sqrt(gamma) * hellinger_norm(f, g, next));
            hc.count_instance();

            const StateActionDist next_star = joint(push_forward(mdp, nu), pi_min_pair(f, q_star));
            pc.record(hellinger_norm(bellman_apply(mdp, f), q_star, nu) -
                      std::sqrt(gamma) * hellinger_norm(f, q_star, next_star));
            pc.count_instance();
        }

        // Statements that need an admissible nu and the concentrability of mu.
        const StateActionDist nu = random_admissible(rng, inst, kAdmissibleHorizon);
        const StateActionDist mu = random_positive_sa(rng, S, A);
        const double C = concentrability(mdp, inst.eta1, mu, kAdmissibleHorizon + kMaxIterations);
        const double root_c = std::sqrt(C);

        {
            const SaTable f = random_table(rng, S, A, 1.5);
            const SaTable fp = random_table(rng, S, A, 1.5);
            const StateActionDist next = joint(push_forward(mdp, nu), pi_min_pair(fp, q_star));
            const double lhs = hellinger_norm(f, q_star, nu);
            const double rhs = root_c * hellinger_norm(f, bellman_apply(mdp, fp), mu) +
                               std::sqrt(gamma) * hellinger_norm(fp, q_star, next);
            one.record(lhs - rhs);
            one.count_instance();

            adm.record(lhs - root_c / (1.0 - std::sqrt(gamma)) * hellinger_norm(f, q_star, mu));
            adm.count_instance();
        }

        {
            const int k = 1 + static_cast<int>(rng.below(kMaxIterations));
            std::vector<SaTable> seq;
            seq.push_back(random_prob_table(rng, S, A));
            // Exact backups, noisy backups or unrelated functions.
            const auto mode = rng.below(3);
            for (int t = 1; t <= k; ++t) {
                SaTable next = bellman_apply(mdp, seq.back());
                if (mode == 1) {
                    for (double& v : next.values) v = std::max(0.0, v * (1.0 + rng.uniform(-0.2, 0.2)));
                } else if (mode == 2) {
                    next = random_table(rng, S, A, 1.5);
                }
                seq.push_back(std::move(next));
            }
            double worst = 0.0;
            for (int t = 1; t <= k; ++t) {
                worst = std::max(worst, hellinger_norm(seq[t], bellman_apply(mdp, seq[t - 1]), mu));
            }
            const double lhs = hellinger_norm(seq[k], q_star, nu);
            const double rhs = std::pow(gamma, 0.5 * k) + 2.0 * root_c / (1.0 - gamma) * worst;
            ep.record(lhs - rhs);
            ep.count_instance();
        }
    }
    return {hc.report(), pc.report(), one.report(), adm.report(), ep.report()};
}

std::vector<TheoryReport> verify_decomposition_suite(std::uint64_t seed, long n_instances, int horizon) {
    if (horizon < 1) throw std::invalid_argument("decomposition suite: horizon must be >= 1");
    ViolationTracker pdl("performance_difference", kDecompositionTol, seed);
    ViolationTracker reg("regret_decomposition", kDecompositionTol, seed);
    ViolationTracker fod("first_order_decomposition", kDecompositionTol, seed);
    ViolationTracker prop("small_cost_decomposition", kDecompositionTol, seed);
    ViolationTracker tail("tail_value_bound", kDecompositionTol, seed);

    const double gamma_max = std::min(0.95, std::pow(1e-8, 1.0 / horizon));

    for (long i = 0; i < n_instances; ++i) {
        Rng rng(instance_seed(seed, kTagDecomposition, i));
        const Instance inst = random_instance(rng, gamma_max);
        const TabularMdp& mdp = inst.mdp;
        const int S = mdp.n_states(), A = mdp.n_actions();
        const double gamma = mdp.discount();
        const QTable q_star = optimal_q_exact(mdp);
        const TabularPolicy pi_star = greedy_policy_of(q_star);
        const auto v_star = state_values(q_star, pi_star);

        SaTable f(S, A);
        switch (rng.below(4)) {
            case 0: f = q_star; break;
            case 1:
                f = q_star;
                for (double& v : f.values) v = std::max(0.0, v + rng.uniform(-0.05, 0.05));
                break;
            default: f = random_table(rng, S, A, 1.0); break;
        }
        const TabularPolicy pi = greedy_policy_of(f);
        const QTable q_pi = policy_q_exact(mdp, pi);
        const auto v_pi = state_values(q_pi, pi);
        const double vbar_pi = value_of(inst.eta1, v_pi);
        const double vbar_star = value_of(inst.eta1, v_star);
        const double gap = vbar_pi - vbar_star;
        const double truncation = std::pow(gamma, horizon) / (1.0 - gamma);

        const XiDelta xd = xi_delta(mdp, inst.eta1, f, q_star, horizon);
        double delta_sup = 0.0;
        for (double v : xd.delta.values) delta_sup = std::max(delta_sup, std::abs(v));
        const double d_f = xd.d_f + delta_sup * std::pow(gamma, horizon);

        // q*(s, pi) - v*(s)
        const auto q_star_pi = state_values(q_star, pi);
        double series = 0.0, root_sum_star = 0.0, root_sum_pi = 0.0, discount = 1.0;
        StateDist eta = inst.eta1;
        for (int h = 1; h <= horizon; ++h) {
            if (h > 1) eta = propagate(mdp, eta, pi);
            double adv = 0.0;
            for (int s = 0; s < S; ++s) adv += eta[s] * (q_star_pi[s] - v_star[s]);
            series += discount * adv;
            root_sum_star += discount * std::sqrt(std::max(0.0, value_of(eta, v_star)));
            root_sum_pi += discount * std::sqrt(std::max(0.0, value_of(eta, v_pi)));

            const StateActionDist nu_pi = joint(eta, pi), nu_star = joint(eta, pi_star);
            const double rhs = (std::sqrt(weighted_norm(xd.xi, nu_pi, 1.0)) +
                                std::sqrt(weighted_norm(xd.xi, nu_star, 1.0))) *
                               (weighted_norm(xd.delta, nu_pi, 2.0) + weighted_norm(xd.delta, nu_star, 2.0));
            reg.record(adv - rhs);
            discount *= gamma;
        }
        reg.count_instance();

        pdl.record(std::abs(gap - series) - truncation);
        pdl.count_instance();

        fod.record(gap - (11.0 * d_f * root_sum_star + 28.0 * d_f * d_f / (1.0 - gamma)) - truncation);
        fod.count_instance();

        const double bound = 22.0 * std::sqrt(2.0) * d_f / (1.0 - gamma) * std::sqrt(std::max(0.0, vbar_star)) +
                             512.0 * d_f * d_f / ((1.0 - gamma) * (1.0 - gamma));
        prop.record(gap - bound - truncation);
        prop.count_instance();

        tail.record(root_sum_pi - 2.0 * std::sqrt(vbar_pi) / (1.0 - gamma));
        // Same bound for an arbitrary stochastic policy.
        const TabularPolicy rp = random_policy(rng, S, A);
        const auto v_rp = state_values(policy_q_exact(mdp, rp), rp);
        double lhs = 0.0;
        discount = 1.0;
        eta = inst.eta1;
        for (int h = 1; h <= horizon; ++h) {
            if (h > 1) eta = propagate(mdp, eta, rp);
            lhs += discount * std::sqrt(std::max(0.0, value_of(eta, v_rp)));
            discount *= gamma;
        }
        tail.record(lhs - 2.0 * std::sqrt(value_of(inst.eta1, v_rp)) / (1.0 - gamma));
        tail.count_instance();
    }
    return {pdl.report(), reg.report(), fod.report(), prop.report(), tail.report()};
}

FiniteClass make_concentration_class(std::uint64_t seed, int class_size, int n_inputs, long reference_samples) {
    if (class_size < 1 || n_inputs < 1) throw ConfigError("concentration class: sizes must be positive");
    if (reference_samples < 1) throw ConfigError("concentration class: reference sample size must be positive");
    Rng rng(derive_seed(seed, kTagConc));
    FiniteClass cls;
    cls.input_dist = rng.dirichlet(static_cast<std::size_t>(n_inputs));
    std::vector<double> star(static_cast<std::size_t>(n_inputs)), dir(star.size());
    // Mostly small means: the regime where log-loss concentration is fast.
    for (double& v : star) v = rng.uniform(0.02, 0.4);
    for (double& v : dir) v = rng.uniform(-1.0, 1.0);
    cls.functions.push_back(star);

    // One-parameter family sigmoid(logit f* + theta z) on a grid 0, +h, -h, +2h, ...
    // with h a quarter of the MLE spread at the reference sample size.
    double info = 0.0;
    for (std::size_t x = 0; x < star.size(); ++x) info += cls.input_dist[x] * star[x] * (1.0 - star[x]) * dir[x] * dir[x];
    const double h = 0.25 / std::sqrt(static_cast<double>(reference_samples) * info);
    for (int j = 1; j < class_size; ++j) {
        const double theta = h * ((j + 1) / 2) * (j % 2 ? 1.0 : -1.0);
        std::vector<double> g(star.size());
        for (std::size_t x = 0; x < g.size(); ++x) g[x] = sigmoid(std::log(star[x] / (1.0 - star[x])) + theta * dir[x]);
        cls.functions.push_back(std::move(g));
    }
    return cls;
}

ConcentrationResult concentration_experiment(const FiniteClass& cls, const std::vector<double>& f_star,
                                             std::uint64_t seed, long n_samples, double delta, long n_trials) {
    if (cls.functions.empty()) throw ConfigError("concentration: empty function class");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("concentration: delta must be in (0,1)");
    if (n_samples < 1 || n_trials < 1) throw ConfigError("concentration: sample and trial counts must be positive");
    const std::size_t nx = cls.input_dist.size();
    for (const auto& g : cls.functions) {
        if (g.size() != nx) throw ConfigError("concentration: function arity does not match input set");
    }
    if (f_star.size() != nx) throw ConfigError("concentration: f* arity does not match input set");
    if (std::find(cls.functions.begin(), cls.functions.end(), f_star) == cls.functions.end()) {
        throw ConfigError("concentration: f* is not a member of the function class");
    }

    // Cumulative input distribution for inverse-CDF sampling.
    std::vector<double> cdf(nx);
    double acc = 0.0;
    for (std::size_t x = 0; x < nx; ++x) cdf[x] = (acc += cls.input_dist[x]);

    ConcentrationResult res;
    res.bound = 2.0 * std::log(static_cast<double>(cls.functions.size()) / delta) / static_cast<double>(n_samples);
    res.required_coverage = 1.0 - delta - 2.0 * std::sqrt(delta * (1.0 - delta) / static_cast<double>(n_trials));

    std::vector<long> ones(nx), counts(nx);
    long covered = 0;
    for (long trial = 0; trial < n_trials; ++trial) {
        Rng rng(derive_seed(derive_seed(seed, kTagConc + 100), static_cast<std::uint64_t>(trial)));
        std::fill(ones.begin(), ones.end(), 0);
        std::fill(counts.begin(), counts.end(), 0);
        for (long i = 0; i < n_samples; ++i) {
            const double u = rng.uniform() * acc;
            const std::size_t x =
                std::min<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin(), nx - 1);
            ++counts[x];
            if (rng.bernoulli(f_star[x])) ++ones[x];
        }
        // Exhaustive ERM; the empirical risk only depends on per-input counts.
        std::size_t best = 0;
        double best_risk = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < cls.functions.size(); ++j) {
            const auto& g = cls.functions[j];
            double risk = 0.0;
            for (std::size_t x = 0; x < nx; ++x) {
                if (counts[x] == 0) continue;
                risk += static_cast<double>(ones[x]) * log_loss(g[x], 1.0) +
                        static_cast<double>(counts[x] - ones[x]) * log_loss(g[x], 0.0);
            }
            if (risk < best_risk) {
                best_risk = risk;
                best = j;
            }
        }
        double div = 0.0;
        for (std::size_t x = 0; x < nx; ++x) div += cls.input_dist[x] * hellinger_sq(cls.functions[best][x], f_star[x]);
        res.divergences.push_back(div);
        if (div <= res.bound) ++covered;
    }

    res.coverage = static_cast<double>(covered) / static_cast<double>(n_trials);
    std::vector<double> sorted = res.divergences;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    res.median_divergence = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    double total = 0.0;
    for (double d : sorted) total += d;
    res.mean_divergence = total / static_cast<double>(m);

    res.report.lemma_id = "log_loss_concentration";
    res.report.n_instances = n_trials;
    res.report.worst_violation = res.required_coverage - res.coverage;
    res.report.tolerance = 0.0;
    res.report.pass = res.report.worst_violation <= res.report.tolerance;
    res.report.seed = seed;
    return res;
}

ConcentrationResult concentration_experiment(std::uint64_t seed, long n_samples, int class_size, double delta,
                                             long n_trials) {
    const FiniteClass cls = make_concentration_class(seed, class_size, 8, kConcentrationReferenceSamples);
    return concentration_experiment(cls, cls.functions.front(), seed, n_samples, delta, n_trials);
}

std::vector<TheoryReport> verify_all(const TheoryOptions& opts) {
    std::vector<TheoryReport> out;
    auto append = [&out](std::vector<TheoryReport> r) { out.insert(out.end(), r.begin(), r.end()); };
    append(verify_pointwise_inequalities(opts.seed, opts.pointwise_instances));
    append(verify_norm_inequalities(opts.seed, opts.mdp_instances));
    append(verify_contraction_suite(opts.seed, opts.mdp_instances));
    append(verify_decomposition_suite(opts.seed, opts.mdp_instances, opts.decomposition_horizon));

    const auto small = concentration_experiment(opts.seed, opts.concentration_samples, opts.concentration_class_size,
                                                opts.concentration_delta, opts.concentration_trials);
    out.push_back(small.report);
    // 1/n rate: quadrupling n should at least halve the median divergence.
    const auto large = concentration_experiment(opts.seed, 4 * opts.concentration_samples,
                                                opts.concentration_class_size, opts.concentration_delta,
                                                opts.concentration_trials);
    TheoryReport rate;
    rate.lemma_id = "log_loss_concentration_rate";
    rate.n_instances = 2 * opts.concentration_trials;
    rate.worst_violation = large.median_divergence - 0.5 * small.median_divergence;
    rate.tolerance = 0.0;
    rate.pass = rate.worst_violation <= rate.tolerance;
    rate.seed = opts.seed;
    out.push_back(rate);
    return out;
}

std::string reports_to_json(const std::vector<TheoryReport>& reports) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        arr.push_back({{"lemma_id", r.lemma_id},
                       {"n_instances", r.n_instances},
                       {"worst_violation", r.worst_violation},
                       {"tolerance", r.tolerance},
                       {"pass", r.pass},
                       {"seed", r.seed}});
    }
    return arr.dump(2) + "\n";
}

}  // namespace fqilog
