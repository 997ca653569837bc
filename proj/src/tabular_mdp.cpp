#include "fqilog/tabular_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "fqilog/rng.hpp"

namespace fqilog {

SaTable::SaTable(int s, int a, double fill) : n_states(s), n_actions(a) {
    if (s <= 0 || a <= 0) throw std::invalid_argument("SaTable: sizes must be positive");
    values.assign(static_cast<std::size_t>(s) * a, fill);
}

TabularPolicy TabularPolicy::deterministic(int n_states, int n_actions, std::span<const int> actions) {
    if (actions.size() != static_cast<std::size_t>(n_states)) {
        throw std::invalid_argument("deterministic policy: one action per state required");
    }
    TabularPolicy pi(n_states, n_actions, 0.0);
    for (int s = 0; s < n_states; ++s) {
        if (actions[s] < 0 || actions[s] >= n_actions) throw std::invalid_argument("action index out of range");
        pi(s, actions[s]) = 1.0;
    }
    return pi;
}

TabularPolicy TabularPolicy::uniform(int n_states, int n_actions) {
    return TabularPolicy(n_states, n_actions, 1.0 / n_actions);
}

const TabularPolicy& NonstationaryPolicy::at(int h) const {
    if (steps.empty()) throw std::invalid_argument("empty nonstationary policy");
    if (h < 1) throw std::invalid_argument("step index must be >= 1");
    return steps[std::min<std::size_t>(static_cast<std::size_t>(h - 1), steps.size() - 1)];
}

TabularMdp::TabularMdp(int n_states, int n_actions, std::vector<double> transition, std::vector<double> cost,
                       double discount)
    : n_states_(n_states),
      n_actions_(n_actions),
      transition_(std::move(transition)),
      cost_(std::move(cost)),
      discount_(discount) {
    if (n_states <= 0 || n_actions <= 0) throw std::invalid_argument("TabularMdp: sizes must be positive");
    if (!(discount >= 0.0 && discount < 1.0)) throw std::invalid_argument("TabularMdp: discount must be in [0,1)");
    const auto sa = static_cast<std::size_t>(n_states) * n_actions;
    if (transition_.size() != sa * n_states) throw std::invalid_argument("TabularMdp: transition shape mismatch");
    if (cost_.size() != sa) throw std::invalid_argument("TabularMdp: cost shape mismatch");
    for (std::size_t i = 0; i < sa; ++i) {
        double total = 0.0;
        for (int j = 0; j < n_states; ++j) {
            const double v = transition_[i * n_states + j];
            if (!(v >= 0.0)) throw std::invalid_argument("TabularMdp: negative transition probability");
            total += v;
        }
        if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("TabularMdp: transition row does not sum to 1");
        const double c = cost_[i];
        if (!(c >= 0.0 && c <= 1.0 - discount + 1e-15)) {
            throw std::invalid_argument("TabularMdp: cost outside [0, 1 - gamma]");
        }
    }
}

std::string TabularMdp::dump() const {
    std::ostringstream out;
    out.precision(17);
    out << "mdp states=" << n_states_ << " actions=" << n_actions_ << " discount=" << discount_ << '\n';
    for (int s = 0; s < n_states_; ++s) {
        for (int a = 0; a < n_actions_; ++a) {
            out << "s=" << s << " a=" << a << " c=" << c(s, a) << " P=[";
            const auto r = row(s, a);
            for (std::size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << r[j];
            out << "]\n";
        }
    }
    return out.str();
}

TabularMdp random_mdp(std::uint64_t seed, int n_states, int n_actions, double gamma) {
    if (n_states < 1 || n_actions < 1) throw std::invalid_argument("random_mdp: sizes must be >= 1");
    Rng rng(seed);
    const auto sa = static_cast<std::size_t>(n_states) * n_actions;
    std::vector<double> p;
    p.reserve(sa * n_states);
    for (std::size_t i = 0; i < sa; ++i) {
        auto r = rng.dirichlet(static_cast<std::size_t>(n_states));
        // Renormalize once more so the row sum is as close to 1 as doubles allow.
        double total = 0.0;
        for (double v : r) total += v;
        for (double& v : r) v /= total;
        p.insert(p.end(), r.begin(), r.end());
    }
    std::vector<double> c(sa);
    for (auto& v : c) v = rng.uniform() * (1.0 - gamma);
    return TabularMdp(n_states, n_actions, std::move(p), std::move(c), gamma);
}

std::vector<double> min_over_actions(const SaTable& f) {
    std::vector<double> out(static_cast<std::size_t>(f.n_states));
    for (int s = 0; s < f.n_states; ++s) {
        const auto r = f.row(s);
        out[s] = *std::min_element(r.begin(), r.end());
    }
    return out;
}

namespace {

void require_shape(const TabularMdp& mdp, const SaTable& f) {
    if (f.n_states != mdp.n_states() || f.n_actions != mdp.n_actions()) {
        throw std::invalid_argument("table shape does not match MDP");
    }
}

QTable backup(const TabularMdp& mdp, const std::vector<double>& next_value) {
    QTable out(mdp.n_states(), mdp.n_actions());
    const double g = mdp.discount();
    for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            const auto r = mdp.row(s, a);
            double ev = 0.0;
            for (int j = 0; j < mdp.n_states(); ++j) ev += r[j] * next_value[j];
            out(s, a) = mdp.c(s, a) + g * ev;
        }
    }
    return out;
}

double stop_threshold(double tol, double gamma) {
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    return gamma == 0.0 ? std::numeric_limits<double>::infinity() : tol * (1.0 - gamma) / gamma;
}

}  // namespace

QTable bellman_apply(const TabularMdp& mdp, const SaTable& f) {
    require_shape(mdp, f);
    return backup(mdp, min_over_actions(f));
}

QTable policy_bellman_apply(const TabularMdp& mdp, const TabularPolicy& pi, const SaTable& f) {
    require_shape(mdp, f);
    require_shape(mdp, pi);
    return backup(mdp, state_values(f, pi));
}

std::vector<int> greedy_actions(const SaTable& f) {
    std::vector<int> out(static_cast<std::size_t>(f.n_states));
    for (int s = 0; s < f.n_states; ++s) {
        const auto r = f.row(s);
        out[s] = static_cast<int>(std::min_element(r.begin(), r.end()) - r.begin());
    }
    return out;
}

TabularPolicy greedy_policy_of(const SaTable& f) {
    const auto acts = greedy_actions(f);
    return TabularPolicy::deterministic(f.n_states, f.n_actions, acts);
}

QTable optimal_q(const TabularMdp& mdp, double tol) {
    const double threshold = stop_threshold(tol, mdp.discount());
    QTable q(mdp.n_states(), mdp.n_actions(), 0.0);
    for (;;) {
        QTable next = bellman_apply(mdp, q);
        const double step = sup_norm_diff(next, q);
        q = std::move(next);
        if (step <= threshold) return q;
    }
}

QTable policy_q(const TabularMdp& mdp, const TabularPolicy& pi, double tol) {
    const double threshold = stop_threshold(tol, mdp.discount());
    QTable q(mdp.n_states(), mdp.n_actions(), 0.0);
    for (;;) {
        QTable next = policy_bellman_apply(mdp, pi, q);
        const double step = sup_norm_diff(next, q);
        q = std::move(next);
        if (step <= threshold) return q;
    }
}

QTable policy_q_exact(const TabularMdp& mdp, const TabularPolicy& pi) {
    require_shape(mdp, pi);
    const int S = mdp.n_states();
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(S, S);
    Eigen::VectorXd c_pi = Eigen::VectorXd::Zero(S);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            const double w = pi(s, a);
            if (w == 0.0) continue;
            c_pi(s) += w * mdp.c(s, a);
            const auto r = mdp.row(s, a);
            for (int j = 0; j < S; ++j) m(s, j) -= mdp.discount() * w * r[j];
        }
    }
    const Eigen::VectorXd v = m.partialPivLu().solve(c_pi);
    std::vector<double> vs(v.data(), v.data() + S);
    // Costs are nonnegative, so v >= 0; clear rounding noise below zero.
    for (double& x : vs) x = std::max(x, 0.0);
    return backup(mdp, vs);
}

QTable optimal_q_exact(const TabularMdp& mdp) {
    std::vector<int> actions(static_cast<std::size_t>(mdp.n_states()), 0);
    QTable q = policy_q_exact(mdp, TabularPolicy::deterministic(mdp.n_states(), mdp.n_actions(), actions));
    for (int iter = 0; iter < 10000; ++iter) {
        // Switch only on strict improvement beyond rounding to guarantee termination.
        bool changed = false;
        for (int s = 0; s < mdp.n_states(); ++s) {
            const auto r = q.row(s);
            const int best = static_cast<int>(std::min_element(r.begin(), r.end()) - r.begin());
            if (r[best] < r[actions[s]] - 1e-15) {
                actions[s] = best;
                changed = true;
            }
        }
        if (!changed) return q;
        q = policy_q_exact(mdp, TabularPolicy::deterministic(mdp.n_states(), mdp.n_actions(), actions));
    }
    throw std::runtime_error("optimal_q_exact: policy iteration did not terminate");
}

std::vector<double> state_values(const SaTable& q, const TabularPolicy& pi) {
    if (!q.same_shape(pi)) throw std::invalid_argument("state_values: shape mismatch");
    std::vector<double> v(static_cast<std::size_t>(q.n_states), 0.0);
    for (int s = 0; s < q.n_states; ++s) {
        for (int a = 0; a < q.n_actions; ++a) v[s] += pi(s, a) * q(s, a);
    }
    return v;
}

StateDist propagate(const TabularMdp& mdp, const StateDist& eta, const TabularPolicy& pi) {
    if (eta.size() != static_cast<std::size_t>(mdp.n_states())) throw std::invalid_argument("propagate: shape mismatch");
    require_shape(mdp, pi);
    StateDist out(eta.size(), 0.0);
    for (int s = 0; s < mdp.n_states(); ++s) {
        if (eta[s] == 0.0) continue;
        for (int a = 0; a < mdp.n_actions(); ++a) {
            const double w = eta[s] * pi(s, a);
            if (w == 0.0) continue;
            const auto r = mdp.row(s, a);
            for (int j = 0; j < mdp.n_states(); ++j) out[j] += w * r[j];
        }
    }
    return out;
}

StateDist occupancy(const TabularMdp& mdp, const StateDist& eta1, const TabularPolicy& pi, int h) {
    if (h < 1) throw std::invalid_argument("occupancy: h must be >= 1");
    StateDist eta = eta1;
    for (int i = 1; i < h; ++i) eta = propagate(mdp, eta, pi);
    return eta;
}

StateDist occupancy(const TabularMdp& mdp, const StateDist& eta1, const NonstationaryPolicy& pi, int h) {
    if (h < 1) throw std::invalid_argument("occupancy: h must be >= 1");
    StateDist eta = eta1;
    for (int i = 1; i < h; ++i) eta = propagate(mdp, eta, pi.at(i));
    return eta;
}

StateActionDist joint(const StateDist& eta, const TabularPolicy& pi) {
    if (eta.size() != static_cast<std::size_t>(pi.n_states)) throw std::invalid_argument("joint: shape mismatch");
    StateActionDist nu(pi.n_states, pi.n_actions, 0.0);
    for (int s = 0; s < pi.n_states; ++s) {
        for (int a = 0; a < pi.n_actions; ++a) nu(s, a) = eta[s] * pi(s, a);
    }
    return nu;
}

StateDist push_forward(const TabularMdp& mdp, const StateActionDist& nu) {
    require_shape(mdp, nu);
    StateDist out(static_cast<std::size_t>(mdp.n_states()), 0.0);
    for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            const double w = nu(s, a);
            if (w == 0.0) continue;
            const auto r = mdp.row(s, a);
            for (int j = 0; j < mdp.n_states(); ++j) out[j] += w * r[j];
        }
    }
    return out;
}

double value_of(std::span<const double> eta, std::span<const double> v) {
    if (eta.size() != v.size()) throw std::invalid_argument("value_of: shape mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i) total += eta[i] * v[i];
    return total;
}

std::vector<std::vector<double>> max_arrival_probabilities(const TabularMdp& mdp, const StateDist& eta1,
                                                           int horizon) {
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    const int S = mdp.n_states();
    if (eta1.size() != static_cast<std::size_t>(S)) throw std::invalid_argument("eta1 shape mismatch");
    std::vector<std::vector<double>> rho(static_cast<std::size_t>(horizon), std::vector<double>(S, 0.0));
    // For each target state, backward DP over the number of remaining steps:
    // w_t(s) = best probability of sitting in the target exactly t steps from s.
    std::vector<double> w(S), next(S);
    for (int target = 0; target < S; ++target) {
        std::fill(w.begin(), w.end(), 0.0);
        w[target] = 1.0;
        for (int h = 1; h <= horizon; ++h) {
            rho[h - 1][target] = value_of(eta1, w);
            if (h == horizon) break;
            for (int s = 0; s < S; ++s) {
                double best = 0.0;
                for (int a = 0; a < mdp.n_actions(); ++a) best = std::max(best, value_of(mdp.row(s, a), w));
                next[s] = best;
            }
            std::swap(w, next);
        }
    }
    return rho;
}

double concentrability(const TabularMdp& mdp, const StateDist& eta1, const StateActionDist& mu, int horizon) {
    require_shape(mdp, mu);
    const auto rho = max_arrival_probabilities(mdp, eta1, horizon);
    double worst = 0.0;
    for (const auto& rh : rho) {
        for (int s = 0; s < mdp.n_states(); ++s) {
            if (rh[s] <= 0.0) continue;
            for (int a = 0; a < mdp.n_actions(); ++a) {
                if (mu(s, a) <= 0.0) return std::numeric_limits<double>::infinity();
                worst = std::max(worst, rh[s] / mu(s, a));
            }
        }
    }
    return worst;
}

double weighted_norm(std::span<const double> g, std::span<const double> nu, double p) {
    if (g.size() != nu.size()) throw std::invalid_argument("weighted_norm: shape mismatch");
    if (!(p >= 1.0)) throw std::invalid_argument("weighted_norm: p must be >= 1");
    double total = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (nu[i] == 0.0) continue;
        total += nu[i] * (p == 1.0 ? std::abs(g[i]) : p == 2.0 ? g[i] * g[i] : std::pow(std::abs(g[i]), p));
    }
    return p == 1.0 ? total : p == 2.0 ? std::sqrt(total) : std::pow(total, 1.0 / p);
}

double weighted_norm(const SaTable& g, const SaTable& nu, double p) {
    if (!g.same_shape(nu)) throw std::invalid_argument("weighted_norm: shape mismatch");
    return weighted_norm(std::span<const double>(g.values), std::span<const double>(nu.values), p);
}

double sup_norm_diff(const SaTable& a, const SaTable& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("sup_norm_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

}  // namespace fqilog
