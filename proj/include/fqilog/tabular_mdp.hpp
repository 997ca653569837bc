#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fqilog {

/// Dense [S x A] table. Used for action-value functions, state-action
/// distributions and stochastic policies alike; the meaning is carried by the
/// wrapper types below.
struct SaTable {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> values;  // row-major: values[s * n_actions + a]

    SaTable() = default;
    SaTable(int s, int a, double fill = 0.0);

    double& operator()(int s, int a) { return values[static_cast<std::size_t>(s) * n_actions + a]; }
    double operator()(int s, int a) const { return values[static_cast<std::size_t>(s) * n_actions + a]; }
    std::span<const double> row(int s) const {
        return {values.data() + static_cast<std::size_t>(s) * n_actions, static_cast<std::size_t>(n_actions)};
    }
    bool same_shape(const SaTable& o) const { return n_states == o.n_states && n_actions == o.n_actions; }
};

/// Action-value function (q^pi, q*, or an FQI iterate). Entries finite, >= 0.
struct QTable : SaTable {
    using SaTable::SaTable;
};

/// Joint distribution over state-action pairs (nu, mu, eta x pi).
struct StateActionDist : SaTable {
    using SaTable::SaTable;
};

/// Stationary Markov policy, row-stochastic.
struct TabularPolicy : SaTable {
    using SaTable::SaTable;
    static TabularPolicy deterministic(int n_states, int n_actions, std::span<const int> actions);
    static TabularPolicy uniform(int n_states, int n_actions);
};

/// Markov nonstationary policy: policy at step h (1-based) is steps[h-1];
/// the last entry repeats for later steps.
struct NonstationaryPolicy {
    std::vector<TabularPolicy> steps;
    const TabularPolicy& at(int h) const;
};

using StateDist = std::vector<double>;

/// Finite discounted MDP with costs normalized so that 0 <= c <= 1 - gamma.
class TabularMdp {
public:
    /// Validates shapes, row-stochasticity (1e-12), nonnegativity and the
    /// cost normalization. Throws std::invalid_argument on violation.
    TabularMdp(int n_states, int n_actions, std::vector<double> transition, std::vector<double> cost,
               double discount);

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    double discount() const { return discount_; }

    /// P(s' | s, a)
    double p(int s, int a, int s_next) const {
        return transition_[(static_cast<std::size_t>(s) * n_actions_ + a) * n_states_ + s_next];
    }
    std::span<const double> row(int s, int a) const {
        return {transition_.data() + (static_cast<std::size_t>(s) * n_actions_ + a) * n_states_,
                static_cast<std::size_t>(n_states_)};
    }
    double c(int s, int a) const { return cost_[static_cast<std::size_t>(s) * n_actions_ + a]; }

    const std::vector<double>& transition() const { return transition_; }
    const std::vector<double>& cost() const { return cost_; }

    /// Debug dump: header line, then one line per (s, a) with cost and row.
    std::string dump() const;

private:
    int n_states_;
    int n_actions_;
    std::vector<double> transition_;
    std::vector<double> cost_;
    double discount_;
};

/// Random instance: flat Dirichlet rows, costs uniform in [0, 1 - gamma].
TabularMdp random_mdp(std::uint64_t seed, int n_states, int n_actions, double gamma);

/// f^(s) = min_a f(s, a)
std::vector<double> min_over_actions(const SaTable& f);

/// (T f)(s,a) = c(s,a) + gamma * sum_s' P(s'|s,a) min_a' f(s',a')
QTable bellman_apply(const TabularMdp& mdp, const SaTable& f);

/// Policy evaluation operator: c + gamma * P (sum_a pi(a|s') f(s',a)).
QTable policy_bellman_apply(const TabularMdp& mdp, const TabularPolicy& pi, const SaTable& f);

/// Deterministic greedy policy; ties go to the smallest action index.
TabularPolicy greedy_policy_of(const SaTable& f);
std::vector<int> greedy_actions(const SaTable& f);

/// Value iteration from zero; guarantees sup-norm error <= tol.
QTable optimal_q(const TabularMdp& mdp, double tol);

/// Iterative policy evaluation; guarantees sup-norm error <= tol.
QTable policy_q(const TabularMdp& mdp, const TabularPolicy& pi, double tol);

/// q^pi by a direct linear solve of (I - gamma P_pi) v = c_pi. Exact to
/// rounding; used where oracles need q without iteration error.
QTable policy_q_exact(const TabularMdp& mdp, const TabularPolicy& pi);

/// q* by policy iteration with exact evaluation.
QTable optimal_q_exact(const TabularMdp& mdp);

/// v(s) = sum_a pi(a|s) q(s,a)
std::vector<double> state_values(const SaTable& q, const TabularPolicy& pi);

/// One step of state propagation: eta'(s') = sum_{s,a} eta(s) pi(a|s) P(s'|s,a).
StateDist propagate(const TabularMdp& mdp, const StateDist& eta, const TabularPolicy& pi);

/// eta_h^pi: eta1 propagated h - 1 steps. Throws for h < 1.
StateDist occupancy(const TabularMdp& mdp, const StateDist& eta1, const TabularPolicy& pi, int h);
StateDist occupancy(const TabularMdp& mdp, const StateDist& eta1, const NonstationaryPolicy& pi, int h);

/// eta x pi
StateActionDist joint(const StateDist& eta, const TabularPolicy& pi);

/// nu P: distribution of S' ~ P(.|S,A), (S,A) ~ nu.
StateDist push_forward(const TabularMdp& mdp, const StateActionDist& nu);

/// <eta, v>; throws on shape mismatch.
double value_of(std::span<const double> eta, std::span<const double> v);

/// Lower bound on the concentrability coefficient: max over h <= horizon and
/// (s, a) of rho_h(s) / mu(s, a), with rho_h(s) the largest probability any
/// nonstationary policy assigns to S_h = s. Returns +inf when some reachable
/// pair has mu = 0.
double concentrability(const TabularMdp& mdp, const StateDist& eta1, const StateActionDist& mu, int horizon);

/// rho_h(s) for h = 1..horizon, row-major [h-1][s].
std::vector<std::vector<double>> max_arrival_probabilities(const TabularMdp& mdp, const StateDist& eta1,
                                                           int horizon);

/// Weighted norms over state-action pairs: (sum nu |g|^p)^(1/p).
double weighted_norm(const SaTable& g, const SaTable& nu, double p);
double weighted_norm(std::span<const double> g, std::span<const double> nu, double p);

double sup_norm_diff(const SaTable& a, const SaTable& b);

}  // namespace fqilog
