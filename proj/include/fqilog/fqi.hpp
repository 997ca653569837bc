#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fqilog/bfgs.hpp"
#include "fqilog/core_math.hpp"
#include "fqilog/features.hpp"
#include "fqilog/tabular_mdp.hpp"

namespace fqilog {

/// Non-owning view of a batch of transitions; states are row-major [n x dim].
struct TransitionView {
    int dim = 0;
    std::span<const double> states;
    std::span<const int> actions;
    std::span<const double> costs;
    std::span<const double> next_states;
    std::span<const std::uint8_t> terminal;
    std::span<const int> steps;

    std::size_t size() const { return actions.size(); }
    std::span<const double> state(std::size_t i) const {
        return states.subspan(i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim));
    }
    std::span<const double> next_state(std::size_t i) const {
        return next_states.subspan(i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim));
    }
};

enum class InitKind { Zeros, Seeded };

struct FqiConfig {
    LossKind loss = LossKind::Log;
    int k = 100;
    double gamma = 0.95;
    BfgsOptions optimizer;
    InitKind init = InitKind::Zeros;
    std::uint64_t init_seed = 0;
    bool target_clip = true;

    /// Throws ConfigError. gamma = 1 is accepted only when finite_horizon is set.
    void validate(bool finite_horizon) const;
};

struct OptimizerReport {
    int iters = 0;
    int evaluations = 0;
    double grad_norm = 0.0;
    BfgsTermination termination = BfgsTermination::GradTol;
};

/// Output of a parametric FQI run. For the stationary loop params[j] is
/// theta_{j+1}; for the finite-horizon variant params[h] is theta for step h
/// (0-based) and the greedy policy is nonstationary.
struct FqiRun {
    FourierBasis basis;
    int n_actions = 0;
    bool finite_horizon = false;
    std::vector<Eigen::VectorXd> params;
    std::vector<double> train_loss;
    std::vector<OptimizerReport> reports;

    SigmoidLinearModel model_at(std::size_t index) const;
    /// Greedy action for `state` at 0-based `step`; the stationary run
    /// ignores the step and uses the last iterate.
    int act(std::span<const double> state, int step) const;
};

/// target_i = C_i + gamma * next_min_i, or C_i on terminal transitions;
/// clamped to [0,1] when clip is set. Throws DataError for costs outside [0,1].
std::vector<double> compute_targets(std::span<const double> costs, std::span<const std::uint8_t> terminal,
                                    std::span<const double> next_min, double gamma, bool clip);

/// Same, with next_min_i = min_a f_prev(S'_i, a).
std::vector<double> compute_targets(const TransitionView& data, const SigmoidLinearModel& f_prev, double gamma,
                                    bool clip);

/// argmin_a f(s, a), smallest index on ties. Compared in the logit domain,
/// which preserves the order of f.
int greedy_action(const SigmoidLinearModel& model, std::span<const double> state);
int greedy_action(const SaTable& f, int state);

/// Discounted FQI with warm-started BFGS regressions.
FqiRun fqi_stationary(const TransitionView& data, const FourierBasis& basis, int n_actions, const FqiConfig& config);

/// Backward induction over steps H-1..0 with gamma = 1 and f_H = 0; each
/// step regresses on the transitions tagged with that step.
FqiRun fqi_finite_horizon(const TransitionView& data, int horizon, const FourierBasis& basis, int n_actions,
                          const FqiConfig& config);

/// Transitions over a finite state space.
struct TabularTransitions {
    std::vector<int> states;
    std::vector<int> actions;
    std::vector<double> costs;
    std::vector<int> next_states;
    std::vector<std::uint8_t> terminal;
};

/// FQI over [0,1]^{S x A} with f_0 = 0. Returns f_1..f_k.
std::vector<QTable> fqi_tabular(const TabularTransitions& data, int n_states, int n_actions, const FqiConfig& config);

/// Empirical MDP: P_hat from transition counts and c_hat from mean costs.
/// Every (s, a) must be observed.
TabularMdp empirical_mdp(const TabularTransitions& data, int n_states, int n_actions, double gamma);

}  // namespace fqilog
