#include "fqilog/fqi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fqilog/errors.hpp"
#include "fqilog/rng.hpp"

namespace fqilog {

void FqiConfig::validate(bool finite_horizon) const {
    if (k < 1) throw ConfigError("fqi.k must be >= 1");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("fqi.gamma must lie in [0,1]");
    if (gamma == 1.0 && !finite_horizon) throw ConfigError("fqi.gamma = 1 requires the finite-horizon variant");
    try {
        optimizer.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

SigmoidLinearModel FqiRun::model_at(std::size_t index) const {
    if (index >= params.size()) throw std::out_of_range("FqiRun: no parameters at index " + std::to_string(index));
    SigmoidLinearModel m(basis, n_actions);
    m.set_params(params[index]);
    return m;
}

int FqiRun::act(std::span<const double> state, int step) const {
    if (params.empty()) throw std::logic_error("FqiRun: empty run");
    std::size_t index = params.size() - 1;
    if (finite_horizon) index = std::min<std::size_t>(static_cast<std::size_t>(std::max(step, 0)), params.size() - 1);
    const int m = basis.size();
    std::vector<double> phi(static_cast<std::size_t>(m));
    basis.features_into(state, phi.data());
    const Eigen::VectorXd& th = params[index];
    int best = 0;
    double best_z = std::numeric_limits<double>::infinity();
    for (int a = 0; a < n_actions; ++a) {
        double z = 0.0;
        for (int j = 0; j < m; ++j) z += phi[j] * th[a * m + j];
        if (z < best_z) {
            best_z = z;
            best = a;
        }
    }
    return best;
}

std::vector<double> compute_targets(std::span<const double> costs, std::span<const std::uint8_t> terminal,
                                    std::span<const double> next_min, double gamma, bool clip) {
    if (costs.size() != terminal.size() || costs.size() != next_min.size()) {
        throw std::invalid_argument("compute_targets: length mismatch");
    }
    std::vector<double> t(costs.size());
    for (std::size_t i = 0; i < costs.size(); ++i) {
        const double c = costs[i];
        if (!(c >= 0.0 && c <= 1.0)) throw DataError("compute_targets: cost outside [0,1] at row " + std::to_string(i));
        double v = terminal[i] ? c : c + gamma * next_min[i];
        if (clip) v = std::clamp(v, 0.0, 1.0);
        t[i] = v;
    }
    return t;
}

namespace {

// min_a sigmoid(z_a) = sigmoid(min_a z_a)
double min_prediction(const SigmoidLinearModel& f, const double* phi, std::vector<double>& scratch) {
    f.logits_from_features(phi, scratch.data());
    return sigmoid(*std::min_element(scratch.begin(), scratch.end()));
}

Eigen::VectorXd initial_params(const FqiConfig& cfg, int n_params) {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(n_params);
    if (cfg.init == InitKind::Seeded) {
        Rng rng(cfg.init_seed);
        for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = rng.uniform(-0.1, 0.1);
    }
    return theta;
}

OptimizerReport summarize(const BfgsResult& r) {
    return {r.iters, r.evaluations, r.grad_norm, r.termination};
}

void check_view(const TransitionView& data, const FourierBasis& basis) {
    if (data.dim != basis.dim()) throw DataError("fqi: dataset state dimension does not match the basis");
    const std::size_t n = data.size(), d = static_cast<std::size_t>(data.dim);
    if (data.states.size() != n * d || data.next_states.size() != n * d || data.costs.size() != n ||
        data.terminal.size() != n) {
        throw DataError("fqi: inconsistent transition arrays");
    }
}

// Next-state features for the listed rows (terminal rows left unused).
Eigen::MatrixXd next_features(const TransitionView& data, const FourierBasis& basis,
                              std::span<const std::size_t> rows) {
    Eigen::MatrixXd phi(static_cast<Eigen::Index>(rows.size()), basis.size());
    std::vector<double> buf(static_cast<std::size_t>(basis.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (data.terminal[rows[r]]) {
            phi.row(static_cast<Eigen::Index>(r)).setZero();
            continue;
        }
        basis.features_into(data.next_state(rows[r]), buf.data());
        for (int j = 0; j < basis.size(); ++j) phi(static_cast<Eigen::Index>(r), j) = buf[j];
    }
    return phi;
}

std::vector<double> next_min_values(const Eigen::MatrixXd& phi_next, const Eigen::VectorXd& theta, int n_actions) {
    const Eigen::Index m = phi_next.cols();
    Eigen::MatrixXd th(m, n_actions);
    for (int a = 0; a < n_actions; ++a) th.col(a) = theta.segment(a * m, m);
    const Eigen::MatrixXd z = phi_next * th;
    std::vector<double> out(static_cast<std::size_t>(phi_next.rows()));
    for (Eigen::Index r = 0; r < z.rows(); ++r) out[static_cast<std::size_t>(r)] = sigmoid(z.row(r).minCoeff());
    return out;
}

}  // namespace

std::vector<double> compute_targets(const TransitionView& data, const SigmoidLinearModel& f_prev, double gamma,
                                    bool clip) {
    check_view(data, f_prev.basis());
    std::vector<double> next_min(data.size(), 0.0), phi(static_cast<std::size_t>(f_prev.n_features())),
        scratch(static_cast<std::size_t>(f_prev.n_actions()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.terminal[i]) continue;
        f_prev.basis().features_into(data.next_state(i), phi.data());
        next_min[i] = min_prediction(f_prev, phi.data(), scratch);
    }
    return compute_targets(data.costs, data.terminal, next_min, gamma, clip);
}

int greedy_action(const SigmoidLinearModel& model, std::span<const double> state) {
    const auto phi = model.basis().features(state);
    std::vector<double> z(static_cast<std::size_t>(model.n_actions()));
    model.logits_from_features(phi.data(), z.data());
    return static_cast<int>(std::min_element(z.begin(), z.end()) - z.begin());
}

int greedy_action(const SaTable& f, int state) {
    const auto row = f.row(state);
    return static_cast<int>(std::min_element(row.begin(), row.end()) - row.begin());
}

FqiRun fqi_stationary(const TransitionView& data, const FourierBasis& basis, int n_actions, const FqiConfig& config) {
    config.validate(false);
    check_view(data, basis);
    if (data.size() == 0) throw DataError("fqi: empty dataset");

    FqiRun run;
    run.basis = basis;
    run.n_actions = n_actions;
    const FeatureBatch batch = make_feature_batch(basis, n_actions, data.states, data.actions);
    std::vector<std::size_t> all(data.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const Eigen::MatrixXd phi_next = next_features(data, basis, all);

    const int n_params = n_actions * basis.size();
    Eigen::VectorXd theta = initial_params(config, n_params);
    for (int j = 1; j <= config.k; ++j) {
        const auto next_min = next_min_values(phi_next, theta, n_actions);
        const auto targets = compute_targets(data.costs, data.terminal, next_min, config.gamma, config.target_clip);
        const Objective obj = [&](const Eigen::VectorXd& x) {
            return empirical_objective(batch, x, targets, config.loss);
        };
        const BfgsResult res = bfgs_minimize(obj, theta, config.optimizer);
        theta = res.x_star;
        run.params.push_back(theta);
        run.train_loss.push_back(res.f_star);
        run.reports.push_back(summarize(res));
    }
    return run;
}

FqiRun fqi_finite_horizon(const TransitionView& data, int horizon, const FourierBasis& basis, int n_actions,
                          const FqiConfig& config) {
    config.validate(true);
    check_view(data, basis);
    if (horizon < 1) throw ConfigError("fqi: horizon must be >= 1");
    if (data.steps.size() != data.size()) throw DataError("fqi: transitions lack step indices");

    std::vector<std::vector<std::size_t>> by_step(static_cast<std::size_t>(horizon));
    for (std::size_t i = 0; i < data.size(); ++i) {
        const int h = data.steps[i];
        if (h < 0 || h >= horizon) {
            throw DataError("fqi: step index " + std::to_string(h) + " outside horizon " + std::to_string(horizon));
        }
        by_step[static_cast<std::size_t>(h)].push_back(i);
    }

    FqiRun run;
    run.basis = basis;
    run.n_actions = n_actions;
    run.finite_horizon = true;
    const int n_params = n_actions * basis.size();
    const std::size_t H = static_cast<std::size_t>(horizon);
    run.params.assign(H, Eigen::VectorXd());
    run.train_loss.assign(H, 0.0);
    run.reports.assign(H, OptimizerReport{});

    const std::size_t d = static_cast<std::size_t>(data.dim);
    Eigen::VectorXd theta = initial_params(config, n_params);
    Eigen::VectorXd theta_next;  // f_{h+1}; empty means identically zero
    for (std::size_t hh = H; hh-- > 0;) {
        const auto& rows = by_step[hh];
        if (rows.empty()) {
            run.params[hh] = theta;
            theta_next = theta;
            continue;
        }
        std::vector<double> states(rows.size() * d), costs(rows.size()), next_min(rows.size(), 0.0);
        std::vector<int> actions(rows.size());
        std::vector<std::uint8_t> term(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto s = data.state(rows[r]);
            std::copy(s.begin(), s.end(), states.begin() + static_cast<std::ptrdiff_t>(r * d));
            actions[r] = data.actions[rows[r]];
            costs[r] = data.costs[rows[r]];
            term[r] = data.terminal[rows[r]] || hh + 1 == H;
        }
        if (theta_next.size() > 0) {
            const Eigen::MatrixXd phi_next = next_features(data, basis, rows);
            next_min = next_min_values(phi_next, theta_next, n_actions);
        }
        const auto targets = compute_targets(costs, term, next_min, 1.0, config.target_clip);
        const FeatureBatch batch = make_feature_batch(basis, n_actions, std::span<const double>(states), actions);
        const Objective obj = [&](const Eigen::VectorXd& x) {
            return empirical_objective(batch, x, targets, config.loss);
        };
        const BfgsResult res = bfgs_minimize(obj, theta, config.optimizer);
        theta = res.x_star;
        theta_next = theta;
        run.params[hh] = theta;
        run.train_loss[hh] = res.f_star;
        run.reports[hh] = summarize(res);
    }
    return run;
}

namespace {

void check_tabular(const TabularTransitions& data, int n_states, int n_actions) {
    const std::size_t n = data.states.size();
    if (data.actions.size() != n || data.costs.size() != n || data.next_states.size() != n ||
        data.terminal.size() != n) {
        throw DataError("tabular fqi: inconsistent transition arrays");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (data.states[i] < 0 || data.states[i] >= n_states || data.next_states[i] < 0 ||
            data.next_states[i] >= n_states || data.actions[i] < 0 || data.actions[i] >= n_actions) {
            throw DataError("tabular fqi: index out of range at row " + std::to_string(i));
        }
    }
}

}  // namespace

std::vector<QTable> fqi_tabular(const TabularTransitions& data, int n_states, int n_actions, const FqiConfig& config) {
    config.validate(false);
    check_tabular(data, n_states, n_actions);
    std::vector<QTable> iterates;
    QTable f(n_states, n_actions, 0.0);
    std::vector<double> next_min(data.states.size());
    for (int j = 1; j <= config.k; ++j) {
        const auto fmin = min_over_actions(f);
        for (std::size_t i = 0; i < next_min.size(); ++i) next_min[i] = fmin[static_cast<std::size_t>(data.next_states[i])];
        const auto targets = compute_targets(data.costs, data.terminal, next_min, config.gamma, config.target_clip);
        f = tabular_fit(n_states, n_actions, data.states, data.actions, targets, config.loss).values;
        iterates.push_back(f);
    }
    return iterates;
}

TabularMdp empirical_mdp(const TabularTransitions& data, int n_states, int n_actions, double gamma) {
    check_tabular(data, n_states, n_actions);
    const std::size_t S = static_cast<std::size_t>(n_states), A = static_cast<std::size_t>(n_actions);
    std::vector<double> counts(S * A * S, 0.0), cost(S * A, 0.0), visits(S * A, 0.0);
    for (std::size_t i = 0; i < data.states.size(); ++i) {
        const std::size_t sa = static_cast<std::size_t>(data.states[i]) * A + static_cast<std::size_t>(data.actions[i]);
        if (data.terminal[i]) throw DataError("empirical_mdp: terminal transitions are not supported");
        counts[sa * S + static_cast<std::size_t>(data.next_states[i])] += 1.0;
        cost[sa] += data.costs[i];
        visits[sa] += 1.0;
    }
    for (std::size_t sa = 0; sa < S * A; ++sa) {
        if (visits[sa] == 0.0) throw DataError("empirical_mdp: unobserved state-action pair");
        cost[sa] /= visits[sa];
        for (std::size_t s2 = 0; s2 < S; ++s2) counts[sa * S + s2] /= visits[sa];
    }
    return TabularMdp(n_states, n_actions, std::move(counts), std::move(cost), gamma);
}

}  // namespace fqilog
