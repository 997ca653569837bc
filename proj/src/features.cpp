#include "fqilog/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fqilog {

BoxBounds::BoxBounds(std::vector<double> lo_, std::vector<double> hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
    if (lo.size() != hi.size() || lo.empty()) throw std::invalid_argument("BoxBounds: dimension mismatch");
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (!(lo[i] < hi[i])) throw std::invalid_argument("BoxBounds: lo must be below hi");
    }
}

FourierBasis::FourierBasis(int order, BoxBounds bounds) : order_(order), bounds_(std::move(bounds)) {
    if (order < 1) throw std::invalid_argument("FourierBasis: order must be >= 1");
    const int d = dim();
    if (d < 1) throw std::invalid_argument("FourierBasis: empty bounds");
    std::size_t count = 1;
    for (int i = 0; i < d; ++i) count *= static_cast<std::size_t>(order);
    coefficients_.reserve(count);
    // Mixed-radix counter, last coordinate fastest.
    std::vector<int> c(static_cast<std::size_t>(d), 0);
    for (std::size_t k = 0; k < count; ++k) {
        coefficients_.push_back(c);
        for (int i = d - 1; i >= 0; --i) {
            if (++c[i] < order) break;
            c[i] = 0;
        }
    }
}

void FourierBasis::features_into(std::span<const double> state, double* out) const {
    const int d = dim();
    if (static_cast<int>(state.size()) != d) throw std::domain_error("fourier_features: state dimension mismatch");
    double xbar[8];
    std::vector<double> heap;
    double* x = xbar;
    if (d > 8) {
        heap.resize(static_cast<std::size_t>(d));
        x = heap.data();
    }
    for (int i = 0; i < d; ++i) {
        double v = state[i];
        const double lo = bounds_.lo[i], hi = bounds_.hi[i];
        if (!(v >= lo - kClipTolerance && v <= hi + kClipTolerance)) {
            throw std::domain_error("fourier_features: coordinate " + std::to_string(i) + " = " + std::to_string(v) +
                                    " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
        v = std::clamp(v, lo, hi);
        x[i] = (v - lo) / (hi - lo);
    }
    for (std::size_t j = 0; j < coefficients_.size(); ++j) {
        double arg = 0.0;
        const auto& c = coefficients_[j];
        for (int i = 0; i < d; ++i) arg += c[i] * x[i];
        out[j] = std::cos(std::numbers::pi * arg);
    }
}

std::vector<double> FourierBasis::features(std::span<const double> state) const {
    std::vector<double> out(coefficients_.size());
    features_into(state, out.data());
    return out;
}

std::vector<double> fourier_features(const FourierBasis& basis, std::span<const double> state) {
    return basis.features(state);
}

SigmoidLinearModel::SigmoidLinearModel(FourierBasis basis, int n_actions)
    : basis_(std::move(basis)), n_actions_(n_actions) {
    if (n_actions < 1) throw std::invalid_argument("SigmoidLinearModel: need at least one action");
    params_ = Eigen::VectorXd::Zero(n_params());
}

void SigmoidLinearModel::set_params(const Eigen::VectorXd& theta) {
    if (theta.size() != n_params()) throw std::invalid_argument("SigmoidLinearModel: parameter count mismatch");
    params_ = theta;
}

void SigmoidLinearModel::check_action(int action) const {
    if (action < 0 || action >= n_actions_) throw std::out_of_range("model: bad action index " + std::to_string(action));
}

double SigmoidLinearModel::logit(std::span<const double> state, int action) const {
    check_action(action);
    const auto phi = basis_.features(state);
    const int m = n_features();
    double z = 0.0;
    for (int j = 0; j < m; ++j) z += phi[j] * params_[action * m + j];
    return z;
}

double SigmoidLinearModel::predict(std::span<const double> state, int action) const {
    return sigmoid(logit(state, action));
}

Eigen::VectorXd SigmoidLinearModel::gradient(std::span<const double> state, int action) const {
    check_action(action);
    const auto phi = basis_.features(state);
    const int m = n_features();
    double z = 0.0;
    for (int j = 0; j < m; ++j) z += phi[j] * params_[action * m + j];
    const double p = sigmoid(z);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n_params());
    for (int j = 0; j < m; ++j) g[action * m + j] = p * (1.0 - p) * phi[j];
    return g;
}

void SigmoidLinearModel::logits_from_features(const double* phi, double* out) const {
    const int m = n_features();
    for (int a = 0; a < n_actions_; ++a) {
        double z = 0.0;
        const double* th = params_.data() + static_cast<std::ptrdiff_t>(a) * m;
        for (int j = 0; j < m; ++j) z += phi[j] * th[j];
        out[a] = z;
    }
}

namespace {

FeatureBatch batch_skeleton(const FourierBasis& basis, int n_actions, std::span<const int> actions) {
    FeatureBatch b;
    b.n_features = basis.size();
    b.n_actions = n_actions;
    b.n_samples = actions.size();
    b.rows.resize(static_cast<std::size_t>(n_actions));
    for (std::size_t i = 0; i < actions.size(); ++i) {
        const int a = actions[i];
        if (a < 0 || a >= n_actions) throw std::out_of_range("feature batch: bad action index");
        b.rows[static_cast<std::size_t>(a)].push_back(i);
    }
    b.phi.resize(static_cast<std::size_t>(n_actions));
    for (int a = 0; a < n_actions; ++a) {
        b.phi[static_cast<std::size_t>(a)].resize(static_cast<Eigen::Index>(b.rows[a].size()), b.n_features);
    }
    return b;
}

}  // namespace

FeatureBatch make_feature_batch(const FourierBasis& basis, int n_actions, std::span<const double> states,
                                std::span<const int> actions) {
    const std::size_t d = static_cast<std::size_t>(basis.dim());
    if (states.size() != actions.size() * d) throw std::invalid_argument("feature batch: state array size mismatch");
    FeatureBatch b = batch_skeleton(basis, n_actions, actions);
    std::vector<double> row(static_cast<std::size_t>(b.n_features));
    for (int a = 0; a < n_actions; ++a) {
        auto& phi = b.phi[static_cast<std::size_t>(a)];
        const auto& idx = b.rows[static_cast<std::size_t>(a)];
        for (std::size_t r = 0; r < idx.size(); ++r) {
            basis.features_into(states.subspan(idx[r] * d, d), row.data());
            for (int j = 0; j < b.n_features; ++j) phi(static_cast<Eigen::Index>(r), j) = row[j];
        }
    }
    return b;
}

FeatureBatch make_feature_batch(const FourierBasis& basis, int n_actions,
                                std::span<const std::vector<double>> states, std::span<const int> actions) {
    if (states.size() != actions.size()) throw std::invalid_argument("feature batch: inputs and actions differ in length");
    std::vector<double> flat;
    flat.reserve(states.size() * static_cast<std::size_t>(basis.dim()));
    for (const auto& s : states) {
        if (static_cast<int>(s.size()) != basis.dim()) throw std::domain_error("feature batch: state dimension mismatch");
        flat.insert(flat.end(), s.begin(), s.end());
    }
    return make_feature_batch(basis, n_actions, std::span<const double>(flat), actions);
}

std::pair<double, Eigen::VectorXd> empirical_objective(const FeatureBatch& batch, const Eigen::VectorXd& theta,
                                                       std::span<const double> targets, LossKind loss) {
    if (batch.n_samples == 0) throw std::invalid_argument("empirical_objective: empty batch");
    if (targets.size() != batch.n_samples) throw std::invalid_argument("empirical_objective: target count mismatch");
    const int m = batch.n_features;
    if (theta.size() != static_cast<Eigen::Index>(m) * batch.n_actions) {
        throw std::invalid_argument("empirical_objective: parameter count mismatch");
    }
    double value = 0.0;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta.size());
    Eigen::VectorXd resid;
    for (int a = 0; a < batch.n_actions; ++a) {
        const auto& idx = batch.rows[static_cast<std::size_t>(a)];
        if (idx.empty()) continue;
        const auto& phi = batch.phi[static_cast<std::size_t>(a)];
        const Eigen::VectorXd z = phi * theta.segment(static_cast<Eigen::Index>(a) * m, m);
        resid.resize(z.size());
        for (Eigen::Index r = 0; r < z.size(); ++r) {
            const double t = targets[idx[static_cast<std::size_t>(r)]];
            if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("empirical_objective: target outside [0,1]");
            const double p = sigmoid(z[r]);
            if (loss == LossKind::Log) {
                value += softplus(z[r]) - t * z[r];
                resid[r] = p - t;
            } else {
                const double e = p - t;
                value += e * e;
                resid[r] = 2.0 * e * p * (1.0 - p);
            }
        }
        grad.segment(static_cast<Eigen::Index>(a) * m, m).noalias() = phi.transpose() * resid;
    }
    const double inv_n = 1.0 / static_cast<double>(batch.n_samples);
    return {value * inv_n, grad * inv_n};
}

double TabularQModel::predict(int s, int a) const {
    if (s < 0 || s >= values.n_states || a < 0 || a >= values.n_actions) {
        throw std::out_of_range("tabular model: index out of range");
    }
    return values(s, a);
}

TabularQModel tabular_fit(int n_states, int n_actions, std::span<const int> states, std::span<const int> actions,
                          std::span<const double> targets, LossKind /*loss*/) {
    if (states.size() != actions.size() || states.size() != targets.size()) {
        throw std::invalid_argument("tabular_fit: input lengths differ");
    }
    SaTable sum(n_states, n_actions), count(n_states, n_actions);
    for (std::size_t i = 0; i < states.size(); ++i) {
        const int s = states[i], a = actions[i];
        if (s < 0 || s >= n_states || a < 0 || a >= n_actions) throw std::out_of_range("tabular_fit: bad index");
        if (!(targets[i] >= 0.0 && targets[i] <= 1.0)) throw std::domain_error("tabular_fit: target outside [0,1]");
        sum(s, a) += targets[i];
        count(s, a) += 1.0;
    }
    TabularQModel model{QTable(n_states, n_actions, 1.0)};
    for (std::size_t k = 0; k < sum.values.size(); ++k) {
        if (count.values[k] > 0.0) model.values.values[k] = sum.values[k] / count.values[k];
    }
    return model;
}

}  // namespace fqilog
