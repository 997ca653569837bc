#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fqilog/core_math.hpp"
#include "fqilog/tabular_mdp.hpp"

namespace fqilog {

/// Axis-aligned box; lo[i] < hi[i].
struct BoxBounds {
    std::vector<double> lo;
    std::vector<double> hi;

    BoxBounds() = default;
    BoxBounds(std::vector<double> lo_, std::vector<double> hi_);
    std::size_t dim() const { return lo.size(); }
};

/// Fourier cosine basis with multi-indices in {0..order-1}^dim.
class FourierBasis {
public:
    /// Slack for states marginally outside the box; they are clipped.
    static constexpr double kClipTolerance = 1e-9;

    FourierBasis() = default;
    FourierBasis(int order, BoxBounds bounds);

    int dim() const { return static_cast<int>(bounds_.dim()); }
    int order() const { return order_; }
    int size() const { return static_cast<int>(coefficients_.size()); }
    const BoxBounds& bounds() const { return bounds_; }
    /// Row j is the multi-index c_j; row 0 is all zeros.
    const std::vector<std::vector<int>>& coefficients() const { return coefficients_; }

    /// phi_j(x) = cos(pi <c_j, xbar>), xbar the state rescaled to [0,1]^d.
    /// Throws std::domain_error for out-of-bounds states.
    std::vector<double> features(std::span<const double> state) const;
    void features_into(std::span<const double> state, double* out) const;

private:
    int order_ = 0;
    BoxBounds bounds_;
    std::vector<std::vector<int>> coefficients_;
};

std::vector<double> fourier_features(const FourierBasis& basis, std::span<const double> state);

/// f(s, a) = sigmoid(<phi(s), theta_a>); theta = [theta_0; theta_1; ...].
class SigmoidLinearModel {
public:
    SigmoidLinearModel() = default;
    SigmoidLinearModel(FourierBasis basis, int n_actions);

    const FourierBasis& basis() const { return basis_; }
    int n_actions() const { return n_actions_; }
    int n_features() const { return basis_.size(); }
    int n_params() const { return n_actions_ * basis_.size(); }

    const Eigen::VectorXd& params() const { return params_; }
    void set_params(const Eigen::VectorXd& theta);

    double logit(std::span<const double> state, int action) const;
    double predict(std::span<const double> state, int action) const;
    /// Gradient of predict w.r.t. theta: p(1-p) phi in the action block.
    Eigen::VectorXd gradient(std::span<const double> state, int action) const;

    /// All action logits from precomputed features.
    void logits_from_features(const double* phi, double* out) const;

private:
    void check_action(int action) const;

    FourierBasis basis_;
    int n_actions_ = 0;
    Eigen::VectorXd params_;
};

/// Training inputs with features precomputed and grouped by action.
/// rows[a] lists the original sample indices that used action a.
struct FeatureBatch {
    int n_features = 0;
    int n_actions = 0;
    std::size_t n_samples = 0;
    std::vector<Eigen::MatrixXd> phi;               // per action: [n_a x n_features]
    std::vector<std::vector<std::size_t>> rows;     // per action
};

FeatureBatch make_feature_batch(const FourierBasis& basis, int n_actions,
                                std::span<const std::vector<double>> states, std::span<const int> actions);

/// Same, from a row-major [n x d] state array.
FeatureBatch make_feature_batch(const FourierBasis& basis, int n_actions, std::span<const double> states,
                                std::span<const int> actions);

/// Mean loss of the sigmoid-linear model over the batch and its gradient.
/// Targets are indexed by original sample order and must lie in [0,1].
/// The log-loss is evaluated in the logit domain (softplus(z) - t z), which is
/// exact and finite for any finite theta.
std::pair<double, Eigen::VectorXd> empirical_objective(const FeatureBatch& batch, const Eigen::VectorXd& theta,
                                                       std::span<const double> targets, LossKind loss);

/// Tabular class [0,1]^{S x A}.
struct TabularQModel {
    QTable values;

    double predict(int s, int a) const;
};

/// Per-cell empirical mean of the targets; this is the minimizer of both the
/// log-loss and the squared loss. Unseen cells default to 1.
TabularQModel tabular_fit(int n_states, int n_actions, std::span<const int> states, std::span<const int> actions,
                          std::span<const double> targets, LossKind loss);

}  // namespace fqilog
