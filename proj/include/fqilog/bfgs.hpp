#pragma once

#include <functional>
#include <string_view>
#include <utility>

#include <Eigen/Dense>

namespace fqilog {

struct BfgsOptions {
    double grad_tol = 1e-6;       // sup-norm of the gradient
    int max_iters = 500;
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    int max_line_search_steps = 50;

    /// Throws std::invalid_argument unless 0 < c1 < c2 < 1 and limits are positive.
    void validate() const;
};

enum class BfgsTermination { GradTol, MaxIters, LineSearchFail };

std::string_view to_string(BfgsTermination t);

struct BfgsResult {
    Eigen::VectorXd x_star;
    double f_star = 0.0;
    double grad_norm = 0.0;
    int iters = 0;
    int evaluations = 0;
    bool converged = false;
    BfgsTermination termination = BfgsTermination::MaxIters;
};

/// Returns (value, gradient) at x.
using Objective = std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)>;

/// Called after every accepted step with (iteration, previous value, new value).
using StepObserver = std::function<void(int, double, double)>;

/// Dense BFGS with a strong-Wolfe line search (bracketing plus cubic zoom).
/// Throws std::domain_error if the objective is not finite at x0.
BfgsResult bfgs_minimize(const Objective& objective, const Eigen::VectorXd& x0, const BfgsOptions& opts = {},
                         const StepObserver& observer = {});

}  // namespace fqilog
