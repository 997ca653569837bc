#include "fqilog/bfgs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fqilog {

void BfgsOptions::validate() const {
    if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) {
        throw std::invalid_argument("bfgs: require 0 < c1 < c2 < 1");
    }
    if (!(grad_tol > 0.0)) throw std::invalid_argument("bfgs: grad_tol must be positive");
    if (max_iters < 1 || max_line_search_steps < 1) throw std::invalid_argument("bfgs: iteration limits must be >= 1");
}

std::string_view to_string(BfgsTermination t) {
    switch (t) {
        case BfgsTermination::GradTol: return "grad_tol";
        case BfgsTermination::MaxIters: return "max_iters";
        case BfgsTermination::LineSearchFail: return "line_search_fail";
    }
    return "unknown";
}

namespace {

struct Probe {
    double alpha = 0.0;
    double f = 0.0;
    double dphi = 0.0;  // directional derivative
    Eigen::VectorXd x;
    Eigen::VectorXd g;
};

// Minimizer of the cubic interpolating (a, fa, da) and (b, fb, db), safeguarded
// to stay inside the interval.
double cubic_step(const Probe& lo, const Probe& hi) {
    const double a = lo.alpha, b = hi.alpha;
    const double d1 = lo.dphi + hi.dphi - 3.0 * (lo.f - hi.f) / (a - b);
    const double disc = d1 * d1 - lo.dphi * hi.dphi;
    double t = std::numeric_limits<double>::quiet_NaN();
    if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), b - a);
        const double denom = hi.dphi - lo.dphi + 2.0 * d2;
        if (denom != 0.0) t = b - (b - a) * (hi.dphi + d2 - d1) / denom;
    }
    const double left = std::min(a, b), right = std::max(a, b);
    const double margin = 0.1 * (right - left);
    if (!std::isfinite(t) || t < left + margin || t > right - margin) t = 0.5 * (a + b);
    return t;
}

class LineSearch {
public:
    LineSearch(const Objective& obj, const BfgsOptions& opts, int& evals) : obj_(obj), opts_(opts), evals_(evals) {}

    // Returns true and fills `out` on success.
    bool run(const Eigen::VectorXd& x, double f0, double dphi0, const Eigen::VectorXd& dir, Probe& out) {
        x_ = &x;
        dir_ = &dir;
        f0_ = f0;
        dphi0_ = dphi0;
        Probe prev;
        prev.alpha = 0.0;
        prev.f = f0;
        prev.dphi = dphi0;
        double alpha = 1.0;
        for (int step = 0; step < opts_.max_line_search_steps; ++step) {
            Probe cur = probe(alpha);
            if (!std::isfinite(cur.f)) {
                // Shrink into the finite region.
                alpha = 0.5 * (prev.alpha + alpha);
                continue;
            }
            if (cur.f > f0 + opts_.wolfe_c1 * alpha * dphi0 || (step > 0 && cur.f >= prev.f)) {
                return zoom(prev, cur, out, opts_.max_line_search_steps - step);
            }
            if (std::abs(cur.dphi) <= -opts_.wolfe_c2 * dphi0) {
                out = std::move(cur);
                return true;
            }
            if (cur.dphi >= 0.0) return zoom(cur, prev, out, opts_.max_line_search_steps - step);
            prev = std::move(cur);
            alpha *= 2.0;
        }
        return false;
    }

private:
    Probe probe(double alpha) {
        Probe p;
        p.alpha = alpha;
        p.x = *x_ + alpha * *dir_;
        auto [f, g] = obj_(p.x);
        ++evals_;
        p.f = f;
        p.g = std::move(g);
        p.dphi = std::isfinite(f) ? p.g.dot(*dir_) : std::numeric_limits<double>::quiet_NaN();
        if (!std::isfinite(p.dphi)) p.f = std::numeric_limits<double>::infinity();
        return p;
    }

    bool zoom(Probe lo, Probe hi, Probe& out, int budget) {
        for (int i = 0; i < budget; ++i) {
            if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha)) break;
            Probe cur = probe(cubic_step(lo, hi));
            if (!std::isfinite(cur.f) || cur.f > f0_ + opts_.wolfe_c1 * cur.alpha * dphi0_ || cur.f >= lo.f) {
                hi = std::move(cur);
                continue;
            }
            if (std::abs(cur.dphi) <= -opts_.wolfe_c2 * dphi0_) {
                out = std::move(cur);
                return true;
            }
            if (cur.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
            lo = std::move(cur);
        }
        // Accept a sufficient-decrease point if the curvature test never passed.
        if (lo.alpha > 0.0 && lo.f < f0_) {
            out = std::move(lo);
            return true;
        }
        return false;
    }

    const Objective& obj_;
    const BfgsOptions& opts_;
    int& evals_;
    const Eigen::VectorXd* x_ = nullptr;
    const Eigen::VectorXd* dir_ = nullptr;
    double f0_ = 0.0;
    double dphi0_ = 0.0;
};

}  // namespace

BfgsResult bfgs_minimize(const Objective& objective, const Eigen::VectorXd& x0, const BfgsOptions& opts,
                         const StepObserver& observer) {
    opts.validate();
    BfgsResult res;
    res.x_star = x0;
    auto [f, g] = objective(x0);
    res.evaluations = 1;
    if (!std::isfinite(f) || !g.allFinite()) throw std::domain_error("bfgs: objective not finite at x0");
    const Eigen::Index n = x0.size();
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd x = x0;
    res.f_star = f;
    res.grad_norm = g.lpNorm<Eigen::Infinity>();

    LineSearch ls(objective, opts, res.evaluations);
    for (int it = 0; it < opts.max_iters; ++it) {
        if (res.grad_norm <= opts.grad_tol) {
            res.termination = BfgsTermination::GradTol;
            res.converged = true;
            return res;
        }
        Eigen::VectorXd dir = -H * g;
        double dphi = g.dot(dir);
        if (!(dphi < 0.0)) {
            // Lost positive definiteness numerically; restart from steepest descent.
            H.setIdentity();
            dir = -g;
            dphi = g.dot(dir);
        }
        Probe step;
        if (!ls.run(x, f, dphi, dir, step)) {
            res.termination = BfgsTermination::LineSearchFail;
            return res;
        }
        const Eigen::VectorXd s = step.x - x;
        const Eigen::VectorXd y = step.g - g;
        const double sy = s.dot(y);
        if (sy > 1e-10 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::VectorXd Hy = H * y;
            const double yHy = y.dot(Hy);
            H += ((1.0 + rho * yHy) * rho) * (s * s.transpose()) - rho * (Hy * s.transpose() + s * Hy.transpose());
        }
        if (observer) observer(it, f, step.f);
        x = std::move(step.x);
        f = step.f;
        g = std::move(step.g);
        res.iters = it + 1;
        res.x_star = x;
        res.f_star = f;
        res.grad_norm = g.lpNorm<Eigen::Infinity>();
    }
    if (res.grad_norm <= opts.grad_tol) {
        res.termination = BfgsTermination::GradTol;
        res.converged = true;
    } else {
        res.termination = BfgsTermination::MaxIters;
    }
    return res;
}

}  // namespace fqilog
