#include "fqilog/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fqilog {

namespace {

void require_prob(double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw std::domain_error(std::string(what) + " must lie in [0,1], got " + std::to_string(v));
    }
}

// w * log(1/p) with the 0*log(1/0) = 0 convention.
double weighted_neg_log(double w, double p) {
    if (w == 0.0) return 0.0;
    if (p == 0.0) return std::numeric_limits<double>::infinity();
    return -w * std::log(p);
}

}  // namespace

std::string_view to_string(LossKind kind) {
    return kind == LossKind::Log ? "log" : "squared";
}

LossKind parse_loss_kind(std::string_view name) {
    if (name == "log") return LossKind::Log;
    if (name == "squared") return LossKind::Squared;
    throw std::invalid_argument("unknown loss kind '" + std::string(name) + "' (expected log|squared)");
}

double log_loss(double y, double t) {
    require_prob(y, "prediction");
    require_prob(t, "target");
    return weighted_neg_log(t, y) + weighted_neg_log(1.0 - t, 1.0 - y);
}

double log_loss_clamped(double y, double t) {
    require_prob(t, "target");
    if (std::isnan(y)) throw std::domain_error("prediction is NaN");
    const double yc = std::clamp(y, kPredictionEps, 1.0 - kPredictionEps);
    return log_loss(yc, t);
}

double squared_loss(double y, double t) {
    const double d = y - t;
    return d * d;
}

double loss(LossKind kind, double y, double t) {
    return kind == LossKind::Log ? log_loss_clamped(y, t) : squared_loss(y, t);
}

double hellinger_sq(double p, double q) {
    require_prob(p, "p");
    require_prob(q, "q");
    const double a = std::sqrt(p) - std::sqrt(q);
    const double b = std::sqrt(1.0 - p) - std::sqrt(1.0 - q);
    return 0.5 * a * a + 0.5 * b * b;
}

double triangular_dev(double f, double q) {
    if (!(f >= 0.0) || !(q >= 0.0)) throw std::domain_error("triangular_dev requires nonnegative arguments");
    if (f == 0.0 && q == 0.0) return 0.0;
    return (f - q) / std::sqrt(f + q);
}

double softplus(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace fqilog
