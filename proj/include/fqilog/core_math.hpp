#pragma once

#include <string_view>

namespace fqilog {

enum class LossKind { Log, Squared };

/// "log" | "squared"
std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

/// Lower clamp applied to predictions before log-loss evaluation inside
/// optimizers; the raw log_loss below is not clamped.
inline constexpr double kPredictionEps = 1e-12;

/// t*log(1/y) + (1-t)*log(1/(1-y)) with 0*log(1/0) = 0. Returns +inf when a
/// positive weight meets a zero probability. Throws std::domain_error when
/// y or t lies outside [0, 1].
double log_loss(double y, double t);

/// log_loss with y clamped to [kPredictionEps, 1 - kPredictionEps].
double log_loss_clamped(double y, double t);

/// (y - t)^2.
double squared_loss(double y, double t);

double loss(LossKind kind, double y, double t);

/// Squared Hellinger distance between Bernoulli(p) and Bernoulli(q).
double hellinger_sq(double p, double q);

/// (f - q) / sqrt(f + q), zero when f = q = 0. Requires f, q >= 0.
double triangular_dev(double f, double q);

/// Numerically stable log(1 + exp(z)).
double softplus(double z);

/// 1 / (1 + exp(-z)) without overflow for large |z|.
double sigmoid(double z);

}  // namespace fqilog
