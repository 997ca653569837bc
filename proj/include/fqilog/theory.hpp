#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fqilog/tabular_mdp.hpp"

namespace fqilog {

/// Outcome of one inequality check over many randomized instances.
/// worst_violation is max(LHS - RHS) over instances; pass <=> worst_violation <= tolerance.
struct TheoryReport {
    std::string lemma_id;
    long n_instances = 0;
    double worst_violation = 0.0;
    double tolerance = 0.0;
    bool pass = true;
    std::uint64_t seed = 0;
};

/// Accumulates violations for one lemma. Reports merge by taking the max.
class ViolationTracker {
public:
    ViolationTracker(std::string lemma_id, double tolerance, std::uint64_t seed);
    void record(double lhs_minus_rhs);
    void count_instance() { ++instances_; }
    TheoryReport report() const;

private:
    std::string id_;
    double tol_;
    std::uint64_t seed_;
    long instances_ = 0;
    double worst_;
};

/// xi_f = f + q*, delta_f = (f - q*) / sqrt(f + q*), and D_f: the largest of
/// ||delta_f||_{2, eta_h x pi_f} and ||delta_f||_{2, eta_h x pi*} over h <= horizon.
struct XiDelta {
    QTable xi;
    SaTable delta;
    double d_f = 0.0;
};

XiDelta xi_delta(const TabularMdp& mdp, const StateDist& eta1, const SaTable& f, const QTable& q_star, int horizon);

inline constexpr double kPointwiseTol = 1e-10;
inline constexpr double kNormTol = 1e-10;
inline constexpr double kContractionTol = 1e-9;
inline constexpr double kDecompositionTol = 1e-8;

/// Scalar Hellinger/triangular chain, sqrt-shift nonexpansion and the
/// min-operator nonexpansion.
std::vector<TheoryReport> verify_pointwise_inequalities(std::uint64_t seed, long n_instances);

/// Cauchy-Schwarz triangular bound, xi_f bound, change of measure,
/// sqrt-expectation nonexpansion and the integrated Hellinger chain.
std::vector<TheoryReport> verify_norm_inequalities(std::uint64_t seed, long n_instances);

/// Hellinger contraction of T, pseudo-contraction at q*, one-step
/// contraction with concentrability, and error propagation.
std::vector<TheoryReport> verify_contraction_suite(std::uint64_t seed, long n_instances);

/// Performance difference, regret decomposition, first-order decomposition,
/// the small-cost proposition and the tail-value bound. horizon truncates all
/// series; discounts are drawn so that gamma^horizon <= 1e-8.
std::vector<TheoryReport> verify_decomposition_suite(std::uint64_t seed, long n_instances, int horizon);

/// A finite function class over a finite input set, with the input distribution.
struct FiniteClass {
    std::vector<std::vector<double>> functions;  // each maps input index -> [0,1]
    std::vector<double> input_dist;
};

struct ConcentrationResult {
    TheoryReport report;
    double bound = 0.0;             // 2 log(|F| / delta) / n
    double coverage = 0.0;          // fraction of trials meeting the bound
    double required_coverage = 0.0; // 1 - delta - 2 sqrt(delta (1 - delta) / trials)
    double median_divergence = 0.0;
    double mean_divergence = 0.0;
    std::vector<double> divergences;  // per trial
};

inline constexpr long kConcentrationReferenceSamples = 200;

/// Synthetic class: f* at index 0 and a grid of logit-space perturbations of
/// f* along one random direction, spaced for the given reference sample size.
FiniteClass make_concentration_class(std::uint64_t seed, int class_size, int n_inputs,
                                     long reference_samples = kConcentrationReferenceSamples);

/// Monte-Carlo check of the log-loss ERM concentration bound. Throws
/// ConfigError when f_star is not a member of the class.
ConcentrationResult concentration_experiment(const FiniteClass& cls, const std::vector<double>& f_star,
                                             std::uint64_t seed, long n_samples, double delta, long n_trials);

ConcentrationResult concentration_experiment(std::uint64_t seed, long n_samples, int class_size, double delta,
                                             long n_trials);

/// Full oracle battery as run by `verify-theory`.
struct TheoryOptions {
    std::uint64_t seed = 7;
    long pointwise_instances = 10000;
    long mdp_instances = 1000;
    int decomposition_horizon = 400;
    long concentration_samples = 200;
    int concentration_class_size = 16;
    double concentration_delta = 0.1;
    long concentration_trials = 500;
};

std::vector<TheoryReport> verify_all(const TheoryOptions& opts);

/// JSON array of records, one per lemma_id.
std::string reports_to_json(const std::vector<TheoryReport>& reports);

}  // namespace fqilog
