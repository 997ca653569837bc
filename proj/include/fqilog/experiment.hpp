#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fqilog/config.hpp"
#include "fqilog/dataset.hpp"
#include "fqilog/fqi.hpp"

namespace fqilog {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kResultsSchema = "fqilog-results/1";
inline constexpr const char* kAggregateSchema = "fqilog-aggregate/1";
inline constexpr const char* kRunSchema = "fqilog-run/1";

struct ResultRow {
    std::string env;
    std::string loss;
    long long n_trajectories = 0;
    long long required_successes = 0;
    std::uint64_t trial_seed = 0;
    std::string metric;  // "cost" (mountain car) or "balance_rate" (pendulum)
    double value = 0.0;
    double std_error = 0.0;
    std::string status = "ok";
};

struct TimingRow {
    std::uint64_t trial_seed = 0;
    long long n_trajectories = 0;
    std::string loss;
    double train_seconds = 0.0;
    double eval_seconds = 0.0;
};

using LogFn = std::function<void(const std::string&)>;

/// Seeds derived from a trial seed.
std::uint64_t dataset_seed(std::uint64_t trial_seed);
std::uint64_t eval_seed(const ExperimentConfig& cfg, std::uint64_t trial_seed);

/// Dataset for one trial: loaded from dataset.path or collected.
Dataset trial_dataset(const ExperimentConfig& cfg, std::uint64_t trial_seed);

/// Fits one arm on a dataset.
FqiRun train(const ExperimentConfig& cfg, const Dataset& data, LossKind loss);

/// Greedy-policy evaluation with the configured rollout count and length.
EvalSummary evaluate(const ExperimentConfig& cfg, const FqiRun& run, std::uint64_t seed);

/// Metric name and value reported for an evaluation.
std::string metric_name(const ExperimentConfig& cfg);
std::pair<double, double> metric_value(const ExperimentConfig& cfg, const EvalSummary& s);

/// Fields that differ between any two arms. Empty arms vectors give {}.
std::vector<std::string> isolation_audit(const ExperimentConfig& cfg);

struct ExperimentOutput {
    std::vector<ResultRow> rows;
    std::vector<TimingRow> timings;
    std::string results_path;
    std::string timings_path;
    std::string artifact_path;
};

/// Full trial x n x arm sweep. Writes results.csv, timings.csv and
/// artifact.json under out_dir. Arms failing at run time produce rows with a
/// non-ok status; the sweep continues. Throws ConfigError when the audit fails.
ExperimentOutput run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, const LogFn& log = {});

std::string format_results(const std::vector<ResultRow>& rows, std::uint64_t physics_hash);
std::vector<ResultRow> read_results(const std::string& path, std::uint64_t* physics_hash = nullptr);

struct AggregateRow {
    std::string env;
    std::string loss;
    long long n_trajectories = 0;
    long long required_successes = 0;
    std::string metric;
    long long n_trials = 0;
    long long n_failed = 0;
    double mean = 0.0;
    double std_error = 0.0;
};

/// Groups by (env, loss, n, required_successes, metric) and averages trials.
std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows);

/// Reads result files, writes aggregate.csv plus one curve_*.dat and
/// curve_*.svg per figure analog. Returns the written paths. Throws DataError
/// for mixed physics constants or duplicated trials.
std::vector<std::string> report(const std::vector<std::string>& result_paths, const std::string& out_dir);

void save_run(const FqiRun& run, const ExperimentConfig& cfg, const std::string& path);
FqiRun load_run(const std::string& path, const ExperimentConfig* expected = nullptr);

}  // namespace fqilog
