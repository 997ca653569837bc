#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fqilog/environments.hpp"
#include "fqilog/fqi.hpp"

namespace fqilog {

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr long long kDefaultDrawBudget = 10'000'000;

struct DatasetManifest {
    std::string env_name;
    std::uint64_t physics_hash = 0;
    std::string behavior_policy = "uniform_random";
    std::uint64_t seed = 0;
    long long n_trajectories = 0;
    long long n_successful = 0;
    long long required_successes = 0;
    long long episodes_drawn = 0;
    int horizon = 0;
    std::string prng{Rng::kAlgorithm};
};

/// Transitions stored as flat arrays with per-episode offsets. Successful
/// episodes come first.
struct Dataset {
    DatasetManifest manifest;
    int dim = 2;
    std::vector<double> states;
    std::vector<int> actions;
    std::vector<double> costs;
    std::vector<double> next_states;
    std::vector<std::uint8_t> terminal;
    std::vector<int> steps;
    std::vector<long long> episode_offsets{0};  // size n_episodes + 1

    std::size_t n_transitions() const { return actions.size(); }
    std::size_t n_episodes() const { return episode_offsets.size() - 1; }
    bool episode_success(std::size_t e) const { return static_cast<long long>(e) < manifest.n_successful; }
    TransitionView view() const;

    void append(const Trajectory& tr);
};

struct CollectOptions {
    long long n_trajectories = 0;
    long long required_successes = 0;  // <= 0: plain i.i.d. draws
    std::uint64_t seed = 0;
    int horizon = 0;                   // 0: the environment default
    long long draw_budget = kDefaultDrawBudget;
};

/// Uniform-random behavior data. Draws episodes until exactly
/// required_successes successes and n - required_successes failures have been
/// kept; surplus draws of either kind are discarded. Throws DataError when the
/// budget runs out, ConfigError for inconsistent options.
Dataset collect(const EnvSpec& env, const CollectOptions& opts);

/// First n episodes. Throws DataError when n exceeds the episode count.
Dataset take_prefix(const Dataset& ds, long long n_trajectories);

/// FNV-1a 64-bit.
std::uint64_t fnv1a64(std::string_view bytes);

void save_dataset(const Dataset& ds, const std::string& path);
std::string serialize_dataset(const Dataset& ds);

/// Throws VersionError, ChecksumError, DataError (malformed rows or an
/// environment mismatch against expected_env when given) or IoError.
Dataset load_dataset(const std::string& path, const std::string& expected_env = "",
                     std::uint64_t expected_physics_hash = 0);
Dataset parse_dataset(std::string_view text, const std::string& expected_env = "",
                      std::uint64_t expected_physics_hash = 0);

}  // namespace fqilog
