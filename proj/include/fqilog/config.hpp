#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fqilog/environments.hpp"
#include "fqilog/fqi.hpp"

namespace fqilog {

/// Flat dotted-key configuration (`env.name=mountain_car`). Only keys that
/// appear in the defaults table are accepted.
class Config {
public:
    /// Defaults for the environment overlaid with the named preset ("desk" or "full").
    static Config preset(std::string_view env, std::string_view preset_name);

    /// Parses `key=value` lines; '#' starts a comment. Throws ConfigError.
    void merge_text(std::string_view text, std::string_view origin = "<text>");
    void merge_file(const std::string& path);

    void set(const std::string& key, const std::string& value);
    const std::string& get(const std::string& key) const;
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key) const { return get(key); }
    long long get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<long long> get_int_list(const std::string& key) const;
    std::vector<std::string> get_list(const std::string& key) const;

    /// Sorted `key=value` lines.
    std::string to_text() const;
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

struct ExperimentConfig {
    std::string name;
    EnvSpec env;
    int feature_order = 4;
    std::string dataset_path;
    std::vector<long long> n_grid;
    long long required_successes = 0;
    long long draw_budget = 0;
    FqiConfig fqi;                     // loss field is set per arm
    std::vector<LossKind> arms;
    int eval_rollouts = 1;
    int eval_max_steps = 800;
    std::uint64_t eval_seed = 0;
    std::vector<std::uint64_t> trial_seeds;
    int workers = 1;
    Config source;

    /// Configuration of one arm; arms differ only in the loss.
    FqiConfig arm(LossKind loss) const;
    FourierBasis basis() const { return FourierBasis(feature_order, env.bounds()); }
    long long max_trajectories() const;
};

/// Validates and converts. Throws ConfigError.
ExperimentConfig resolve(const Config& cfg);

/// Canonical `key=value` text of an arm's settings, used by the isolation audit.
std::string describe_arm(const FqiConfig& arm);

/// Keys whose values differ between two describe_arm texts.
std::vector<std::string> diff_descriptions(const std::string& a, const std::string& b);

}  // namespace fqilog
