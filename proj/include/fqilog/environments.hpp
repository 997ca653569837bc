#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <utility>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fqilog/features.hpp"
#include "fqilog/rng.hpp"

namespace fqilog {

struct MountainCarParams {
    double force = 0.001;
    double gravity = 0.0025;
    double x_min = -1.2;
    double x_max = 0.6;
    double v_max = 0.07;
    double goal = 0.5;
    double start_x = -0.5;
    double start_v = 0.0;
};

struct MountainCarState {
    double position = -0.5;
    double velocity = 0.0;
    bool done = false;
};

/// One step of the sparse-cost mountain car; done is absorbing.
/// Throws std::out_of_range for actions outside {0,1,2}.
MountainCarState mountain_car_step(const MountainCarParams& p, const MountainCarState& s, int action);

/// Cost vector of an episode whose per-step done flags are given: zeros, and a
/// final 1 unless the goal was reached at some step.
std::vector<double> mountain_car_cost(std::span<const std::uint8_t> done_flags);

struct PendulumParams {
    double g = 9.8;
    double pole_mass = 2.0;
    double cart_mass = 8.0;
    double length = 0.5;
    double dt = 0.1;
    double force = 50.0;
    double noise = 10.0;
    double v_max = 5.0;
    double start_spread = 0.05;
};

struct PendulumState {
    double angle = 0.0;
    double angular_velocity = 0.0;
    bool fallen = false;
};

/// Angular acceleration of the cart-pole under horizontal force u.
double pendulum_acceleration(const PendulumParams& p, double angle, double angular_velocity, double u);

/// Euler step with force 50 (action - 1) + noise. The angle of a fallen pole
/// is frozen at +-pi/2. Throws for bad actions or noise outside the band.
PendulumState pendulum_step(const PendulumParams& p, const PendulumState& s, int action, double noise);

/// 1 on the transition into the fallen region, else 0.
double pendulum_cost(const PendulumState& before, const PendulumState& after);

enum class EnvKind { MountainCar, Pendulum };

std::string_view to_string(EnvKind k);
EnvKind parse_env_kind(std::string_view name);

/// Environment selection plus all physical constants.
struct EnvSpec {
    EnvKind kind = EnvKind::MountainCar;
    MountainCarParams mountain_car;
    PendulumParams pendulum;
    int horizon = 800;       // episode length for collection
    double discount = 1.0;   // mountain car is undiscounted

    int dim() const { return 2; }
    int n_actions() const { return 3; }
    /// Box containing every emitted state.
    BoxBounds bounds() const;
    bool finite_horizon() const { return kind == EnvKind::MountainCar; }
    /// Stable hash of the physics constants, for manifests.
    std::uint64_t physics_hash() const;
};

EnvSpec mountain_car_spec();
EnvSpec pendulum_spec();

/// Trajectory stored as flat arrays; states are row-major [length x 2].
struct Trajectory {
    std::vector<double> states;
    std::vector<int> actions;
    std::vector<double> costs;
    std::vector<double> next_states;
    std::vector<std::uint8_t> terminal;
    std::vector<int> steps;
    bool success = false;
    double discounted_cost = 0.0;
    int length = 0;
};

/// Maps (state, 0-based step) to an action.
using PolicyFn = std::function<int(std::span<const double>, int)>;

/// Uniform-random policy driven by its own stream.
PolicyFn uniform_random_policy(std::uint64_t seed);

/// Runs one episode. The start state and the pendulum noise are drawn from a
/// stream derived from seed. Mountain car episodes last exactly max_steps
/// steps; pendulum episodes stop at the fall or at max_steps. When record is
/// false only the summary fields are filled.
Trajectory rollout(const EnvSpec& env, const PolicyFn& policy, std::uint64_t seed, int max_steps, bool record = true);

struct EvalSummary {
    int n_rollouts = 0;
    double mean_cost = 0.0;
    double cost_std_error = 0.0;
    double success_rate = 0.0;
    double success_std_error = 0.0;
};

/// Rollout i uses seed derive_seed(seed, i).
EvalSummary evaluate_policy(const EnvSpec& env, const PolicyFn& policy, int n_rollouts, std::uint64_t seed,
                            int max_steps);

/// Sample mean and standard error (sample SD / sqrt(n); 0 for n < 2).
std::pair<double, double> mean_and_std_error(std::span<const double> xs);

}  // namespace fqilog
