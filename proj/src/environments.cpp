#include "fqilog/environments.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>

#include "fqilog/errors.hpp"

namespace fqilog {

namespace {

void check_action(int action) {
    if (action < 0 || action > 2) throw std::out_of_range("environment: bad action " + std::to_string(action));
}

constexpr double kHalfPi = std::numbers::pi / 2.0;

}  // namespace

MountainCarState mountain_car_step(const MountainCarParams& p, const MountainCarState& s, int action) {
    check_action(action);
    if (s.done) return s;
    MountainCarState n;
    n.velocity = std::clamp(s.velocity + p.force * (action - 1) - p.gravity * std::cos(3.0 * s.position), -p.v_max,
                            p.v_max);
    n.position = std::clamp(s.position + n.velocity, p.x_min, p.x_max);
    if (n.position <= p.x_min) n.velocity = 0.0;
    n.done = n.position >= p.goal;
    return n;
}

std::vector<double> mountain_car_cost(std::span<const std::uint8_t> done_flags) {
    std::vector<double> cost(done_flags.size(), 0.0);
    if (cost.empty()) return cost;
    const bool reached = std::any_of(done_flags.begin(), done_flags.end(), [](std::uint8_t d) { return d != 0; });
    cost.back() = reached ? 0.0 : 1.0;
    return cost;
}

double pendulum_acceleration(const PendulumParams& p, double angle, double angular_velocity, double u) {
    const double alpha = 1.0 / (p.pole_mass + p.cart_mass);
    const double c = std::cos(angle);
    const double num = p.g * std::sin(angle) -
                       alpha * p.pole_mass * p.length * angular_velocity * angular_velocity * std::sin(2.0 * angle) / 2.0 -
                       alpha * c * u;
    const double den = 4.0 * p.length / 3.0 - alpha * p.pole_mass * p.length * c * c;
    return num / den;
}

PendulumState pendulum_step(const PendulumParams& p, const PendulumState& s, int action, double noise) {
    check_action(action);
    if (!(noise >= -p.noise && noise <= p.noise)) throw std::domain_error("pendulum: noise outside the allowed band");
    if (s.fallen) return s;
    const double u = p.force * (action - 1) + noise;
    const double acc = pendulum_acceleration(p, s.angle, s.angular_velocity, u);
    PendulumState n;
    n.angle = s.angle + p.dt * s.angular_velocity;
    n.angular_velocity = std::clamp(s.angular_velocity + p.dt * acc, -p.v_max, p.v_max);
    if (std::abs(n.angle) > kHalfPi) {
        n.fallen = true;
        n.angle = std::copysign(kHalfPi, n.angle);
    }
    return n;
}

double pendulum_cost(const PendulumState& before, const PendulumState& after) {
    return (!before.fallen && after.fallen) ? 1.0 : 0.0;
}

std::string_view to_string(EnvKind k) {
    return k == EnvKind::MountainCar ? "mountain_car" : "pendulum";
}

EnvKind parse_env_kind(std::string_view name) {
    if (name == "mountain_car") return EnvKind::MountainCar;
    if (name == "pendulum") return EnvKind::Pendulum;
    throw ConfigError("unknown environment '" + std::string(name) + "' (expected mountain_car or pendulum)");
}

BoxBounds EnvSpec::bounds() const {
    if (kind == EnvKind::MountainCar) {
        return BoxBounds({mountain_car.x_min, -mountain_car.v_max}, {mountain_car.x_max, mountain_car.v_max});
    }
    return BoxBounds({-kHalfPi, -pendulum.v_max}, {kHalfPi, pendulum.v_max});
}

std::uint64_t EnvSpec::physics_hash() const {
    // FNV-1a over the raw constants.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](double v) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof v);
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 0x100000001b3ULL;
        }
    };
    mix(static_cast<double>(kind == EnvKind::MountainCar ? 0 : 1));
    if (kind == EnvKind::MountainCar) {
        const auto& m = mountain_car;
        for (double v : {m.force, m.gravity, m.x_min, m.x_max, m.v_max, m.goal, m.start_x, m.start_v}) mix(v);
    } else {
        const auto& p = pendulum;
        for (double v : {p.g, p.pole_mass, p.cart_mass, p.length, p.dt, p.force, p.noise, p.v_max, p.start_spread}) mix(v);
    }
    mix(discount);
    return h;
}

EnvSpec mountain_car_spec() {
    EnvSpec e;
    e.kind = EnvKind::MountainCar;
    e.horizon = 800;
    e.discount = 1.0;
    return e;
}

EnvSpec pendulum_spec() {
    EnvSpec e;
    e.kind = EnvKind::Pendulum;
    e.horizon = 3000;
    e.discount = 0.95;
    return e;
}

PolicyFn uniform_random_policy(std::uint64_t seed) {
    auto rng = std::make_shared<Rng>(seed);
    return [rng](std::span<const double>, int) { return static_cast<int>(rng->below(3)); };
}

namespace {

void push_state(std::vector<double>& out, const double* s) {
    out.push_back(s[0]);
    out.push_back(s[1]);
}

}  // namespace

Trajectory rollout(const EnvSpec& env, const PolicyFn& policy, std::uint64_t seed, int max_steps, bool record) {
    if (max_steps < 1) throw std::invalid_argument("rollout: max_steps must be >= 1");
    Rng rng(seed);
    Trajectory tr;
    if (record) {
        const std::size_t cap = static_cast<std::size_t>(env.kind == EnvKind::MountainCar ? max_steps : 16);
        tr.states.reserve(2 * cap);
        tr.next_states.reserve(2 * cap);
        tr.actions.reserve(cap);
    }
    auto emit = [&](const double* s, int a, double c, const double* s2, bool term, int h) {
        if (!record) return;
        push_state(tr.states, s);
        push_state(tr.next_states, s2);
        tr.actions.push_back(a);
        tr.costs.push_back(c);
        tr.terminal.push_back(term ? 1 : 0);
        tr.steps.push_back(h);
    };

    if (env.kind == EnvKind::MountainCar) {
        const auto& p = env.mountain_car;
        MountainCarState s{p.start_x, p.start_v, false};
        for (int h = 0; h < max_steps; ++h) {
            const double cur[2] = {s.position, s.velocity};
            const int a = policy(std::span<const double>(cur, 2), h);
            const MountainCarState n = mountain_car_step(p, s, a);
            const double nxt[2] = {n.position, n.velocity};
            const bool last = h + 1 == max_steps;
            const double c = (last && !n.done) ? 1.0 : 0.0;
            emit(cur, a, c, nxt, last, h);
            tr.discounted_cost += c;
            s = n;
            ++tr.length;
        }
        tr.success = s.done;
        return tr;
    }

    const auto& p = env.pendulum;
    PendulumState s;
    s.angle = rng.uniform(-p.start_spread, p.start_spread);
    s.angular_velocity = rng.uniform(-p.start_spread, p.start_spread);
    double discount = 1.0;
    for (int h = 0; h < max_steps; ++h) {
        const double cur[2] = {s.angle, s.angular_velocity};
        const int a = policy(std::span<const double>(cur, 2), h);
        const double noise = rng.uniform(-p.noise, p.noise);
        const PendulumState n = pendulum_step(p, s, a, noise);
        const double c = pendulum_cost(s, n);
        const double nxt[2] = {n.angle, n.angular_velocity};
        emit(cur, a, c, nxt, n.fallen, h);
        tr.discounted_cost += discount * c;
        discount *= env.discount;
        s = n;
        ++tr.length;
        if (n.fallen) break;
    }
    tr.success = !s.fallen;
    return tr;
}

std::pair<double, double> mean_and_std_error(std::span<const double> xs) {
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return {mean, sd / std::sqrt(static_cast<double>(xs.size()))};
}

EvalSummary evaluate_policy(const EnvSpec& env, const PolicyFn& policy, int n_rollouts, std::uint64_t seed,
                            int max_steps) {
    if (n_rollouts < 1) throw std::invalid_argument("evaluate_policy: need at least one rollout");
    std::vector<double> costs, successes;
    costs.reserve(static_cast<std::size_t>(n_rollouts));
    successes.reserve(static_cast<std::size_t>(n_rollouts));
    for (int i = 0; i < n_rollouts; ++i) {
        const Trajectory tr = rollout(env, policy, derive_seed(seed, static_cast<std::uint64_t>(i)), max_steps, false);
        costs.push_back(tr.discounted_cost);
        successes.push_back(tr.success ? 1.0 : 0.0);
    }
    EvalSummary out;
    out.n_rollouts = n_rollouts;
    std::tie(out.mean_cost, out.cost_std_error) = mean_and_std_error(costs);
    std::tie(out.success_rate, out.success_std_error) = mean_and_std_error(successes);
    return out;
}

}  // namespace fqilog
