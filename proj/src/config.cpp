#include "fqilog/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fqilog/errors.hpp"

namespace fqilog {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string fmt(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::map<std::string, std::string> defaults() {
    const MountainCarParams mc;
    const PendulumParams pd;
    const BfgsOptions bo;
    return {
        {"experiment.name", "experiment"},
        {"env.name", "mountain_car"},
        {"env.horizon", "800"},
        {"env.mountain_car.force", fmt(mc.force)},
        {"env.mountain_car.gravity", fmt(mc.gravity)},
        {"env.mountain_car.x_min", fmt(mc.x_min)},
        {"env.mountain_car.x_max", fmt(mc.x_max)},
        {"env.mountain_car.v_max", fmt(mc.v_max)},
        {"env.mountain_car.goal", fmt(mc.goal)},
        {"env.mountain_car.start_x", fmt(mc.start_x)},
        {"env.mountain_car.start_v", fmt(mc.start_v)},
        {"env.pendulum.g", fmt(pd.g)},
        {"env.pendulum.pole_mass", fmt(pd.pole_mass)},
        {"env.pendulum.cart_mass", fmt(pd.cart_mass)},
        {"env.pendulum.length", fmt(pd.length)},
        {"env.pendulum.dt", fmt(pd.dt)},
        {"env.pendulum.force", fmt(pd.force)},
        {"env.pendulum.noise", fmt(pd.noise)},
        {"env.pendulum.v_max", fmt(pd.v_max)},
        {"env.pendulum.start_spread", fmt(pd.start_spread)},
        {"features.order", "4"},
        {"dataset.path", ""},
        {"dataset.n_grid", "250,500,1000,2000,3000"},
        {"dataset.required_successes", "1"},
        {"dataset.draw_budget", std::to_string(10'000'000)},
        {"fqi.k", "800"},
        {"fqi.gamma", "1"},
        {"fqi.target_clip", "true"},
        {"fqi.init", "zeros"},
        {"fqi.init_seed", "0"},
        {"bfgs.grad_tol", fmt(bo.grad_tol)},
        {"bfgs.max_iters", std::to_string(bo.max_iters)},
        {"bfgs.wolfe_c1", fmt(bo.wolfe_c1)},
        {"bfgs.wolfe_c2", fmt(bo.wolfe_c2)},
        {"bfgs.max_line_search_steps", std::to_string(bo.max_line_search_steps)},
        {"arms", "log,squared"},
        {"eval.n_rollouts", "1"},
        {"eval.max_steps", "800"},
        {"eval.seed", "1000"},
        {"trials.count", "10"},
        {"trials.base_seed", "1"},
        {"trials.seeds", ""},
        {"run.workers", "1"},
    };
}

}  // namespace

Config Config::preset(std::string_view env, std::string_view preset_name) {
    if (preset_name != "desk" && preset_name != "full") {
        throw ConfigError("unknown preset '" + std::string(preset_name) + "' (expected desk or full)");
    }
    const bool full = preset_name == "full";
    Config c;
    c.values_ = defaults();
    if (env == "mountain_car") {
        c.values_["experiment.name"] = full ? "mountain_car_full" : "mountain_car_desk";
        // Looser than the optimizer default. Tight solves over 800 chained
        // fits drive the logits to extremes and the greedy policy degrades.
        c.values_["bfgs.grad_tol"] = "7e-5";
        if (full) {
            c.values_["dataset.n_grid"] = "1000,3000,6000,9000,12000,15000,18000,21000,24000,27000,30000";
            c.values_["trials.count"] = "90";
        }
    } else if (env == "pendulum") {
        c.values_["experiment.name"] = full ? "pendulum_full" : "pendulum_desk";
        c.values_["env.name"] = "pendulum";
        c.values_["env.horizon"] = "3000";
        c.values_["dataset.n_grid"] = full ? "10,20,50,100,200,500,1000" : "10,20,50,100,200";
        c.values_["dataset.required_successes"] = "0";
        c.values_["fqi.k"] = full ? "300" : "100";
        c.values_["fqi.gamma"] = "0.95";
        c.values_["eval.n_rollouts"] = full ? "1000" : "200";
        c.values_["eval.max_steps"] = "3000";
        c.values_["trials.count"] = full ? "90" : "10";
    } else {
        throw ConfigError("unknown environment '" + std::string(env) + "' (expected mountain_car or pendulum)");
    }
    return c;
}

void Config::set(const std::string& key, const std::string& value) {
    if (values_.empty()) values_ = defaults();
    if (values_.find(key) == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
    values_[key] = value;
}

void Config::merge_text(std::string_view text, std::string_view origin) {
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": expected key=value");
        }
        try {
            set(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void Config::merge_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    merge_text(ss.str(), path);
}

const std::string& Config::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing configuration key '" + key + "'");
    return it->second;
}

long long Config::get_int(const std::string& key) const {
    const std::string& s = get(key);
    long long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
        throw ConfigError("'" + key + "' must be an integer, got '" + s + "'");
    }
    return v;
}

double Config::get_double(const std::string& key) const {
    const std::string& s = get(key);
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw ConfigError("'" + key + "' must be a finite number, got '" + s + "'");
    }
    return v;
}

bool Config::get_bool(const std::string& key) const {
    const std::string& s = get(key);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("'" + key + "' must be true or false, got '" + s + "'");
}

std::vector<std::string> Config::get_list(const std::string& key) const {
    std::vector<std::string> out;
    std::istringstream in(get(key));
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<long long> Config::get_int_list(const std::string& key) const {
    std::vector<long long> out;
    for (const auto& item : get_list(key)) {
        long long v = 0;
        const auto r = std::from_chars(item.data(), item.data() + item.size(), v);
        if (r.ec != std::errc() || r.ptr != item.data() + item.size()) {
            throw ConfigError("'" + key + "' must be a list of integers, got '" + get(key) + "'");
        }
        out.push_back(v);
    }
    return out;
}

std::string Config::to_text() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
}

FqiConfig ExperimentConfig::arm(LossKind loss) const {
    FqiConfig c = fqi;
    c.loss = loss;
    return c;
}

long long ExperimentConfig::max_trajectories() const {
    long long m = 0;
    for (long long n : n_grid) m = std::max(m, n);
    return m;
}

ExperimentConfig resolve(const Config& cfg) {
    ExperimentConfig x;
    x.source = cfg;
    x.name = cfg.get_string("experiment.name");
    const EnvKind kind = parse_env_kind(cfg.get_string("env.name"));
    x.env = kind == EnvKind::MountainCar ? mountain_car_spec() : pendulum_spec();
    auto& mc = x.env.mountain_car;
    mc.force = cfg.get_double("env.mountain_car.force");
    mc.gravity = cfg.get_double("env.mountain_car.gravity");
    mc.x_min = cfg.get_double("env.mountain_car.x_min");
    mc.x_max = cfg.get_double("env.mountain_car.x_max");
    mc.v_max = cfg.get_double("env.mountain_car.v_max");
    mc.goal = cfg.get_double("env.mountain_car.goal");
    mc.start_x = cfg.get_double("env.mountain_car.start_x");
    mc.start_v = cfg.get_double("env.mountain_car.start_v");
    auto& pd = x.env.pendulum;
    pd.g = cfg.get_double("env.pendulum.g");
    pd.pole_mass = cfg.get_double("env.pendulum.pole_mass");
    pd.cart_mass = cfg.get_double("env.pendulum.cart_mass");
    pd.length = cfg.get_double("env.pendulum.length");
    pd.dt = cfg.get_double("env.pendulum.dt");
    pd.force = cfg.get_double("env.pendulum.force");
    pd.noise = cfg.get_double("env.pendulum.noise");
    pd.v_max = cfg.get_double("env.pendulum.v_max");
    pd.start_spread = cfg.get_double("env.pendulum.start_spread");
    x.env.horizon = static_cast<int>(cfg.get_int("env.horizon"));
    if (x.env.horizon < 1) throw ConfigError("env.horizon must be >= 1");
    if (!(mc.x_min < mc.goal && mc.goal <= mc.x_max && mc.v_max > 0.0)) throw ConfigError("env.mountain_car: bad bounds");
    if (!(pd.v_max > 0.0 && pd.dt > 0.0 && pd.noise >= 0.0)) throw ConfigError("env.pendulum: bad constants");

    x.feature_order = static_cast<int>(cfg.get_int("features.order"));
    if (x.feature_order < 1 || x.feature_order > 16) throw ConfigError("features.order must lie in [1,16]");

    x.dataset_path = cfg.get_string("dataset.path");
    x.n_grid = cfg.get_int_list("dataset.n_grid");
    if (x.n_grid.empty()) throw ConfigError("dataset.n_grid must not be empty");
    for (long long n : x.n_grid) {
        if (n < 1) throw ConfigError("dataset.n_grid entries must be positive");
    }
    x.required_successes = cfg.get_int("dataset.required_successes");
    if (x.required_successes > *std::min_element(x.n_grid.begin(), x.n_grid.end())) {
        throw ConfigError("dataset.required_successes exceeds the smallest dataset size");
    }
    x.draw_budget = cfg.get_int("dataset.draw_budget");
    if (x.draw_budget < x.max_trajectories()) throw ConfigError("dataset.draw_budget below the largest dataset size");

    x.fqi.k = static_cast<int>(cfg.get_int("fqi.k"));
    x.fqi.gamma = cfg.get_double("fqi.gamma");
    x.fqi.target_clip = cfg.get_bool("fqi.target_clip");
    const std::string init = cfg.get_string("fqi.init");
    if (init == "zeros") {
        x.fqi.init = InitKind::Zeros;
    } else if (init == "seeded") {
        x.fqi.init = InitKind::Seeded;
    } else {
        throw ConfigError("fqi.init must be zeros or seeded");
    }
    x.fqi.init_seed = static_cast<std::uint64_t>(cfg.get_int("fqi.init_seed"));
    x.fqi.optimizer.grad_tol = cfg.get_double("bfgs.grad_tol");
    x.fqi.optimizer.max_iters = static_cast<int>(cfg.get_int("bfgs.max_iters"));
    x.fqi.optimizer.wolfe_c1 = cfg.get_double("bfgs.wolfe_c1");
    x.fqi.optimizer.wolfe_c2 = cfg.get_double("bfgs.wolfe_c2");
    x.fqi.optimizer.max_line_search_steps = static_cast<int>(cfg.get_int("bfgs.max_line_search_steps"));
    x.fqi.validate(x.env.finite_horizon());
    x.env.discount = x.env.finite_horizon() ? 1.0 : x.fqi.gamma;

    for (const auto& a : cfg.get_list("arms")) {
        try {
            x.arms.push_back(parse_loss_kind(a));
        } catch (const std::exception&) {
            throw ConfigError("arms: unknown loss '" + a + "'");
        }
    }
    if (x.arms.empty()) throw ConfigError("arms must list at least one loss");

    x.eval_rollouts = static_cast<int>(cfg.get_int("eval.n_rollouts"));
    x.eval_max_steps = static_cast<int>(cfg.get_int("eval.max_steps"));
    x.eval_seed = static_cast<std::uint64_t>(cfg.get_int("eval.seed"));
    if (x.eval_rollouts < 1 || x.eval_max_steps < 1) throw ConfigError("eval settings must be positive");

    const auto explicit_seeds = cfg.get_int_list("trials.seeds");
    if (!explicit_seeds.empty()) {
        for (long long s : explicit_seeds) x.trial_seeds.push_back(static_cast<std::uint64_t>(s));
    } else {
        const long long count = cfg.get_int("trials.count");
        const long long base = cfg.get_int("trials.base_seed");
        if (count < 1) throw ConfigError("trials.count must be >= 1");
        for (long long i = 0; i < count; ++i) x.trial_seeds.push_back(static_cast<std::uint64_t>(base + i));
    }
    x.workers = static_cast<int>(cfg.get_int("run.workers"));
    if (x.workers < 1) throw ConfigError("run.workers must be >= 1");
    return x;
}

std::string describe_arm(const FqiConfig& a) {
    std::ostringstream out;
    out << "loss=" << to_string(a.loss) << '\n'
        << "k=" << a.k << '\n'
        << "gamma=" << fmt(a.gamma) << '\n'
        << "target_clip=" << (a.target_clip ? "true" : "false") << '\n'
        << "init=" << (a.init == InitKind::Zeros ? "zeros" : "seeded") << '\n'
        << "init_seed=" << a.init_seed << '\n'
        << "bfgs.grad_tol=" << fmt(a.optimizer.grad_tol) << '\n'
        << "bfgs.max_iters=" << a.optimizer.max_iters << '\n'
        << "bfgs.wolfe_c1=" << fmt(a.optimizer.wolfe_c1) << '\n'
        << "bfgs.wolfe_c2=" << fmt(a.optimizer.wolfe_c2) << '\n'
        << "bfgs.max_line_search_steps=" << a.optimizer.max_line_search_steps << '\n';
    return out.str();
}

std::vector<std::string> diff_descriptions(const std::string& a, const std::string& b) {
    auto parse = [](const std::string& text) {
        std::map<std::string, std::string> m;
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            const auto eq = line.find('=');
            if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 1);
        }
        return m;
    };
    const auto ma = parse(a), mb = parse(b);
    std::vector<std::string> keys;
    for (const auto& [k, v] : ma) {
        const auto it = mb.find(k);
        if (it == mb.end() || it->second != v) keys.push_back(k);
    }
    for (const auto& [k, v] : mb) {
        if (ma.find(k) == ma.end()) keys.push_back(k);
    }
    return keys;
}

}  // namespace fqilog
