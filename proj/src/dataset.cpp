#include "fqilog/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "fqilog/errors.hpp"

namespace fqilog {

TransitionView Dataset::view() const {
    TransitionView v;
    v.dim = dim;
    v.states = states;
    v.actions = actions;
    v.costs = costs;
    v.next_states = next_states;
    v.terminal = terminal;
    v.steps = steps;
    return v;
}

void Dataset::append(const Trajectory& tr) {
    states.insert(states.end(), tr.states.begin(), tr.states.end());
    next_states.insert(next_states.end(), tr.next_states.begin(), tr.next_states.end());
    actions.insert(actions.end(), tr.actions.begin(), tr.actions.end());
    costs.insert(costs.end(), tr.costs.begin(), tr.costs.end());
    terminal.insert(terminal.end(), tr.terminal.begin(), tr.terminal.end());
    steps.insert(steps.end(), tr.steps.begin(), tr.steps.end());
    episode_offsets.push_back(static_cast<long long>(actions.size()));
}

Dataset collect(const EnvSpec& env, const CollectOptions& opts) {
    if (opts.n_trajectories < 1) throw ConfigError("collect: n_trajectories must be >= 1");
    if (opts.required_successes > opts.n_trajectories) {
        throw ConfigError("collect: required_successes exceeds n_trajectories");
    }
    if (opts.draw_budget < opts.n_trajectories) throw ConfigError("collect: draw budget below n_trajectories");
    const int horizon = opts.horizon > 0 ? opts.horizon : env.horizon;

    const bool exact = opts.required_successes > 0;
    const long long want_success = exact ? opts.required_successes : 0;
    const long long want_fail = exact ? opts.n_trajectories - opts.required_successes : 0;
    std::vector<Trajectory> successes, failures, kept;
    long long drawn = 0;
    while (true) {
        if (exact && static_cast<long long>(successes.size()) == want_success &&
            static_cast<long long>(failures.size()) == want_fail) {
            break;
        }
        if (!exact && static_cast<long long>(kept.size()) == opts.n_trajectories) break;
        if (drawn >= opts.draw_budget) {
            throw DataError("collect: draw budget of " + std::to_string(opts.draw_budget) +
                            " episodes exhausted with " + std::to_string(successes.size()) + "/" +
                            std::to_string(want_success) + " successes and " + std::to_string(failures.size()) +
                            "/" + std::to_string(want_fail) + " failures kept");
        }
        const std::uint64_t ep_seed = derive_seed(opts.seed, static_cast<std::uint64_t>(drawn));
        ++drawn;
        Trajectory tr = rollout(env, uniform_random_policy(derive_seed(ep_seed, 1)), derive_seed(ep_seed, 2), horizon);
        if (!exact) {
            kept.push_back(std::move(tr));
        } else if (tr.success) {
            if (static_cast<long long>(successes.size()) < want_success) successes.push_back(std::move(tr));
        } else if (static_cast<long long>(failures.size()) < want_fail) {
            failures.push_back(std::move(tr));
        }
    }
    if (!exact) {
        std::stable_partition(kept.begin(), kept.end(), [](const Trajectory& t) { return t.success; });
        for (const auto& t : kept) (t.success ? successes : failures).push_back(t);
    }

    Dataset ds;
    ds.dim = env.dim();
    ds.manifest.env_name = std::string(to_string(env.kind));
    ds.manifest.physics_hash = env.physics_hash();
    ds.manifest.seed = opts.seed;
    ds.manifest.n_trajectories = opts.n_trajectories;
    ds.manifest.n_successful = static_cast<long long>(successes.size());
    ds.manifest.required_successes = opts.required_successes;
    ds.manifest.episodes_drawn = drawn;
    ds.manifest.horizon = horizon;
    for (const auto& t : successes) ds.append(t);
    for (const auto& t : failures) ds.append(t);
    return ds;
}

Dataset take_prefix(const Dataset& ds, long long n) {
    if (n < 0 || n > static_cast<long long>(ds.n_episodes())) {
        throw DataError("take_prefix: requested " + std::to_string(n) + " trajectories but dataset holds " +
                        std::to_string(ds.n_episodes()));
    }
    Dataset out;
    out.manifest = ds.manifest;
    out.manifest.n_trajectories = n;
    out.manifest.n_successful = std::min(ds.manifest.n_successful, n);
    out.dim = ds.dim;
    const std::size_t rows = static_cast<std::size_t>(ds.episode_offsets[static_cast<std::size_t>(n)]);
    const std::size_t d = static_cast<std::size_t>(ds.dim);
    out.states.assign(ds.states.begin(), ds.states.begin() + static_cast<std::ptrdiff_t>(rows * d));
    out.next_states.assign(ds.next_states.begin(), ds.next_states.begin() + static_cast<std::ptrdiff_t>(rows * d));
    out.actions.assign(ds.actions.begin(), ds.actions.begin() + static_cast<std::ptrdiff_t>(rows));
    out.costs.assign(ds.costs.begin(), ds.costs.begin() + static_cast<std::ptrdiff_t>(rows));
    out.terminal.assign(ds.terminal.begin(), ds.terminal.begin() + static_cast<std::ptrdiff_t>(rows));
    out.steps.assign(ds.steps.begin(), ds.steps.begin() + static_cast<std::ptrdiff_t>(rows));
    out.episode_offsets.assign(ds.episode_offsets.begin(), ds.episode_offsets.begin() + n + 1);
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

void put_double(std::string& out, double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
}

template <class Int>
void put_int(std::string& out, Int v) {
    char buf[24];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string body_of(const Dataset& ds) {
    std::string body;
    body.reserve(ds.n_transitions() * 96);
    const std::size_t d = static_cast<std::size_t>(ds.dim);
    for (std::size_t e = 0; e < ds.n_episodes(); ++e) {
        for (auto i = static_cast<std::size_t>(ds.episode_offsets[e]);
             i < static_cast<std::size_t>(ds.episode_offsets[e + 1]); ++i) {
            put_int(body, e);
            body += ',';
            put_int(body, ds.steps[i]);
            body += ',';
            body += ds.terminal[i] ? '1' : '0';
            body += ',';
            put_int(body, ds.actions[i]);
            body += ',';
            put_double(body, ds.costs[i]);
            for (std::size_t k = 0; k < d; ++k) {
                body += ',';
                put_double(body, ds.states[i * d + k]);
            }
            for (std::size_t k = 0; k < d; ++k) {
                body += ',';
                put_double(body, ds.next_states[i * d + k]);
            }
            body += '\n';
        }
    }
    return body;
}

}  // namespace

std::string serialize_dataset(const Dataset& ds) {
    const std::string body = body_of(ds);
    std::ostringstream h;
    const auto& m = ds.manifest;
    h << "format_version=" << kDatasetFormatVersion << '\n'
      << "env=" << m.env_name << '\n'
      << "physics_hash=" << hex64(m.physics_hash) << '\n'
      << "behavior_policy=" << m.behavior_policy << '\n'
      << "seed=" << m.seed << '\n'
      << "n_trajectories=" << m.n_trajectories << '\n'
      << "n_successful=" << m.n_successful << '\n'
      << "required_successes=" << m.required_successes << '\n'
      << "episodes_drawn=" << m.episodes_drawn << '\n'
      << "horizon=" << m.horizon << '\n'
      << "prng=" << m.prng << '\n'
      << "dim=" << ds.dim << '\n'
      << "n_transitions=" << ds.n_transitions() << '\n'
      << "checksum=" << hex64(fnv1a64(body)) << '\n';
    return h.str() + body;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    const std::string text = serialize_dataset(ds);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
}

namespace {

class RowParser {
public:
    RowParser(std::string_view body) : p_(body.data()), end_(body.data() + body.size()) {}

    bool done() const { return p_ == end_; }
    long long line() const { return line_; }

    template <class T>
    T field(char terminator) {
        T v{};
        const auto r = std::from_chars(p_, end_, v);
        if (r.ec != std::errc() || r.ptr == end_ || *r.ptr != terminator) fail();
        p_ = r.ptr + 1;
        return v;
    }
    void next_line() { ++line_; }

    [[noreturn]] void fail() const {
        throw DataError("dataset: malformed row at body line " + std::to_string(line_ + 1));
    }

private:
    const char* p_;
    const char* end_;
    long long line_ = 0;
};

}  // namespace

Dataset parse_dataset(std::string_view text, const std::string& expected_env, std::uint64_t expected_physics_hash) {
    std::map<std::string, std::string, std::less<>> header;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t eol = text.find('\n', pos);
        const std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) break;
        header.emplace(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
        pos = eol == std::string_view::npos ? text.size() : eol + 1;
    }
    auto get = [&](const char* key) -> const std::string& {
        const auto it = header.find(key);
        if (it == header.end()) throw DataError(std::string("dataset: header lacks '") + key + "'");
        return it->second;
    };
    auto get_int = [&](const char* key) {
        const std::string& s = get(key);
        long long v = 0;
        const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw DataError(std::string("dataset: bad '") + key + "'");
        return v;
    };
    auto get_u64 = [&](const char* key, int base) {
        const std::string& s = get(key);
        std::uint64_t v = 0;
        const auto r = std::from_chars(s.data(), s.data() + s.size(), v, base);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw DataError(std::string("dataset: bad '") + key + "'");
        return v;
    };

    if (header.find("format_version") == header.end()) throw VersionError("dataset: missing format_version");
    if (get_int("format_version") != kDatasetFormatVersion) {
        throw VersionError("dataset: unsupported format_version " + get("format_version"));
    }
    const std::string_view body = text.substr(pos);
    if (get_u64("checksum", 16) != fnv1a64(body)) throw ChecksumError("dataset: checksum mismatch");

    Dataset ds;
    auto& m = ds.manifest;
    m.env_name = get("env");
    if (!expected_env.empty() && m.env_name != expected_env) {
        throw DataError("dataset: environment '" + m.env_name + "' does not match configured '" + expected_env + "'");
    }
    m.physics_hash = get_u64("physics_hash", 16);
    if (expected_physics_hash != 0 && m.physics_hash != expected_physics_hash) {
        throw DataError("dataset: physics constants differ from the configured environment");
    }
    m.behavior_policy = get("behavior_policy");
    m.seed = get_u64("seed", 10);
    m.n_trajectories = get_int("n_trajectories");
    m.n_successful = get_int("n_successful");
    m.required_successes = get_int("required_successes");
    m.episodes_drawn = get_int("episodes_drawn");
    m.horizon = static_cast<int>(get_int("horizon"));
    m.prng = get("prng");
    ds.dim = static_cast<int>(get_int("dim"));
    const long long n_rows = get_int("n_transitions");
    if (ds.dim < 1 || n_rows < 0) throw DataError("dataset: bad dimensions in header");

    const std::size_t d = static_cast<std::size_t>(ds.dim);
    const auto n = static_cast<std::size_t>(n_rows);
    ds.states.reserve(n * d);
    ds.next_states.reserve(n * d);
    ds.actions.reserve(n);
    ds.costs.reserve(n);
    ds.terminal.reserve(n);
    ds.steps.reserve(n);

    RowParser rp(body);
    long long current = -1;
    while (!rp.done()) {
        const long long ep = rp.field<long long>(',');
        const int step = rp.field<int>(',');
        const int term = rp.field<int>(',');
        const int action = rp.field<int>(',');
        const double cost = rp.field<double>(',');
        if (term != 0 && term != 1) rp.fail();
        if (!(cost >= 0.0 && cost <= 1.0)) throw DataError("dataset: cost outside [0,1] at body line " + std::to_string(rp.line() + 1));
        if (ep != current) {
            if (ep != current + 1) throw DataError("dataset: episode ids are not contiguous");
            if (current >= 0) ds.episode_offsets.push_back(static_cast<long long>(ds.actions.size()));
            current = ep;
        }
        for (std::size_t k = 0; k < d; ++k) ds.states.push_back(rp.field<double>(','));
        for (std::size_t k = 0; k < d; ++k) ds.next_states.push_back(rp.field<double>(k + 1 == d ? '\n' : ','));
        ds.steps.push_back(step);
        ds.terminal.push_back(static_cast<std::uint8_t>(term));
        ds.actions.push_back(action);
        ds.costs.push_back(cost);
        rp.next_line();
    }
    if (current >= 0) ds.episode_offsets.push_back(static_cast<long long>(ds.actions.size()));
    if (static_cast<long long>(ds.n_transitions()) != n_rows) throw DataError("dataset: row count differs from header");
    if (static_cast<long long>(ds.n_episodes()) != m.n_trajectories) {
        throw DataError("dataset: episode count differs from header");
    }
    if (m.n_successful < 0 || m.n_successful > m.n_trajectories) throw DataError("dataset: bad n_successful");
    return ds;
}

Dataset load_dataset(const std::string& path, const std::string& expected_env, std::uint64_t expected_physics_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed for '" + path + "'");
    return parse_dataset(ss.str(), expected_env, expected_physics_hash);
}

}  // namespace fqilog
