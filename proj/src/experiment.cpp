#include "fqilog/experiment.hpp"

#include <charconv>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "fqilog/errors.hpp"

namespace fqilog {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

enum : std::uint64_t { kTagDataset = 0xda7a, kTagEval = 0xe7a1 };

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

// Commas and newlines would break the CSV.
std::string sanitize(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return s;
}

json manifest_json(const DatasetManifest& m) {
    return {{"env", m.env_name},
            {"physics_hash", hex64(m.physics_hash)},
            {"behavior_policy", m.behavior_policy},
            {"seed", m.seed},
            {"n_trajectories", m.n_trajectories},
            {"n_successful", m.n_successful},
            {"required_successes", m.required_successes},
            {"episodes_drawn", m.episodes_drawn},
            {"horizon", m.horizon},
            {"prng", m.prng}};
}

json environment_json(const EnvSpec& e) {
    json j = {{"name", std::string(to_string(e.kind))}, {"horizon", e.horizon}, {"discount", e.discount}};
    if (e.kind == EnvKind::MountainCar) {
        const auto& m = e.mountain_car;
        j["constants"] = {{"force", m.force},     {"gravity", m.gravity}, {"x_min", m.x_min},
                          {"x_max", m.x_max},     {"v_max", m.v_max},     {"goal", m.goal},
                          {"start_x", m.start_x}, {"start_v", m.start_v}};
    } else {
        const auto& p = e.pendulum;
        j["constants"] = {{"g", p.g},         {"pole_mass", p.pole_mass}, {"cart_mass", p.cart_mass},
                          {"length", p.length}, {"dt", p.dt},             {"force", p.force},
                          {"noise", p.noise},   {"v_max", p.v_max},       {"start_spread", p.start_spread}};
    }
    j["physics_hash"] = hex64(e.physics_hash());
    return j;
}

json run_summary(const FqiRun& run) {
    std::map<std::string, int> terms;
    double iters = 0.0;
    for (const auto& r : run.reports) {
        ++terms[std::string(to_string(r.termination))];
        iters += r.iters;
    }
    json t = json::object();
    for (const auto& [k, v] : terms) t[k] = v;
    // For the finite-horizon run the first-step parameters are the last fitted.
    const Eigen::VectorXd& final_params = run.finite_horizon ? run.params.front() : run.params.back();
    return {{"train_loss", run.train_loss},
            {"optimizer_terminations", t},
            {"mean_bfgs_iterations", run.reports.empty() ? 0.0 : iters / static_cast<double>(run.reports.size())},
            {"final_params", std::vector<double>(final_params.data(), final_params.data() + final_params.size())}};
}

}  // namespace

std::uint64_t dataset_seed(std::uint64_t trial_seed) { return derive_seed(trial_seed, kTagDataset); }

std::uint64_t eval_seed(const ExperimentConfig& cfg, std::uint64_t trial_seed) {
    return derive_seed(derive_seed(cfg.eval_seed, kTagEval), trial_seed);
}

Dataset trial_dataset(const ExperimentConfig& cfg, std::uint64_t trial_seed) {
    if (!cfg.dataset_path.empty()) {
        Dataset ds = load_dataset(cfg.dataset_path, std::string(to_string(cfg.env.kind)), cfg.env.physics_hash());
        if (static_cast<long long>(ds.n_episodes()) < cfg.max_trajectories()) {
            throw DataError("dataset '" + cfg.dataset_path + "' holds fewer trajectories than dataset.n_grid needs");
        }
        return ds;
    }
    CollectOptions opts;
    opts.n_trajectories = cfg.max_trajectories();
    opts.required_successes = cfg.required_successes;
    opts.seed = dataset_seed(trial_seed);
    opts.horizon = cfg.env.horizon;
    opts.draw_budget = cfg.draw_budget;
    return collect(cfg.env, opts);
}

FqiRun train(const ExperimentConfig& cfg, const Dataset& data, LossKind loss) {
    if (data.dim != cfg.env.dim()) throw DataError("train: dataset dimension does not match the environment");
    const FqiConfig arm = cfg.arm(loss);
    if (cfg.env.finite_horizon()) {
        return fqi_finite_horizon(data.view(), cfg.env.horizon, cfg.basis(), cfg.env.n_actions(), arm);
    }
    return fqi_stationary(data.view(), cfg.basis(), cfg.env.n_actions(), arm);
}

EvalSummary evaluate(const ExperimentConfig& cfg, const FqiRun& run, std::uint64_t seed) {
    const PolicyFn policy = [&run](std::span<const double> s, int h) { return run.act(s, h); };
    return evaluate_policy(cfg.env, policy, cfg.eval_rollouts, seed, cfg.eval_max_steps);
}

std::string metric_name(const ExperimentConfig& cfg) {
    return cfg.env.kind == EnvKind::MountainCar ? "cost" : "balance_rate";
}

std::pair<double, double> metric_value(const ExperimentConfig& cfg, const EvalSummary& s) {
    if (cfg.env.kind == EnvKind::MountainCar) return {s.mean_cost, s.cost_std_error};
    return {s.success_rate, s.success_std_error};
}

std::vector<std::string> isolation_audit(const ExperimentConfig& cfg) {
    std::set<std::string> fields;
    for (std::size_t i = 0; i < cfg.arms.size(); ++i) {
        for (std::size_t j = i + 1; j < cfg.arms.size(); ++j) {
            for (auto& k : diff_descriptions(describe_arm(cfg.arm(cfg.arms[i])), describe_arm(cfg.arm(cfg.arms[j])))) {
                fields.insert(k);
            }
        }
    }
    return {fields.begin(), fields.end()};
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, const LogFn& log) {
    const auto audit = isolation_audit(cfg);
    for (const auto& f : audit) {
        if (f != "loss") throw ConfigError("loss-switch isolation violated: arms differ in '" + f + "'");
    }
    if (std::set<LossKind>(cfg.arms.begin(), cfg.arms.end()).size() != cfg.arms.size()) {
        throw ConfigError("arms must not repeat a loss");
    }
    ensure_dir(out_dir);

    struct TrialOutput {
        std::vector<ResultRow> rows;
        std::vector<TimingRow> timings;
        json artifact;
    };
    const std::size_t n_trials = cfg.trial_seeds.size();
    std::vector<TrialOutput> outputs(n_trials);
    std::mutex log_mutex;
    auto say = [&](const std::string& msg) {
        if (!log) return;
        std::lock_guard<std::mutex> lock(log_mutex);
        log(msg);
    };
    const std::string env_name(to_string(cfg.env.kind));
    const std::string metric = metric_name(cfg);

    auto run_trial = [&](std::size_t t) {
        using clock = std::chrono::steady_clock;
        const std::uint64_t seed = cfg.trial_seeds[t];
        TrialOutput& out = outputs[t];
        out.artifact = {{"trial_seed", seed}, {"eval_seed", eval_seed(cfg, seed)}};
        Dataset full;
        try {
            full = trial_dataset(cfg, seed);
            out.artifact["dataset"] = manifest_json(full.manifest);
        } catch (const std::exception& e) {
            out.artifact["dataset_error"] = e.what();
            for (long long n : cfg.n_grid) {
                for (LossKind loss : cfg.arms) {
                    out.rows.push_back({env_name, std::string(to_string(loss)), n, cfg.required_successes, seed, metric,
                                        std::nan(""), std::nan(""), sanitize(std::string("error: ") + e.what())});
                }
            }
            say("trial " + std::to_string(seed) + ": dataset failed: " + e.what());
            return;
        }
        json runs = json::array();
        for (long long n : cfg.n_grid) {
            const Dataset data = take_prefix(full, n);
            for (LossKind loss : cfg.arms) {
                ResultRow row{env_name, std::string(to_string(loss)), n, cfg.required_successes, seed, metric};
                TimingRow timing{seed, n, row.loss};
                json entry = {{"n_trajectories", n}, {"loss", row.loss}};
                try {
                    const auto t0 = clock::now();
                    const FqiRun run = train(cfg, data, loss);
                    const auto t1 = clock::now();
                    const EvalSummary s = evaluate(cfg, run, eval_seed(cfg, seed));
                    const auto t2 = clock::now();
                    std::tie(row.value, row.std_error) = metric_value(cfg, s);
                    timing.train_seconds = std::chrono::duration<double>(t1 - t0).count();
                    timing.eval_seconds = std::chrono::duration<double>(t2 - t1).count();
                    entry["fqi"] = run_summary(run);
                    entry["evaluation"] = {{"n_rollouts", s.n_rollouts},
                                           {"mean_cost", s.mean_cost},
                                           {"cost_std_error", s.cost_std_error},
                                           {"success_rate", s.success_rate},
                                           {"success_std_error", s.success_std_error}};
                } catch (const std::exception& e) {
                    row.value = std::nan("");
                    row.std_error = std::nan("");
                    row.status = sanitize(std::string("error: ") + e.what());
                    entry["error"] = e.what();
                }
                say("trial " + std::to_string(seed) + " n=" + std::to_string(n) + " " + row.loss + ": " + metric +
                    "=" + num(row.value));
                runs.push_back(std::move(entry));
                out.rows.push_back(std::move(row));
                out.timings.push_back(timing);
            }
        }
        out.artifact["runs"] = std::move(runs);
    };

    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), n_trials);
    if (workers <= 1) {
        for (std::size_t t = 0; t < n_trials; ++t) run_trial(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t t = next++; t < n_trials; t = next++) run_trial(t);
            });
        }
        for (auto& th : pool) th.join();
    }

    ExperimentOutput result;
    json trials = json::array();
    for (auto& o : outputs) {
        result.rows.insert(result.rows.end(), o.rows.begin(), o.rows.end());
        result.timings.insert(result.timings.end(), o.timings.begin(), o.timings.end());
        trials.push_back(std::move(o.artifact));
    }

    const fs::path dir(out_dir);
    result.results_path = (dir / "results.csv").string();
    result.timings_path = (dir / "timings.csv").string();
    result.artifact_path = (dir / "artifact.json").string();
    write_file(result.results_path, format_results(result.rows, cfg.env.physics_hash()));

    std::string timings = "trial_seed,n_trajectories,loss,train_seconds,eval_seconds\n";
    for (const auto& t : result.timings) {
        timings += std::to_string(t.trial_seed) + "," + std::to_string(t.n_trajectories) + "," + t.loss + "," +
                   num(t.train_seconds) + "," + num(t.eval_seconds) + "\n";
    }
    write_file(result.timings_path, timings);

    json arms = json::object();
    for (LossKind loss : cfg.arms) arms[std::string(to_string(loss))] = describe_arm(cfg.arm(loss));
    json config = json::object();
    for (const auto& [k, v] : cfg.source.values()) config[k] = v;
    json artifact = {{"schema", "fqilog-artifact/1"},
                     {"version", kVersion},
                     {"experiment", cfg.name},
                     {"prng", std::string(Rng::kAlgorithm)},
                     {"config", config},
                     {"trial_seeds", cfg.trial_seeds},
                     {"environment", environment_json(cfg.env)},
                     {"arms", arms},
                     {"isolation_audit", {{"differing_fields", audit}, {"pass", true}}},
                     {"trials", trials}};
    write_file(result.artifact_path, artifact.dump(2) + "\n");
    return result;
}

std::string format_results(const std::vector<ResultRow>& rows, std::uint64_t physics_hash) {
    std::string out = std::string("#schema=") + kResultsSchema + "\n#physics_hash=" + hex64(physics_hash) + "\n";
    out += "env,loss,n_trajectories,required_successes,trial_seed,metric,value,std_error,status\n";
    for (const auto& r : rows) {
        out += r.env + "," + r.loss + "," + std::to_string(r.n_trajectories) + "," +
               std::to_string(r.required_successes) + "," + std::to_string(r.trial_seed) + "," + r.metric + "," +
               num(r.value) + "," + num(r.std_error) + "," + r.status + "\n";
    }
    return out;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(line);
    while (std::getline(in, item, sep)) out.push_back(item);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

template <class T>
T parse_num(const std::string& s, const std::string& what) {
    if constexpr (std::is_floating_point_v<T>) {
        if (s == "nan") return std::nan("");
    }
    T v{};
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw DataError("results: bad " + what + " '" + s + "'");
    return v;
}

}  // namespace

std::vector<ResultRow> read_results(const std::string& path, std::uint64_t* physics_hash) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line) || line != std::string("#schema=") + kResultsSchema) {
        throw VersionError("results: '" + path + "' does not carry schema " + kResultsSchema);
    }
    std::uint64_t hash = 0;
    std::vector<ResultRow> rows;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind("#physics_hash=", 0) == 0) {
            const std::string h = line.substr(14);
            const auto r = std::from_chars(h.data(), h.data() + h.size(), hash, 16);
            if (r.ec != std::errc()) throw DataError("results: bad physics hash in '" + path + "'");
            continue;
        }
        if (line[0] == '#') continue;
        if (!header_seen) {
            if (line != "env,loss,n_trajectories,required_successes,trial_seed,metric,value,std_error,status") {
                throw DataError("results: unexpected header in '" + path + "'");
            }
            header_seen = true;
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 9) throw DataError("results: malformed row in '" + path + "': " + line);
        ResultRow r;
        r.env = f[0];
        r.loss = f[1];
        r.n_trajectories = parse_num<long long>(f[2], "n_trajectories");
        r.required_successes = parse_num<long long>(f[3], "required_successes");
        r.trial_seed = parse_num<std::uint64_t>(f[4], "trial_seed");
        r.metric = f[5];
        r.value = parse_num<double>(f[6], "value");
        r.std_error = parse_num<double>(f[7], "std_error");
        r.status = f[8];
        rows.push_back(std::move(r));
    }
    if (physics_hash) *physics_hash = hash;
    return rows;
}

std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows) {
    using Key = std::tuple<std::string, std::string, long long, long long, std::string>;
    std::map<Key, std::pair<std::vector<double>, long long>> groups;
    for (const auto& r : rows) {
        auto& g = groups[Key{r.env, r.loss, r.n_trajectories, r.required_successes, r.metric}];
        if (r.status == "ok" && std::isfinite(r.value)) {
            g.first.push_back(r.value);
        } else {
            ++g.second;
        }
    }
    std::vector<AggregateRow> out;
    for (const auto& [k, g] : groups) {
        AggregateRow a;
        std::tie(a.env, a.loss, a.n_trajectories, a.required_successes, a.metric) = k;
        a.n_trials = static_cast<long long>(g.first.size());
        a.n_failed = g.second;
        std::tie(a.mean, a.std_error) = mean_and_std_error(g.first);
        if (g.first.empty()) a.mean = a.std_error = std::nan("");
        out.push_back(std::move(a));
    }
    return out;
}

namespace {

// Minimal static line plot: one polyline with error bars per loss.
std::string render_svg(const std::string& title, const std::string& ylabel,
                       const std::map<std::string, std::vector<const AggregateRow*>>& series) {
    const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 60;
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& [loss, pts] : series) {
        for (const auto* p : pts) {
            if (!std::isfinite(p->mean)) continue;
            xmin = std::min(xmin, static_cast<double>(p->n_trajectories));
            xmax = std::max(xmax, static_cast<double>(p->n_trajectories));
            const double se = std::isfinite(p->std_error) ? p->std_error : 0.0;
            ymin = std::min(ymin, p->mean - se);
            ymax = std::max(ymax, p->mean + se);
        }
    }
    if (!std::isfinite(xmin)) {
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    if (xmax == xmin) xmax = xmin + 1;
    ymin = std::min(ymin, 0.0);
    ymax = std::max(ymax, 1.0);
    auto sx = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
    auto sy = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n"
      << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\" font-size=\"12\">trajectories</text>\n"
      << "<text x=\"18\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 18 " << H / 2 << ")\">"
      << ylabel << "</text>\n";
    for (int i = 0; i <= 4; ++i) {
        const double y = ymin + (ymax - ymin) * i / 4.0;
        s << "<text x=\"" << L - 6 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\" font-size=\"10\">" << num(std::round(y * 100) / 100)
          << "</text>\n";
    }
    int c = 0;
    for (const auto& [loss, pts] : series) {
        const char* col = colors[c % 4];
        std::ostringstream poly;
        for (const auto* p : pts) {
            if (!std::isfinite(p->mean)) continue;
            const double x = sx(static_cast<double>(p->n_trajectories));
            poly << x << "," << sy(p->mean) << " ";
            const double se = std::isfinite(p->std_error) ? p->std_error : 0.0;
            s << "<line x1=\"" << x << "\" y1=\"" << sy(p->mean - se) << "\" x2=\"" << x << "\" y2=\""
              << sy(p->mean + se) << "\" stroke=\"" << col << "\"/>\n";
            s << "<text x=\"" << x << "\" y=\"" << H - B + 14 << "\" text-anchor=\"middle\" font-size=\"10\">"
              << p->n_trajectories << "</text>\n";
        }
        s << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\" points=\"" << poly.str() << "\"/>\n";
        s << "<text x=\"" << W - R - 90 << "\" y=\"" << T + 16 * (c + 1) << "\" fill=\"" << col
          << "\" font-size=\"12\">FQI-" << loss << "</text>\n";
        ++c;
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace

std::vector<std::string> report(const std::vector<std::string>& result_paths, const std::string& out_dir) {
    if (result_paths.empty()) throw ConfigError("report: no result files given");
    std::vector<ResultRow> rows;
    std::map<std::string, std::uint64_t> env_hash;
    std::set<std::tuple<std::string, std::string, long long, long long, std::uint64_t, std::string>> seen;
    for (const auto& p : result_paths) {
        std::uint64_t hash = 0;
        auto part = read_results(p, &hash);
        for (auto& r : part) {
            const auto [it, inserted] = env_hash.emplace(r.env, hash);
            if (!inserted && it->second != hash) {
                throw DataError("report: results for '" + r.env + "' come from different physics constants");
            }
            if (!seen.emplace(r.env, r.loss, r.n_trajectories, r.required_successes, r.trial_seed, r.metric).second) {
                throw DataError("report: duplicate trial " + std::to_string(r.trial_seed) + " for " + r.env + "/" +
                                r.loss + "/n=" + std::to_string(r.n_trajectories));
            }
            rows.push_back(std::move(r));
        }
    }
    ensure_dir(out_dir);
    const auto agg = aggregate(rows);
    std::vector<std::string> written;

    std::string text = std::string("#schema=") + kAggregateSchema + "\n";
    text += "env,loss,n_trajectories,required_successes,metric,n_trials,n_failed,mean,std_error\n";
    for (const auto& a : agg) {
        text += a.env + "," + a.loss + "," + std::to_string(a.n_trajectories) + "," +
                std::to_string(a.required_successes) + "," + a.metric + "," + std::to_string(a.n_trials) + "," +
                std::to_string(a.n_failed) + "," + num(a.mean) + "," + num(a.std_error) + "\n";
    }
    const fs::path dir(out_dir);
    write_file(dir / "aggregate.csv", text);
    written.push_back((dir / "aggregate.csv").string());

    // One learning curve per (env, metric, required_successes).
    using FigKey = std::tuple<std::string, std::string, long long>;
    std::map<FigKey, std::map<std::string, std::vector<const AggregateRow*>>> figures;
    for (const auto& a : agg) figures[FigKey{a.env, a.metric, a.required_successes}][a.loss].push_back(&a);
    for (const auto& [key, series] : figures) {
        const auto& [env, metric, req] = key;
        const std::string stem = "curve_" + env + "_" + metric + "_r" + std::to_string(req);
        std::set<long long> ns;
        for (const auto& [loss, pts] : series) {
            for (const auto* p : pts) ns.insert(p->n_trajectories);
        }
        std::string dat = "# n_trajectories";
        for (const auto& [loss, pts] : series) dat += " " + loss + "_mean " + loss + "_se";
        dat += "\n";
        for (long long n : ns) {
            dat += std::to_string(n);
            for (const auto& [loss, pts] : series) {
                const AggregateRow* hit = nullptr;
                for (const auto* p : pts) {
                    if (p->n_trajectories == n) hit = p;
                }
                dat += hit ? " " + num(hit->mean) + " " + num(hit->std_error) : " nan nan";
            }
            dat += "\n";
        }
        write_file(dir / (stem + ".dat"), dat);
        written.push_back((dir / (stem + ".dat")).string());
        const std::string title = env + " (" + std::to_string(req) + " successful trajectories required)";
        write_file(dir / (stem + ".svg"), render_svg(title, metric, series));
        written.push_back((dir / (stem + ".svg")).string());
    }
    return written;
}

void save_run(const FqiRun& run, const ExperimentConfig& cfg, const std::string& path) {
    std::string out = std::string("schema=") + kRunSchema + "\n";
    out += "env=" + std::string(to_string(cfg.env.kind)) + "\n";
    out += "physics_hash=" + hex64(cfg.env.physics_hash()) + "\n";
    out += "finite_horizon=" + std::string(run.finite_horizon ? "1" : "0") + "\n";
    out += "order=" + std::to_string(run.basis.order()) + "\n";
    out += "n_actions=" + std::to_string(run.n_actions) + "\n";
    std::string lo, hi;
    for (int i = 0; i < run.basis.dim(); ++i) {
        lo += (i ? "," : "") + num(run.basis.bounds().lo[static_cast<std::size_t>(i)]);
        hi += (i ? "," : "") + num(run.basis.bounds().hi[static_cast<std::size_t>(i)]);
    }
    out += "bounds_lo=" + lo + "\nbounds_hi=" + hi + "\n";
    out += "count=" + std::to_string(run.params.size()) + "\n";
    for (std::size_t k = 0; k < run.params.size(); ++k) {
        out += num(run.train_loss[k]);
        for (Eigen::Index j = 0; j < run.params[k].size(); ++j) out += "," + num(run.params[k][j]);
        out += "\n";
    }
    write_file(path, out);
}

FqiRun load_run(const std::string& path, const ExperimentConfig* expected) {
    std::istringstream in(read_file(path));
    std::map<std::string, std::string> h;
    std::string line;
    for (int i = 0; i < 9 && std::getline(in, line); ++i) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError("run file: malformed header in '" + path + "'");
        h[line.substr(0, eq)] = line.substr(eq + 1);
    }
    if (h["schema"] != kRunSchema) throw VersionError("run file: unsupported schema '" + h["schema"] + "'");
    if (expected) {
        if (h["env"] != to_string(expected->env.kind)) throw DataError("run file: trained on '" + h["env"] + "'");
        if (h["physics_hash"] != hex64(expected->env.physics_hash())) {
            throw DataError("run file: physics constants differ from the configuration");
        }
    }
    auto doubles = [&](const std::string& s) {
        std::vector<double> v;
        for (const auto& f : split(s, ',')) v.push_back(parse_num<double>(f, "number"));
        return v;
    };
    FqiRun run;
    run.finite_horizon = h["finite_horizon"] == "1";
    run.n_actions = parse_num<int>(h["n_actions"], "n_actions");
    run.basis = FourierBasis(parse_num<int>(h["order"], "order"), BoxBounds(doubles(h["bounds_lo"]), doubles(h["bounds_hi"])));
    const auto count = parse_num<std::size_t>(h["count"], "count");
    const auto n_params = static_cast<std::size_t>(run.n_actions * run.basis.size());
    for (std::size_t k = 0; k < count; ++k) {
        if (!std::getline(in, line)) throw DataError("run file: truncated");
        const auto v = doubles(line);
        if (v.size() != n_params + 1) throw DataError("run file: wrong parameter count");
        run.train_loss.push_back(v[0]);
        run.params.emplace_back(Eigen::Map<const Eigen::VectorXd>(v.data() + 1, static_cast<Eigen::Index>(n_params)));
        run.reports.emplace_back();
    }
    return run;
}

}  // namespace fqilog
