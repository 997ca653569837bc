// fqilog command-line driver. Talks to the library only through fqilog.h.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fqilog/fqilog.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Failure {
    int code;
    std::string message;
};

int exit_code_for(fqilog_status s) {
    return (s == FQILOG_ERR_CONFIG || s == FQILOG_ERR_INVALID_ARGUMENT) ? kExitConfig : kExitRuntime;
}

void check(fqilog_status s, const std::string& what) {
    if (s != FQILOG_OK) throw Failure{exit_code_for(s), what + ": " + fqilog_last_error()};
}

template <class T, void (*Destroy)(T*)>
struct Handle {
    T* p = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() { Destroy(p); }
};

using ConfigHandle = Handle<fqilog_config, fqilog_config_destroy>;
using DatasetHandle = Handle<fqilog_dataset, fqilog_dataset_destroy>;
using RunHandle = Handle<fqilog_run, fqilog_run_destroy>;

struct CommonOptions {
    std::string config_path;
    std::string preset = "desk";
    std::string env;
    std::optional<unsigned long long> seed;
    std::string out = ".";
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_seed = true) {
    cmd->add_option("--config", o.config_path, "key=value configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--preset", o.preset, "desk or full")->check(CLI::IsMember({"desk", "full"}));
    cmd->add_option("--env", o.env, "mountain_car or pendulum")->check(CLI::IsMember({"mountain_car", "pendulum"}));
    cmd->add_option("--set", o.overrides, "extra key=value override (repeatable)");
    if (with_seed) cmd->add_option("--seed", o.seed, "seed");
    cmd->add_option("--out", o.out, "output directory");
}

// env.name from a config file, when present.
std::string env_in_file(const std::string& path) {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
        };
        trim(key);
        trim(val);
        if (key == "env.name") return val;
    }
    return {};
}

void build_config(const CommonOptions& o, ConfigHandle& cfg) {
    std::string env = o.env;
    if (env.empty() && !o.config_path.empty()) env = env_in_file(o.config_path);
    if (env.empty()) env = "mountain_car";
    check(fqilog_config_create_preset(env.c_str(), o.preset.c_str(), &cfg.p), "preset");
    if (!o.config_path.empty()) check(fqilog_config_merge_file(cfg.p, o.config_path.c_str()), "config");
    if (!o.env.empty()) check(fqilog_config_set(cfg.p, "env.name", o.env.c_str()), "config");
    for (const auto& kv : o.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Failure{kExitConfig, "--set expects key=value, got '" + kv + "'"};
        check(fqilog_config_set(cfg.p, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()), "config");
    }
    check(fqilog_config_validate(cfg.p), "config");
}

std::string config_value(const ConfigHandle& cfg, const char* key) {
    size_t needed = 0;
    check(fqilog_config_get(cfg.p, key, nullptr, 0, &needed), "config");
    std::string buf(needed, '\0');
    check(fqilog_config_get(cfg.p, key, buf.data(), buf.size(), &needed), "config");
    buf.resize(needed - 1);
    return buf;
}

void make_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Failure{kExitRuntime, "cannot create '" + dir + "': " + ec.message()};
}

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void print_stderr(const char* msg, void*) { std::fprintf(stderr, "%s\n", msg); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fitted Q-iteration with log-loss or squared-loss regression"};
    app.require_subcommand(1);
    app.set_version_flag("--version", fqilog_version());

    CommonOptions collect_o, train_o, eval_o, run_o;
    long long collect_n = 0;
    std::string train_dataset, train_loss = "log", eval_run;
    long long train_n = 0;
    std::vector<std::string> report_inputs;
    std::string report_out = ".";
    unsigned long long theory_seed = 7;
    long long theory_instances = 10000, theory_mdp_instances = 1000;
    std::string theory_out = "theory_report.json";

    auto* collect = app.add_subcommand("collect", "Collect a behavior dataset");
    add_common(collect, collect_o);
    collect->add_option("--n", collect_n, "trajectories (default: largest on the n grid)");

    auto* train = app.add_subcommand("train", "Fit one FQI arm on a dataset");
    add_common(train, train_o, false);
    train->add_option("--dataset", train_dataset, "dataset file")->required()->check(CLI::ExistingFile);
    train->add_option("--loss", train_loss, "log or squared")->check(CLI::IsMember({"log", "squared"}));
    train->add_option("--n", train_n, "train on the first n trajectories");

    auto* eval = app.add_subcommand("eval", "Evaluate a trained run");
    add_common(eval, eval_o);
    eval->add_option("--run", eval_run, "run file written by train")->required()->check(CLI::ExistingFile);

    auto* run = app.add_subcommand("run", "End-to-end experiment sweep");
    add_common(run, run_o);

    auto* rep = app.add_subcommand("report", "Aggregate result files into learning curves");
    rep->add_option("results", report_inputs, "results.csv files")->required()->check(CLI::ExistingFile);
    rep->add_option("--out", report_out, "output directory");

    auto* theory = app.add_subcommand("verify-theory", "Run the lemma oracle battery");
    theory->add_option("--seed", theory_seed, "seed");
    theory->add_option("--instances", theory_instances, "instances for pointwise checks");
    theory->add_option("--mdp-instances", theory_mdp_instances, "instances for MDP-level checks");
    theory->add_option("--out", theory_out, "JSON report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*collect) {
            ConfigHandle cfg;
            build_config(collect_o, cfg);
            make_dir(collect_o.out);
            DatasetHandle ds;
            const unsigned long long seed = collect_o.seed.value_or(1);
            check(fqilog_dataset_collect(cfg.p, seed, collect_n, &ds.p), "collect");
            const std::string path = join(collect_o.out, "dataset.txt");
            check(fqilog_dataset_save(ds.p, path.c_str()), "save");
            fqilog_dataset_info info{};
            check(fqilog_dataset_info_get(ds.p, &info), "info");
            std::printf("%s: %lld trajectories (%lld successful, %lld drawn), %lld transitions\n", path.c_str(),
                        static_cast<long long>(info.n_trajectories), static_cast<long long>(info.n_successful),
                        static_cast<long long>(info.episodes_drawn), static_cast<long long>(info.n_transitions));
        } else if (*train) {
            ConfigHandle cfg;
            build_config(train_o, cfg);
            make_dir(train_o.out);
            const std::string env = config_value(cfg, "env.name");
            DatasetHandle full, part;
            check(fqilog_dataset_load(train_dataset.c_str(), env.c_str(), &full.p), "load");
            const fqilog_dataset* use = full.p;
            if (train_n > 0) {
                check(fqilog_dataset_prefix(full.p, train_n, &part.p), "prefix");
                use = part.p;
            }
            RunHandle r;
            check(fqilog_train(cfg.p, use, train_loss.c_str(), &r.p), "train");
            const std::string path = join(train_o.out, "run_" + train_loss + ".txt");
            check(fqilog_run_save(r.p, cfg.p, path.c_str()), "save");
            std::printf("%s\n", path.c_str());
        } else if (*eval) {
            ConfigHandle cfg;
            build_config(eval_o, cfg);
            make_dir(eval_o.out);
            RunHandle r;
            check(fqilog_run_load(eval_run.c_str(), cfg.p, &r.p), "load");
            fqilog_eval_summary s{};
            check(fqilog_evaluate(cfg.p, r.p, eval_o.seed.value_or(1000), &s), "evaluate");
            std::ostringstream text;
            text.precision(17);
            text << "n_rollouts=" << s.n_rollouts << "\nmean_cost=" << s.mean_cost
                 << "\ncost_std_error=" << s.cost_std_error << "\nsuccess_rate=" << s.success_rate
                 << "\nsuccess_std_error=" << s.success_std_error << "\n";
            const std::string path = join(eval_o.out, "eval.txt");
            std::ofstream f(path);
            f << text.str();
            if (!f) throw Failure{kExitRuntime, "cannot write '" + path + "'"};
            std::printf("%s", text.str().c_str());
        } else if (*run) {
            ConfigHandle cfg;
            build_config(run_o, cfg);
            if (run_o.seed) {
                check(fqilog_config_set(cfg.p, "trials.base_seed", std::to_string(*run_o.seed).c_str()), "config");
            }
            check(fqilog_run_experiment(cfg.p, run_o.out.c_str(), print_stderr, nullptr), "run");
            std::printf("%s\n", join(run_o.out, "results.csv").c_str());
        } else if (*rep) {
            std::vector<const char*> paths;
            for (const auto& p : report_inputs) paths.push_back(p.c_str());
            check(fqilog_report(paths.data(), paths.size(), report_out.c_str()), "report");
            std::printf("%s\n", join(report_out, "aggregate.csv").c_str());
        } else if (*theory) {
            int passed = 0;
            check(fqilog_verify_theory(theory_seed, theory_instances, theory_mdp_instances, theory_out.c_str(),
                                       &passed),
                  "verify-theory");
            std::printf("%s: %s\n", theory_out.c_str(), passed ? "all lemmas pass" : "VIOLATIONS FOUND");
            if (!passed) return kExitRuntime;
        }
    } catch (const Failure& f) {
        std::fprintf(stderr, "error: %s\n", f.message.c_str());
        return f.code;
    }
    return 0;
}
