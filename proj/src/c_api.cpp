#include "fqilog/fqilog.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <string>

#include "fqilog/config.hpp"
#include "fqilog/dataset.hpp"
#include "fqilog/errors.hpp"
#include "fqilog/experiment.hpp"
#include "fqilog/theory.hpp"

struct fqilog_config {
    fqilog::Config cfg;
};

struct fqilog_dataset {
    fqilog::Dataset ds;
};

struct fqilog_run {
    fqilog::FqiRun run;
};

namespace {

thread_local std::string g_last_error;

fqilog_status fail(fqilog_status s, const char* msg) {
    g_last_error = msg;
    return s;
}

// Runs f, mapping exceptions onto status codes. Order matters: derived first.
template <class F>
fqilog_status guarded(F&& f) {
    try {
        f();
        g_last_error.clear();
        return FQILOG_OK;
    } catch (const fqilog::ConfigError& e) {
        return fail(FQILOG_ERR_CONFIG, e.what());
    } catch (const fqilog::ChecksumError& e) {
        return fail(FQILOG_ERR_CHECKSUM, e.what());
    } catch (const fqilog::VersionError& e) {
        return fail(FQILOG_ERR_VERSION, e.what());
    } catch (const fqilog::DataError& e) {
        return fail(FQILOG_ERR_DATA, e.what());
    } catch (const fqilog::IoError& e) {
        return fail(FQILOG_ERR_IO, e.what());
    } catch (const std::domain_error& e) {
        return fail(FQILOG_ERR_DOMAIN, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(FQILOG_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::out_of_range& e) {
        return fail(FQILOG_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::bad_alloc&) {
        return fail(FQILOG_ERR_RUNTIME, "out of memory");
    } catch (const std::exception& e) {
        return fail(FQILOG_ERR_RUNTIME, e.what());
    } catch (...) {
        return fail(FQILOG_ERR_RUNTIME, "unknown error");
    }
}

fqilog_status copy_out(const std::string& s, char* buf, size_t cap, size_t* needed) {
    if (needed) *needed = s.size() + 1;
    if (buf && cap > 0) {
        const size_t n = std::min(cap - 1, s.size());
        std::memcpy(buf, s.data(), n);
        buf[n] = '\0';
    }
    return (buf && cap < s.size() + 1) ? fail(FQILOG_ERR_INVALID_ARGUMENT, "buffer too small") : FQILOG_OK;
}

#define FQILOG_REQUIRE(cond, what) \
    if (!(cond)) return fail(FQILOG_ERR_INVALID_ARGUMENT, what)

}  // namespace

extern "C" {

const char* fqilog_last_error(void) { return g_last_error.c_str(); }

const char* fqilog_version(void) { return fqilog::kVersion; }

const char* fqilog_status_name(fqilog_status status) {
    switch (status) {
        case FQILOG_OK: return "ok";
        case FQILOG_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case FQILOG_ERR_CONFIG: return "config";
        case FQILOG_ERR_DOMAIN: return "domain";
        case FQILOG_ERR_IO: return "io";
        case FQILOG_ERR_DATA: return "data";
        case FQILOG_ERR_CHECKSUM: return "checksum";
        case FQILOG_ERR_VERSION: return "version";
        case FQILOG_ERR_RUNTIME: return "runtime";
    }
    return "unknown";
}

fqilog_status fqilog_config_create_preset(const char* env, const char* preset, fqilog_config** out) {
    FQILOG_REQUIRE(env && preset && out, "null argument");
    *out = nullptr;
    return guarded([&] { *out = new fqilog_config{fqilog::Config::preset(env, preset)}; });
}

fqilog_status fqilog_config_merge_file(fqilog_config* cfg, const char* path) {
    FQILOG_REQUIRE(cfg && path, "null argument");
    return guarded([&] { cfg->cfg.merge_file(path); });
}

fqilog_status fqilog_config_set(fqilog_config* cfg, const char* key, const char* value) {
    FQILOG_REQUIRE(cfg && key && value, "null argument");
    return guarded([&] { cfg->cfg.set(key, value); });
}

fqilog_status fqilog_config_get(const fqilog_config* cfg, const char* key, char* buf, size_t cap, size_t* needed) {
    FQILOG_REQUIRE(cfg && key, "null argument");
    std::string value;
    const fqilog_status s = guarded([&] { value = cfg->cfg.get(key); });
    return s == FQILOG_OK ? copy_out(value, buf, cap, needed) : s;
}

fqilog_status fqilog_config_dump(const fqilog_config* cfg, char* buf, size_t cap, size_t* needed) {
    FQILOG_REQUIRE(cfg, "null argument");
    return copy_out(cfg->cfg.to_text(), buf, cap, needed);
}

fqilog_status fqilog_config_validate(const fqilog_config* cfg) {
    FQILOG_REQUIRE(cfg, "null argument");
    return guarded([&] {
        const auto x = fqilog::resolve(cfg->cfg);
        for (const auto& f : fqilog::isolation_audit(x)) {
            if (f != "loss") throw fqilog::ConfigError("arms differ in '" + f + "'");
        }
    });
}

void fqilog_config_destroy(fqilog_config* cfg) { delete cfg; }

fqilog_status fqilog_dataset_collect(const fqilog_config* cfg, uint64_t seed, int64_t n_trajectories,
                                     fqilog_dataset** out) {
    FQILOG_REQUIRE(cfg && out, "null argument");
    FQILOG_REQUIRE(n_trajectories >= 0, "n_trajectories must be >= 0");
    *out = nullptr;
    return guarded([&] {
        const auto x = fqilog::resolve(cfg->cfg);
        fqilog::CollectOptions o;
        o.n_trajectories = n_trajectories > 0 ? n_trajectories : x.max_trajectories();
        o.required_successes = x.required_successes;
        o.seed = seed;
        o.horizon = x.env.horizon;
        o.draw_budget = x.draw_budget;
        auto h = std::make_unique<fqilog_dataset>();
        h->ds = fqilog::collect(x.env, o);
        *out = h.release();
    });
}

fqilog_status fqilog_dataset_load(const char* path, const char* expected_env, fqilog_dataset** out) {
    FQILOG_REQUIRE(path && out, "null argument");
    *out = nullptr;
    return guarded([&] {
        auto h = std::make_unique<fqilog_dataset>();
        h->ds = fqilog::load_dataset(path, expected_env ? expected_env : "");
        *out = h.release();
    });
}

fqilog_status fqilog_dataset_save(const fqilog_dataset* ds, const char* path) {
    FQILOG_REQUIRE(ds && path, "null argument");
    return guarded([&] { fqilog::save_dataset(ds->ds, path); });
}

fqilog_status fqilog_dataset_prefix(const fqilog_dataset* ds, int64_t n_trajectories, fqilog_dataset** out) {
    FQILOG_REQUIRE(ds && out, "null argument");
    *out = nullptr;
    return guarded([&] {
        auto h = std::make_unique<fqilog_dataset>();
        h->ds = fqilog::take_prefix(ds->ds, n_trajectories);
        *out = h.release();
    });
}

fqilog_status fqilog_dataset_info_get(const fqilog_dataset* ds, fqilog_dataset_info* info) {
    FQILOG_REQUIRE(ds && info, "null argument");
    const auto& m = ds->ds.manifest;
    info->n_transitions = static_cast<int64_t>(ds->ds.n_transitions());
    info->n_trajectories = static_cast<int64_t>(ds->ds.n_episodes());
    info->n_successful = m.n_successful;
    info->episodes_drawn = m.episodes_drawn;
    info->horizon = m.horizon;
    info->dim = ds->ds.dim;
    info->seed = m.seed;
    info->physics_hash = m.physics_hash;
    g_last_error.clear();
    return FQILOG_OK;
}

void fqilog_dataset_destroy(fqilog_dataset* ds) { delete ds; }

fqilog_status fqilog_train(const fqilog_config* cfg, const fqilog_dataset* ds, const char* loss, fqilog_run** out) {
    FQILOG_REQUIRE(cfg && ds && loss && out, "null argument");
    *out = nullptr;
    return guarded([&] {
        const auto x = fqilog::resolve(cfg->cfg);
        if (ds->ds.manifest.env_name != fqilog::to_string(x.env.kind)) {
            throw fqilog::DataError("dataset environment '" + ds->ds.manifest.env_name +
                                    "' does not match the configuration");
        }
        fqilog::LossKind kind;
        try {
            kind = fqilog::parse_loss_kind(loss);
        } catch (const std::exception& e) {
            throw fqilog::ConfigError(e.what());
        }
        auto h = std::make_unique<fqilog_run>();
        h->run = fqilog::train(x, ds->ds, kind);
        *out = h.release();
    });
}

fqilog_status fqilog_run_save(const fqilog_run* run, const fqilog_config* cfg, const char* path) {
    FQILOG_REQUIRE(run && cfg && path, "null argument");
    return guarded([&] { fqilog::save_run(run->run, fqilog::resolve(cfg->cfg), path); });
}

fqilog_status fqilog_run_load(const char* path, const fqilog_config* cfg, fqilog_run** out) {
    FQILOG_REQUIRE(path && out, "null argument");
    *out = nullptr;
    return guarded([&] {
        auto h = std::make_unique<fqilog_run>();
        if (cfg) {
            const auto x = fqilog::resolve(cfg->cfg);
            h->run = fqilog::load_run(path, &x);
        } else {
            h->run = fqilog::load_run(path);
        }
        *out = h.release();
    });
}

fqilog_status fqilog_run_act(const fqilog_run* run, const double* state, size_t dim, int32_t step, int32_t* action) {
    FQILOG_REQUIRE(run && state && action, "null argument");
    FQILOG_REQUIRE(dim == static_cast<size_t>(run->run.basis.dim()), "state dimension does not match the run");
    return guarded([&] { *action = run->run.act(std::span<const double>(state, dim), step); });
}

fqilog_status fqilog_evaluate(const fqilog_config* cfg, const fqilog_run* run, uint64_t seed,
                              fqilog_eval_summary* out) {
    FQILOG_REQUIRE(cfg && run && out, "null argument");
    return guarded([&] {
        const auto x = fqilog::resolve(cfg->cfg);
        const auto s = fqilog::evaluate(x, run->run, seed);
        out->n_rollouts = s.n_rollouts;
        out->mean_cost = s.mean_cost;
        out->cost_std_error = s.cost_std_error;
        out->success_rate = s.success_rate;
        out->success_std_error = s.success_std_error;
    });
}

void fqilog_run_destroy(fqilog_run* run) { delete run; }

fqilog_status fqilog_run_experiment(const fqilog_config* cfg, const char* out_dir, fqilog_log_fn log, void* user) {
    FQILOG_REQUIRE(cfg && out_dir, "null argument");
    return guarded([&] {
        const auto x = fqilog::resolve(cfg->cfg);
        fqilog::LogFn fn;
        if (log) fn = [log, user](const std::string& m) { log(m.c_str(), user); };
        fqilog::run_experiment(x, out_dir, fn);
    });
}

fqilog_status fqilog_report(const char* const* result_paths, size_t n_paths, const char* out_dir) {
    FQILOG_REQUIRE(result_paths && out_dir && n_paths > 0, "null argument");
    return guarded([&] {
        std::vector<std::string> paths;
        for (size_t i = 0; i < n_paths; ++i) {
            if (!result_paths[i]) throw std::invalid_argument("null result path");
            paths.emplace_back(result_paths[i]);
        }
        fqilog::report(paths, out_dir);
    });
}

fqilog_status fqilog_verify_theory(uint64_t seed, int64_t pointwise_instances, int64_t mdp_instances,
                                   const char* out_path, int* all_passed) {
    FQILOG_REQUIRE(all_passed, "null argument");
    FQILOG_REQUIRE(pointwise_instances > 0 && mdp_instances > 0, "instance counts must be positive");
    return guarded([&] {
        fqilog::TheoryOptions o;
        o.seed = seed;
        o.pointwise_instances = pointwise_instances;
        o.mdp_instances = mdp_instances;
        const auto reports = fqilog::verify_all(o);
        bool ok = true;
        for (const auto& r : reports) ok = ok && r.pass;
        *all_passed = ok ? 1 : 0;
        if (out_path) {
            std::ofstream f(out_path, std::ios::trunc);
            if (!f) throw fqilog::IoError(std::string("cannot open '") + out_path + "' for writing");
            f << fqilog::reports_to_json(reports);
            if (!f) throw fqilog::IoError(std::string("write failed for '") + out_path + "'");
        }
    });
}

}  // extern "C"
