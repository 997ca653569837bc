/* C interface to the fqilog library: opaque handles and status codes. */
#ifndef FQILOG_H
#define FQILOG_H

#include <stddef.h>
#include <stdint.h>

#if defined(FQILOG_BUILDING_LIBRARY)
#define FQILOG_API __attribute__((visibility("default")))
#else
#define FQILOG_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fqilog_status {
    FQILOG_OK = 0,
    FQILOG_ERR_INVALID_ARGUMENT = 1,
    FQILOG_ERR_CONFIG = 2,
    FQILOG_ERR_DOMAIN = 3,
    FQILOG_ERR_IO = 4,
    FQILOG_ERR_DATA = 5,
    FQILOG_ERR_CHECKSUM = 6,
    FQILOG_ERR_VERSION = 7,
    FQILOG_ERR_RUNTIME = 8
} fqilog_status;

typedef struct fqilog_config fqilog_config;
typedef struct fqilog_dataset fqilog_dataset;
typedef struct fqilog_run fqilog_run;

typedef struct fqilog_dataset_info {
    int64_t n_transitions;
    int64_t n_trajectories;
    int64_t n_successful;
    int64_t episodes_drawn;
    int32_t horizon;
    int32_t dim;
    uint64_t seed;
    uint64_t physics_hash;
} fqilog_dataset_info;

typedef struct fqilog_eval_summary {
    int32_t n_rollouts;
    double mean_cost;
    double cost_std_error;
    double success_rate;
    double success_std_error;
} fqilog_eval_summary;

typedef void (*fqilog_log_fn)(const char* message, void* user);

/* Message for the last failing call on this thread; "" after success. */
FQILOG_API const char* fqilog_last_error(void);
FQILOG_API const char* fqilog_version(void);
FQILOG_API const char* fqilog_status_name(fqilog_status status);

/* Configuration. preset is "desk" or "full". */
FQILOG_API fqilog_status fqilog_config_create_preset(const char* env, const char* preset, fqilog_config** out);
FQILOG_API fqilog_status fqilog_config_merge_file(fqilog_config* cfg, const char* path);
FQILOG_API fqilog_status fqilog_config_set(fqilog_config* cfg, const char* key, const char* value);
/* Copies the value (NUL-terminated) into buf; *needed receives the buffer
   size required, terminator included. buf may be NULL to query the size. A
   short buffer gets a truncated copy and FQILOG_ERR_INVALID_ARGUMENT. */
FQILOG_API fqilog_status fqilog_config_get(const fqilog_config* cfg, const char* key, char* buf, size_t cap,
                                           size_t* needed);
/* Sorted key=value lines; same buffer protocol as fqilog_config_get. */
FQILOG_API fqilog_status fqilog_config_dump(const fqilog_config* cfg, char* buf, size_t cap, size_t* needed);
/* Validates the full configuration without running anything. */
FQILOG_API fqilog_status fqilog_config_validate(const fqilog_config* cfg);
FQILOG_API void fqilog_config_destroy(fqilog_config* cfg);

/* Datasets. n_trajectories = 0 collects the largest size on the n grid. */
FQILOG_API fqilog_status fqilog_dataset_collect(const fqilog_config* cfg, uint64_t seed, int64_t n_trajectories,
                                                fqilog_dataset** out);
/* expected_env may be NULL to skip the environment guard. */
FQILOG_API fqilog_status fqilog_dataset_load(const char* path, const char* expected_env, fqilog_dataset** out);
FQILOG_API fqilog_status fqilog_dataset_save(const fqilog_dataset* ds, const char* path);
FQILOG_API fqilog_status fqilog_dataset_prefix(const fqilog_dataset* ds, int64_t n_trajectories,
                                               fqilog_dataset** out);
FQILOG_API fqilog_status fqilog_dataset_info_get(const fqilog_dataset* ds, fqilog_dataset_info* info);
FQILOG_API void fqilog_dataset_destroy(fqilog_dataset* ds);

/* Training and evaluation. loss is "log" or "squared". */
FQILOG_API fqilog_status fqilog_train(const fqilog_config* cfg, const fqilog_dataset* ds, const char* loss,
                                      fqilog_run** out);
FQILOG_API fqilog_status fqilog_run_save(const fqilog_run* run, const fqilog_config* cfg, const char* path);
/* cfg may be NULL to skip the environment guard. */
FQILOG_API fqilog_status fqilog_run_load(const char* path, const fqilog_config* cfg, fqilog_run** out);
FQILOG_API fqilog_status fqilog_run_act(const fqilog_run* run, const double* state, size_t dim, int32_t step,
                                        int32_t* action);
FQILOG_API fqilog_status fqilog_evaluate(const fqilog_config* cfg, const fqilog_run* run, uint64_t seed,
                                         fqilog_eval_summary* out);
FQILOG_API void fqilog_run_destroy(fqilog_run* run);

/* End-to-end sweep writing results.csv, timings.csv and artifact.json.
   log may be NULL. */
FQILOG_API fqilog_status fqilog_run_experiment(const fqilog_config* cfg, const char* out_dir, fqilog_log_fn log,
                                               void* user);
FQILOG_API fqilog_status fqilog_report(const char* const* result_paths, size_t n_paths, const char* out_dir);

/* Runs the lemma oracle battery; writes JSON records to out_path when it is
   not NULL. *all_passed is set to 1 when every record passes. */
FQILOG_API fqilog_status fqilog_verify_theory(uint64_t seed, int64_t pointwise_instances, int64_t mdp_instances,
                                              const char* out_path, int* all_passed);

#ifdef __cplusplus
}
#endif

#endif /* FQILOG_H */
