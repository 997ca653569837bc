// Exercises the shared library through its C header only.
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fqilog/fqilog.h"

namespace fs = std::filesystem;

namespace {

std::string tmp_dir() {
    const char* env = std::getenv("FQILOG_TEST_TMP");
    const fs::path dir = env ? fs::path(env) : fs::temp_directory_path() / "fqilog_test_c_api";
    fs::create_directories(dir);
    return dir.string();
}

fqilog_config* tiny_pendulum() {
    fqilog_config* cfg = nullptr;
    REQUIRE(fqilog_config_create_preset("pendulum", "desk", &cfg) == FQILOG_OK);
    REQUIRE(fqilog_config_set(cfg, "dataset.n_grid", "5,10") == FQILOG_OK);
    REQUIRE(fqilog_config_set(cfg, "fqi.k", "3") == FQILOG_OK);
    REQUIRE(fqilog_config_set(cfg, "eval.n_rollouts", "4") == FQILOG_OK);
    REQUIRE(fqilog_config_set(cfg, "eval.max_steps", "50") == FQILOG_OK);
    REQUIRE(fqilog_config_set(cfg, "trials.count", "1") == FQILOG_OK);
    return cfg;
}

}  // namespace

TEST_CASE("version and status names") {
    CHECK(std::strcmp(fqilog_version(), "1.0.0") == 0);
    CHECK(std::strcmp(fqilog_status_name(FQILOG_OK), "ok") == 0);
    CHECK(std::strlen(fqilog_status_name(FQILOG_ERR_CHECKSUM)) > 0);
    CHECK(std::strlen(fqilog_status_name(static_cast<fqilog_status>(99))) > 0);
}

TEST_CASE("errors map to status codes and set the message") {
    fqilog_config* cfg = nullptr;
    CHECK(fqilog_config_create_preset("acrobot", "desk", &cfg) == FQILOG_ERR_CONFIG);
    CHECK(cfg == nullptr);
    CHECK(std::strlen(fqilog_last_error()) > 0);
    CHECK(fqilog_config_create_preset("pendulum", "desk", nullptr) == FQILOG_ERR_INVALID_ARGUMENT);
    CHECK(fqilog_config_create_preset("pendulum", "desk", &cfg) == FQILOG_OK);
    CHECK(std::strcmp(fqilog_last_error(), "") == 0);
    CHECK(fqilog_config_set(cfg, "no.such.key", "1") == FQILOG_ERR_CONFIG);
    CHECK(fqilog_config_set(cfg, "fqi.gamma", "1") == FQILOG_OK);
    CHECK(fqilog_config_validate(cfg) == FQILOG_ERR_CONFIG);
    fqilog_dataset* ds = nullptr;
    CHECK(fqilog_dataset_load("/nonexistent/ds.txt", nullptr, &ds) == FQILOG_ERR_IO);
    fqilog_config_destroy(cfg);
    fqilog_config_destroy(nullptr);
    fqilog_dataset_destroy(nullptr);
    fqilog_run_destroy(nullptr);
}

TEST_CASE("buffer protocol") {
    fqilog_config* cfg = tiny_pendulum();
    size_t needed = 0;
    CHECK(fqilog_config_get(cfg, "fqi.k", nullptr, 0, &needed) == FQILOG_OK);
    CHECK(needed == 2);
    char small[1];
    CHECK(fqilog_config_get(cfg, "fqi.k", small, sizeof small, &needed) == FQILOG_ERR_INVALID_ARGUMENT);
    CHECK(small[0] == '\0');
    char buf[16];
    CHECK(fqilog_config_get(cfg, "fqi.k", buf, sizeof buf, &needed) == FQILOG_OK);
    CHECK(std::string(buf) == "3");
    CHECK(fqilog_config_dump(cfg, nullptr, 0, &needed) == FQILOG_OK);
    std::vector<char> dump(needed);
    CHECK(fqilog_config_dump(cfg, dump.data(), dump.size(), &needed) == FQILOG_OK);
    CHECK(std::string(dump.data()).find("env.name=pendulum") != std::string::npos);
    fqilog_config_destroy(cfg);
}

TEST_CASE("collect, save, load, train, act, evaluate") {
    fqilog_config* cfg = tiny_pendulum();
    fqilog_dataset* ds = nullptr;
    REQUIRE(fqilog_dataset_collect(cfg, 7, 0, &ds) == FQILOG_OK);
    fqilog_dataset_info info{};
    REQUIRE(fqilog_dataset_info_get(ds, &info) == FQILOG_OK);
    CHECK(info.n_trajectories == 10);
    CHECK(info.dim == 2);

    const std::string path = tmp_dir() + "/ds.txt";
    REQUIRE(fqilog_dataset_save(ds, path.c_str()) == FQILOG_OK);
    fqilog_dataset* back = nullptr;
    REQUIRE(fqilog_dataset_load(path.c_str(), "pendulum", &back) == FQILOG_OK);
    fqilog_dataset_info info2{};
    fqilog_dataset_info_get(back, &info2);
    CHECK(info2.n_transitions == info.n_transitions);
    CHECK(info2.physics_hash == info.physics_hash);
    fqilog_dataset* wrong = nullptr;
    CHECK(fqilog_dataset_load(path.c_str(), "mountain_car", &wrong) == FQILOG_ERR_DATA);

    // corrupt one body byte
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekg(0, std::ios::end);
        const auto size = static_cast<long>(f.tellg());
        f.seekp(size - 5);
        f.put('9' == f.peek() ? '8' : '9');
    }
    fqilog_dataset* corrupt = nullptr;
    const auto st = fqilog_dataset_load(path.c_str(), nullptr, &corrupt);
    CHECK((st == FQILOG_ERR_CHECKSUM || st == FQILOG_ERR_DATA));

    fqilog_dataset* part = nullptr;
    REQUIRE(fqilog_dataset_prefix(back, 5, &part) == FQILOG_OK);
    CHECK(fqilog_dataset_prefix(back, 50, &corrupt) == FQILOG_ERR_DATA);

    fqilog_run* run = nullptr;
    CHECK(fqilog_train(cfg, part, "hinge", &run) == FQILOG_ERR_CONFIG);
    REQUIRE(fqilog_train(cfg, part, "log", &run) == FQILOG_OK);
    const double state[2] = {0.01, -0.02};
    int32_t action = -1;
    CHECK(fqilog_run_act(run, state, 2, 0, &action) == FQILOG_OK);
    CHECK(action >= 0);
    CHECK(action <= 2);
    CHECK(fqilog_run_act(run, state, 3, 0, &action) == FQILOG_ERR_INVALID_ARGUMENT);
    const double outside[2] = {3.0, 0.0};
    CHECK(fqilog_run_act(run, outside, 2, 0, &action) == FQILOG_ERR_DOMAIN);

    const std::string run_path = tmp_dir() + "/run.txt";
    REQUIRE(fqilog_run_save(run, cfg, run_path.c_str()) == FQILOG_OK);
    fqilog_run* loaded = nullptr;
    REQUIRE(fqilog_run_load(run_path.c_str(), cfg, &loaded) == FQILOG_OK);
    fqilog_eval_summary a{}, b{};
    REQUIRE(fqilog_evaluate(cfg, run, 3, &a) == FQILOG_OK);
    REQUIRE(fqilog_evaluate(cfg, loaded, 3, &b) == FQILOG_OK);
    CHECK(a.n_rollouts == 4);
    CHECK(a.success_rate == b.success_rate);
    CHECK(a.mean_cost == b.mean_cost);

    fqilog_run_destroy(loaded);
    fqilog_run_destroy(run);
    fqilog_dataset_destroy(part);
    fqilog_dataset_destroy(back);
    fqilog_dataset_destroy(ds);
    fqilog_config_destroy(cfg);
}

TEST_CASE("experiment and report") {
    fqilog_config* cfg = tiny_pendulum();
    const std::string out = tmp_dir() + "/exp";
    int lines = 0;
    auto log = [](const char*, void* user) { ++*static_cast<int*>(user); };
    REQUIRE(fqilog_run_experiment(cfg, out.c_str(), log, &lines) == FQILOG_OK);
    CHECK(lines == 4);
    CHECK(fs::exists(out + "/results.csv"));
    CHECK(fs::exists(out + "/artifact.json"));
    const std::string results = out + "/results.csv";
    const char* paths[] = {results.c_str()};
    CHECK(fqilog_report(paths, 1, (out + "/report").c_str()) == FQILOG_OK);
    CHECK(fs::exists(out + "/report/aggregate.csv"));
    CHECK(fqilog_report(nullptr, 0, out.c_str()) != FQILOG_OK);
    fqilog_config_destroy(cfg);
}

TEST_CASE("theory battery") {
    int passed = 0;
    const std::string path = tmp_dir() + "/theory.json";
    REQUIRE(fqilog_verify_theory(7, 200, 10, path.c_str(), &passed) == FQILOG_OK);
    CHECK(passed == 1);
    CHECK(fs::file_size(path) > 0);
}
