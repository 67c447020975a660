// Exercises the shared-library surface exactly as an external caller would.
#include "doctest.h"

#include <filesystem>
#include <string>
#include <unistd.h>

#include "confmix.h"

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("confmix_capi_" + std::to_string(::getpid()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

confmix_config* tiny_config(const fs::path& out_dir) {
    confmix_config* cfg = nullptr;
    REQUIRE(confmix_config_create(&cfg) == CONFMIX_OK);
    const auto set = [&](const char* k, const std::string& v) {
        REQUIRE(confmix_config_set(cfg, k, v.c_str()) == CONFMIX_OK);
    };
    set("out_dir", out_dir.string());
    set("seed", "3");
    set("data.spec.image_size", "32");
    set("data.n_source_train", "10");
    set("data.n_source_test", "5");
    set("data.n_target_train", "8");
    set("data.n_target_test", "5");
    set("data.shift.fog", "0.3");
    set("detector.grid", "4");
    set("detector.hidden", "8");
    set("train.epochs_pretrain", "1");
    set("train.epochs_adapt", "1");
    set("train.epochs_oracle", "1");
    return cfg;
}

}  // namespace

TEST_CASE("version and error strings are always available") {
    CHECK(std::string(confmix_version()).find('.') != std::string::npos);
    CHECK(confmix_last_error() != nullptr);
}

TEST_CASE("config create, set, serialize") {
    confmix_config* cfg = nullptr;
    REQUIRE(confmix_config_create(&cfg) == CONFMIX_OK);
    CHECK(confmix_config_set(cfg, "confmix.alpha", "10") == CONFMIX_OK);
    CHECK(confmix_config_set(cfg, "confmix.mix_strategy", "nine_division") == CONFMIX_OK);

    char* json_text = nullptr;
    REQUIRE(confmix_config_to_json(cfg, &json_text) == CONFMIX_OK);
    const std::string text(json_text);
    confmix_string_free(json_text);
    CHECK(text.find("\"alpha\": 10") != std::string::npos);
    CHECK(text.find("nine_division") != std::string::npos);
    confmix_config_free(cfg);
}

TEST_CASE("bad inputs produce status codes and messages, not crashes") {
    CHECK(confmix_config_create(nullptr) == CONFMIX_ERR_INVALID_ARGUMENT);

    confmix_config* cfg = nullptr;
    CHECK(confmix_config_load("/nonexistent/config.json", &cfg) == CONFMIX_ERR_IO);
    CHECK(std::string(confmix_last_error()).find("config") != std::string::npos);

    REQUIRE(confmix_config_create(&cfg) == CONFMIX_OK);
    CHECK(confmix_config_set(cfg, "confmix.schedule_mode", "nope") ==
          CONFMIX_ERR_INVALID_ARGUMENT);
    CHECK(confmix_adapt(cfg, nullptr, nullptr) == CONFMIX_ERR_INVALID_ARGUMENT);

    // invalid threshold surfaces as invalid-argument at run time
    CHECK(confmix_config_set(cfg, "confmix.c_th", "1.4") == CONFMIX_OK);
    char* ckpt = nullptr;
    CHECK(confmix_pretrain(cfg, &ckpt) == CONFMIX_ERR_INVALID_ARGUMENT);
    confmix_config_free(cfg);
}

TEST_CASE("full pipeline through the C API") {
    TempDir tmp;
    confmix_config* cfg = tiny_config(tmp.path / "run");

    char* pre_path = nullptr;
    REQUIRE(confmix_pretrain(cfg, &pre_path) == CONFMIX_OK);
    REQUIRE(pre_path != nullptr);
    CHECK(fs::exists(pre_path));

    char* adapt_path = nullptr;
    REQUIRE(confmix_adapt(cfg, pre_path, &adapt_path) == CONFMIX_OK);
    CHECK(fs::exists(adapt_path));

    char* report = nullptr;
    REQUIRE(confmix_eval(cfg, adapt_path, nullptr, &report) == CONFMIX_OK);
    CHECK(std::string(report).find("\"map\"") != std::string::npos);
    confmix_string_free(report);

    char* oracle_path = nullptr;
    REQUIRE(confmix_oracle(cfg, &oracle_path) == CONFMIX_OK);
    CHECK(fs::exists(oracle_path));

    char* table = nullptr;
    REQUIRE(confmix_sweep(cfg, "alpha=5", &table) == CONFMIX_OK);
    CHECK(std::string(table).find("\"rows\"") != std::string::npos);
    confmix_string_free(table);

    REQUIRE(confmix_gen_data(cfg, (tmp.path / "data").string().c_str()) == CONFMIX_OK);
    CHECK(fs::exists(tmp.path / "data" / "source_train" / "meta.json"));

    confmix_string_free(pre_path);
    confmix_string_free(adapt_path);
    confmix_string_free(oracle_path);
    confmix_config_free(cfg);
}
