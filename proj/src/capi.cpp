#include "confmix.h"

#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

#include "confmix/harness.hpp"

using confmix::RunConfig;

struct confmix_config {
    RunConfig cfg;
};

namespace {

thread_local std::string g_last_error;

confmix_status fail(confmix_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <typename Fn>
confmix_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const std::invalid_argument& e) {
        return fail(CONFMIX_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::runtime_error& e) {
        return fail(CONFMIX_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(CONFMIX_ERR_INTERNAL, e.what());
    }
}

}  // namespace

extern "C" {

const char* confmix_version(void) { return "0.1.0"; }

const char* confmix_last_error(void) { return g_last_error.c_str(); }

void confmix_string_free(char* s) { std::free(s); }

confmix_status confmix_config_create(confmix_config** out) {
    if (!out) return fail(CONFMIX_ERR_INVALID_ARGUMENT, "null out pointer");
    return guarded([&] {
        *out = new confmix_config{};
        return CONFMIX_OK;
    });
}

confmix_status confmix_config_load(const char* json_path, confmix_config** out) {
    if (!json_path || !out) return fail(CONFMIX_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out = new confmix_config{RunConfig::load(json_path)};
        return CONFMIX_OK;
    });
}

void confmix_config_free(confmix_config* cfg) { delete cfg; }

confmix_status confmix_config_set(confmix_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) return fail(CONFMIX_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        cfg->cfg.set_override(key, value);
        return CONFMIX_OK;
    });
}

confmix_status confmix_config_to_json(const confmix_config* cfg, char** out_json) {
    if (!cfg || !out_json) return fail(CONFMIX_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out_json = dup_string(cfg->cfg.to_json_string());
        return *out_json ? CONFMIX_OK : fail(CONFMIX_ERR_INTERNAL, "out of memory");
    });
}

confmix_status confmix_gen_data(const confmix_config* cfg, const char* out_dir) {
    if (!cfg) return fail(CONFMIX_ERR_INVALID_ARGUMENT, "null config");
    return guarded([&] {
        confmix::command_gen_data(cfg->cfg, out_dir ? out_dir : "");
        return CONFMIX_OK;
    });
}

confmix_status confmix_pretrain(const confmix_config* cfg, char** out_ckpt_path) {
    if (!cfg) return fail(CONFMIX_ERR_INVALID_ARGUMENT, "null config");
    return guarded([&] {
        const auto path = confmix::command_pretrain(cfg->cfg);
        if (out_ckpt_path) *out_ckpt_path = dup_string(path.string());
        return CONFMIX_OK;
    });
}

confmix_status confmix_adapt(const confmix_config* cfg, const char* ckpt_in,
                             char** out_ckpt_path) {
    if (!cfg || !ckpt_in) return fail(CONFMIX_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const auto path = confmix::command_adapt(cfg->cfg, ckpt_in);
        if (out_ckpt_path) *out_ckpt_path = dup_string(path.string());
        return CONFMIX_OK;
    });
}

confmix_status confmix_oracle(const confmix_config* cfg, char** out_ckpt_path) {
    if (!cfg) return fail(CONFMIX_ERR_INVALID_ARGUMENT, "null config");
    return guarded([&] {
        const auto path = confmix::command_oracle(cfg->cfg);
        if (out_ckpt_path) *out_ckpt_path = dup_string(path.string());
        return CONFMIX_OK;
    });
}

confmix_status confmix_eval(const confmix_config* cfg, const char* ckpt,
                            const char* dataset_dir, char** out_report_json) {
    if (!cfg || !ckpt) return fail(CONFMIX_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const std::string report =
            confmix::command_eval(cfg->cfg, ckpt, dataset_dir ? dataset_dir : "");
        if (out_report_json) *out_report_json = dup_string(report);
        return CONFMIX_OK;
    });
}

confmix_status confmix_sweep(const confmix_config* cfg, const char* axis,
                             char** out_table_json) {
    if (!cfg || !axis) return fail(CONFMIX_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const std::string table = confmix::command_sweep(cfg->cfg, axis);
        if (out_table_json) *out_table_json = dup_string(table);
        return CONFMIX_OK;
    });
}

}  // extern "C"
