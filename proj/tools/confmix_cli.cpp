// Command-line front end; talks to the library exclusively through the C API.
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "confmix.h"

namespace {

struct ConfigGuard {
    confmix_config* cfg = nullptr;
    ~ConfigGuard() { confmix_config_free(cfg); }
};

struct StringGuard {
    char* s = nullptr;
    ~StringGuard() { confmix_string_free(s); }
};

int die(const char* what, confmix_status status) {
    std::fprintf(stderr, "confmix: %s failed (%d): %s\n", what, static_cast<int>(status),
                 confmix_last_error());
    return status == CONFMIX_ERR_INVALID_ARGUMENT ? 1 : 2;
}

int build_config(const std::string& config_path, const std::vector<std::string>& overrides,
                 ConfigGuard& guard) {
    confmix_status status = config_path.empty()
                                ? confmix_config_create(&guard.cfg)
                                : confmix_config_load(config_path.c_str(), &guard.cfg);
    if (status != CONFMIX_OK) return die("config", status);
    for (const std::string& kv : overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "confmix: --set wants key=value, got '%s'\n", kv.c_str());
            return 1;
        }
        status = confmix_config_set(guard.cfg, kv.substr(0, eq).c_str(),
                                    kv.substr(eq + 1).c_str());
        if (status != CONFMIX_OK) return die("config override", status);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ConfMix domain-adaptation pipeline for the synthetic-shapes detector"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "JSON config file (defaults when omitted)");
    app.add_option("--set", overrides, "override a config key, e.g. confmix.alpha=10")
        ->take_all();

    auto* gen = app.add_subcommand("gen-data", "write the four dataset splits to disk");
    std::string gen_out;
    gen->add_option("--out", gen_out, "dataset root (default: <out_dir>/data)");

    auto* pretrain = app.add_subcommand("pretrain", "supervised training on the source domain");

    auto* adapt = app.add_subcommand("adapt", "ConfMix adaptation from a pretrained checkpoint");
    std::string adapt_ckpt;
    adapt->add_option("--ckpt", adapt_ckpt, "pretrained checkpoint")->required();

    auto* oracle = app.add_subcommand("oracle", "supervised training on the target domain");

    auto* eval = app.add_subcommand("eval", "mAP report for a checkpoint");
    std::string eval_ckpt, eval_data;
    eval->add_option("--ckpt", eval_ckpt, "checkpoint to evaluate")->required();
    eval->add_option("--data", eval_data, "dataset directory (default: config target test)");

    auto* sweep = app.add_subcommand("sweep", "one adaptation run per value of an axis");
    std::string sweep_axis;
    sweep
        ->add_option("--axis", sweep_axis,
                     "mix_strategy | schedule_mode | gamma_weight | alpha | c_th | c_th_gamma")
        ->required();

    CLI11_PARSE(app, argc, argv);

    ConfigGuard guard;
    if (int rc = build_config(config_path, overrides, guard)) return rc;

    if (gen->parsed()) {
        const confmix_status status = confmix_gen_data(guard.cfg, gen_out.c_str());
        if (status != CONFMIX_OK) return die("gen-data", status);
        std::printf("datasets written\n");
        return 0;
    }
    if (pretrain->parsed()) {
        StringGuard path;
        const confmix_status status = confmix_pretrain(guard.cfg, &path.s);
        if (status != CONFMIX_OK) return die("pretrain", status);
        std::printf("checkpoint: %s\n", path.s);
        return 0;
    }
    if (adapt->parsed()) {
        StringGuard path;
        const confmix_status status = confmix_adapt(guard.cfg, adapt_ckpt.c_str(), &path.s);
        if (status != CONFMIX_OK) return die("adapt", status);
        std::printf("checkpoint: %s\n", path.s);
        return 0;
    }
    if (oracle->parsed()) {
        StringGuard path;
        const confmix_status status = confmix_oracle(guard.cfg, &path.s);
        if (status != CONFMIX_OK) return die("oracle", status);
        std::printf("checkpoint: %s\n", path.s);
        return 0;
    }
    if (eval->parsed()) {
        StringGuard report;
        const confmix_status status =
            confmix_eval(guard.cfg, eval_ckpt.c_str(), eval_data.c_str(), &report.s);
        if (status != CONFMIX_OK) return die("eval", status);
        std::printf("%s", report.s);
        return 0;
    }
    if (sweep->parsed()) {
        StringGuard table;
        const confmix_status status = confmix_sweep(guard.cfg, sweep_axis.c_str(), &table.s);
        if (status != CONFMIX_OK) return die("sweep", status);
        std::printf("%s", table.s);
        return 0;
    }
    return 1;
}
