/* C API for the confmix library: opaque config handle + status codes.
 * Every function returns CONFMIX_OK on success; confmix_last_error() holds
 * a human-readable message for the most recent failure on this thread.
 * Strings returned through out-parameters are owned by the caller and must
 * be released with confmix_string_free(). */
#ifndef CONFMIX_H
#define CONFMIX_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum confmix_status {
    CONFMIX_OK = 0,
    CONFMIX_ERR_INVALID_ARGUMENT = 1,
    CONFMIX_ERR_IO = 2,
    CONFMIX_ERR_INTERNAL = 3
} confmix_status;

typedef struct confmix_config confmix_config;

const char* confmix_version(void);
const char* confmix_last_error(void);
void confmix_string_free(char* s);

/* Config lifecycle. confmix_config_create yields the built-in defaults;
 * confmix_config_load parses a JSON file. */
confmix_status confmix_config_create(confmix_config** out);
confmix_status confmix_config_load(const char* json_path, confmix_config** out);
void confmix_config_free(confmix_config* cfg);

/* Dotted-key override, e.g. ("confmix.alpha", "10") or
 * ("confmix.mix_strategy", "cutmix_random"). */
confmix_status confmix_config_set(confmix_config* cfg, const char* key, const char* value);
confmix_status confmix_config_to_json(const confmix_config* cfg, char** out_json);

/* Pipeline verbs. Artifacts land under the config's output directory
 * (overridable via $CONFMIX_OUTPUT_ROOT). Checkpoint out-parameters receive
 * the written checkpoint path. */
confmix_status confmix_gen_data(const confmix_config* cfg, const char* out_dir);
confmix_status confmix_pretrain(const confmix_config* cfg, char** out_ckpt_path);
confmix_status confmix_adapt(const confmix_config* cfg, const char* ckpt_in,
                             char** out_ckpt_path);
confmix_status confmix_oracle(const confmix_config* cfg, char** out_ckpt_path);

/* dataset_dir may be NULL or empty: the config's target test split is used. */
confmix_status confmix_eval(const confmix_config* cfg, const char* ckpt,
                            const char* dataset_dir, char** out_report_json);

/* axis: mix_strategy | schedule_mode | gamma_weight | alpha | c_th | c_th_gamma */
confmix_status confmix_sweep(const confmix_config* cfg, const char* axis,
                             char** out_table_json);

#ifdef __cplusplus
}
#endif

#endif /* CONFMIX_H */
