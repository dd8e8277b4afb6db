/* pal.h - C interface to the progressive adaptation learning engine.
 *
 * All entry points return a pal_status; PAL_OK is 0. On failure a
 * human-readable message is available from pal_last_error() until the next
 * call on the same thread. Handles are opaque and must be released with
 * their matching pal_*_free function. Strings returned through char** are
 * heap-allocated and must be released with pal_string_free.
 */
#ifndef PAL_H
#define PAL_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pal_status {
  PAL_OK = 0,
  PAL_ERR_INTERNAL = 1,
  PAL_ERR_CONFIG = 2,   /* invalid configuration (message names the field) */
  PAL_ERR_PIPELINE = 3, /* run aborted; partial report was preserved */
  PAL_ERR_IO = 4,
  PAL_ERR_INVALID_ARG = 5
} pal_status;

typedef struct pal_config pal_config;
typedef struct pal_report pal_report;

const char* pal_version(void);
const char* pal_last_error(void);

/* Configuration handles wrap the JSON document; validation happens when a
 * command consumes the config. */
pal_status pal_config_default(pal_config** out);
pal_status pal_config_load(const char* path, pal_config** out);
pal_status pal_config_parse(const char* json_text, pal_config** out);
/* Dotted-path override, e.g. key "wls.sigma", value "0.7". */
pal_status pal_config_set(pal_config* cfg, const char* dotted_key, const char* value);
pal_status pal_config_to_json(const pal_config* cfg, char** json_out);
void pal_config_free(pal_config* cfg);

/* Writes the four dataset CSVs plus manifest.json into out_dir. */
pal_status pal_generate(const pal_config* cfg, const char* out_dir);

/* Runs the configured variant. out_dir may be NULL for an in-memory run;
 * otherwise report.json, report.csv and eval_summary.csv are written (plus
 * per-iteration debug CSVs when the dump flags are set). report_out may be
 * NULL. On PAL_ERR_PIPELINE the partial report is still written and, when
 * requested, returned. */
pal_status pal_run(const pal_config* cfg, const char* out_dir, pal_report** report_out);

/* Runs all five variants on one shared benchmark; emits per-variant reports,
 * combined.csv, plot_cmc.csv and the benchmark snapshot. */
pal_status pal_ablate(const pal_config* cfg, const char* out_dir);

pal_status pal_report_load(const char* path, pal_report** out);
pal_status pal_report_to_json(const pal_report* rep, char** json_out);
int pal_report_iteration_count(const pal_report* rep);
/* mAP of the last completed iteration; negative when the report is empty. */
double pal_report_final_map(const pal_report* rep);
int pal_report_aborted(const pal_report* rep);
void pal_report_free(pal_report* rep);

void pal_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* PAL_H */
