/*
 * sgdlab C API.
 *
 * A thin, stable C surface over the sgdlab core: schedules behind opaque
 * handles, and coarse entry points for sweeps, checks and reports. All
 * functions return a status code; 0 is success and the nonzero codes match
 * the CLI exit-code contract. String results are heap-allocated and must be
 * released with sgdlab_string_free.
 */
#ifndef SGDLAB_H
#define SGDLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sgdlab_status {
    SGDLAB_OK = 0,
    SGDLAB_ERROR = 1,          /* unclassified failure */
    SGDLAB_CONFIG_ERROR = 2,   /* bad config file, field or argument */
    SGDLAB_ALL_DIVERGED = 3,   /* every run in the sweep diverged */
    SGDLAB_CHECK_FAILED = 4,   /* a check did not behave as predicted */
    SGDLAB_IO_ERROR = 5
} sgdlab_status;

const char* sgdlab_version(void);

/* Message for the most recent failing call on this thread. */
const char* sgdlab_last_error(void);

void sgdlab_string_free(char* s);

/* --- learning rate schedules (opaque handle) --- */

typedef struct sgdlab_schedule sgdlab_schedule;

/* config_json (version-1 schedule config, unknown keys are errors):
 *   {"version": 1, "kind": "schedule",
 *    "eps0": .., "gamma": .. | "eps_f": ..,
 *    "budget": {"kind": "constant_epoch"|"constant_step"|"unlimited", ...},
 *    "steps_per_epoch": .., "granularity": "epoch"|"step"} */
sgdlab_status sgdlab_schedule_create(const char* config_json, sgdlab_schedule** out);
sgdlab_status sgdlab_schedule_lr_at(const sgdlab_schedule* sched, int64_t step,
                                    double* out_lr);
sgdlab_status sgdlab_schedule_total_steps(const sgdlab_schedule* sched, int64_t* out_steps);
/* One row per LR change point plus endpoints; as_csv selects comma separators. */
sgdlab_status sgdlab_schedule_table(const sgdlab_schedule* sched, int as_csv,
                                    char** out_text);
void sgdlab_schedule_free(sgdlab_schedule* sched);

/* --- sweeps --- */

/* Runs the sweep described by the config file and writes runs.jsonl plus
 * summary.csv into out_dir. has_seed != 0 overrides the config seed. jobs <= 0
 * uses the hardware thread count. out_summary (optional) receives the
 * human-readable per-group optimum lines. */
sgdlab_status sgdlab_sweep_run(const char* config_path, const char* out_dir, uint64_t seed,
                               int has_seed, int jobs, char** out_summary);

/* Planned run count without running anything. */
sgdlab_status sgdlab_sweep_dry_run(const char* config_path, uint64_t* out_runs);

/* --- checks --- */

/* name: lin-scaling | sde-vs-sgd | eps-crit | momentum-equiv.
 * params_json: optional overrides (NULL or "" for defaults); unknown keys are
 * errors. out_report_json receives the full machine-readable report. Returns
 * SGDLAB_OK when the check behaves as theory predicts (pass in regime,
 * expected-fail at a regime boundary) and SGDLAB_CHECK_FAILED otherwise. */
sgdlab_status sgdlab_check_run(const char* name, uint64_t seed, const char* params_json,
                               char** out_report_json);

/* Newline-separated valid check names. */
sgdlab_status sgdlab_check_list(char** out_names);

/* --- reports --- */

/* Renders the batch-size report table from a results directory containing
 * summary.csv, and writes the plot CSVs next to it. */
sgdlab_status sgdlab_report_render(const char* results_dir, char** out_table);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SGDLAB_H */
