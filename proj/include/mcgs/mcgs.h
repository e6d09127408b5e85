/* C interface to the MCGS search library. Every entry point returns MCGS_OK
 * or one of the MCGS_ERR_* codes; mcgs_last_error() describes the most
 * recent failure on the calling thread. */
#ifndef MCGS_MCGS_H
#define MCGS_MCGS_H

#ifdef __cplusplus
extern "C" {
#endif

#define MCGS_OK 0
#define MCGS_ERR_UNKNOWN_PARENT 1
#define MCGS_ERR_UNKNOWN_NODE 2
#define MCGS_ERR_GRAPH_FINALIZED 3
#define MCGS_ERR_BACKWARD_REFERENCE 4
#define MCGS_ERR_DUPLICATE_EDGE 5
#define MCGS_ERR_EMPTY_SOURCES 6
#define MCGS_ERR_NO_EXPANDABLE_NODE 7
#define MCGS_ERR_MISSING_METRIC 8
#define MCGS_ERR_NO_EVALUATED_SOLUTION 9
#define MCGS_ERR_BUDGET_EXHAUSTED 10
#define MCGS_ERR_EMPTY_REFERENCE_POOL 11
#define MCGS_ERR_ENGINE_FAILURE 12
#define MCGS_ERR_CONFIG 13
#define MCGS_ERR_TASK_LOAD 14
#define MCGS_ERR_IO 15
#define MCGS_ERR_STRUCTURE_INVALID 16
#define MCGS_ERR_WORKER_PANIC 17
#define MCGS_ERR_INTERNAL 100

typedef struct mcgs_config mcgs_config;
typedef struct mcgs_run mcgs_run;

/* Configuration ----------------------------------------------------------- */

/* A fresh configuration holding the shipped defaults. Never fails. */
mcgs_config* mcgs_config_new(void);
void mcgs_config_free(mcgs_config* config);

/* Merges a JSON config file into `config`. */
int mcgs_config_load_file(mcgs_config* config, const char* path);

/* Sets one key. Numeric keys parse `value`; unknown keys fail. */
int mcgs_config_set(mcgs_config* config, const char* key, const char* value);

/* Runs --------------------------------------------------------------------- */

/* Executes a full search run; on MCGS_OK the caller owns *out_run. */
int mcgs_run_execute(const mcgs_config* config, mcgs_run** out_run);
void mcgs_run_free(mcgs_run* run);

/* Best metric of the run; MCGS_ERR_NO_EVALUATED_SOLUTION when nothing
 * evaluated. */
int mcgs_run_best_metric(const mcgs_run* run, double* out_metric);
/* Node id of the best solution, -1 when nothing evaluated. */
long long mcgs_run_best_node(const mcgs_run* run);
long long mcgs_run_node_count(const mcgs_run* run);
long long mcgs_run_steps_completed(const mcgs_run* run);

/* Serialized outputs; free the returned string with mcgs_string_free. NULL
 * only on allocation failure or null input. */
char* mcgs_run_graph_json(const mcgs_run* run);
char* mcgs_run_summary_json(const mcgs_run* run);

/* Tools -------------------------------------------------------------------- */

/* Recomputes report.csv and summary.json from <run_dir>/events.jsonl. */
int mcgs_report_emit(const char* run_dir);

/* Structural validation of a serialized solution graph. Violations are
 * listed in mcgs_last_error(). */
int mcgs_snapshot_validate(const char* graph_json_path);

/* Diagnostics -------------------------------------------------------------- */

/* Static name for a status code; never NULL. */
const char* mcgs_status_message(int code);
/* Message of the calling thread's most recent failure; empty when none. */
const char* mcgs_last_error(void);
void mcgs_string_free(char* s);
const char* mcgs_version(void);

#ifdef __cplusplus
}
#endif

#endif /* MCGS_MCGS_H */
