#ifndef RANKONE_RANKONE_H
#define RANKONE_RANKONE_H

/* C interface to the rank-one experiment library.
 *
 * Every function returns a rankone_status. On failure the thread-local
 * message and error name (e.g. "LagOutOfRange") are available through
 * rankone_last_error / rankone_last_error_name until the next call on the
 * same thread. Strings handed out through char** parameters are owned by
 * the caller and released with rankone_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RANKONE_API __declspec(dllexport)
#else
#define RANKONE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rankone_status {
  RANKONE_OK = 0,
  RANKONE_ERR_PARSE = 1,
  RANKONE_ERR_VALIDATION = 2,
  RANKONE_ERR_RUNTIME = 3,
  RANKONE_ERR_IO = 4,
  RANKONE_ERR_ARGUMENT = 5,
  RANKONE_ERR_INTERNAL = 6
} rankone_status;

typedef enum rankone_format {
  RANKONE_FORMAT_JSON = 0,
  RANKONE_FORMAT_CSV = 1,
  RANKONE_FORMAT_BOTH = 2
} rankone_format;

typedef struct rankone_tower rankone_tower;
typedef struct rankone_plan rankone_plan;
typedef struct rankone_report rankone_report;

typedef struct rankone_overrides {
  int has_seed;
  uint64_t seed;
  int has_budget;
  uint64_t budget;
} rankone_overrides;

RANKONE_API const char* rankone_version(void);
RANKONE_API const char* rankone_last_error(void);
RANKONE_API const char* rankone_last_error_name(void);
RANKONE_API void rankone_string_free(char* s);

/* Catalog */
RANKONE_API size_t rankone_catalog_count(void);
/* Borrowed pointer, NULL when index is out of range. */
RANKONE_API const char* rankone_catalog_name(size_t index);

/* Decimal level counts l_1..l_depth of a catalog transformation, or the
 * exact heights h_1..h_depth ("p/q") of a catalog flow, as a JSON array of
 * strings. seed is used by stochastic schedules only. */
RANKONE_API rankone_status rankone_heights_json(const char* catalog_name, int depth, uint64_t seed,
                                                char** out_json);

/* Towers of catalog transformations. base_stage <= 0 selects the default. */
RANKONE_API rankone_status rankone_tower_create(const char* catalog_name, int base_stage, int depth,
                                                uint64_t seed, rankone_tower** out);
RANKONE_API void rankone_tower_destroy(rankone_tower* tower);
RANKONE_API size_t rankone_tower_alphabet_size(const rankone_tower* tower);
RANKONE_API uint64_t rankone_tower_length(const rankone_tower* tower);
RANKONE_API int rankone_tower_base_stage(const rankone_tower* tower);
/* Integer counts #{p : W[p] = a, W[p + lag] = b}, row-major into out[a * size + b].
 * capacity is the number of uint64 slots available. */
RANKONE_API rankone_status rankone_lag_counts(rankone_tower* tower, int64_t lag, uint64_t* out,
                                              size_t capacity);
/* Normalized correlation matrix D(lag), row-major. */
RANKONE_API rankone_status rankone_corr(rankone_tower* tower, int64_t lag, double* out,
                                        size_t capacity);

/* Plans */
RANKONE_API rankone_status rankone_plan_parse(const char* text, const rankone_overrides* overrides,
                                              rankone_plan** out);
RANKONE_API rankone_status rankone_plan_load(const char* path, const rankone_overrides* overrides,
                                             rankone_plan** out);
RANKONE_API void rankone_plan_destroy(rankone_plan* plan);
RANKONE_API rankone_status rankone_plan_echo_json(const rankone_plan* plan, char** out_json);
/* Any NULL argument keeps the configured value; format < 0 likewise. */
RANKONE_API rankone_status rankone_plan_set_output(rankone_plan* plan, const char* dir, const char* name,
                                                   int format);
RANKONE_API rankone_status rankone_plan_run(const rankone_plan* plan, rankone_report** out);

/* Reports */
RANKONE_API void rankone_report_destroy(rankone_report* report);
RANKONE_API size_t rankone_report_experiment_count(const rankone_report* report);
/* Number of experiments that ended in an error record. */
RANKONE_API size_t rankone_report_failures(const rankone_report* report);
RANKONE_API rankone_status rankone_report_json(const rankone_report* report, int include_wall_time,
                                               char** out_json);
/* Writes the files to the plan's output settings; out_paths (optional)
 * receives a JSON array of the written paths. */
RANKONE_API rankone_status rankone_report_emit(const rankone_report* report, char** out_paths);

#ifdef __cplusplus
}
#endif

#endif
