/* C interface to the hypospec library. All handles are opaque; functions
 * return HS_OK or an error status, with the message in hs_last_error(). */
#ifndef HYPOSPEC_H
#define HYPOSPEC_H

#include <stddef.h>
#include <stdint.h>

#if defined(HYPOSPEC_BUILDING_LIBRARY)
#define HS_API __attribute__((visibility("default")))
#else
#define HS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hs_status {
  HS_OK = 0,
  HS_INVALID_ARGUMENT = 1,
  HS_PARSE_ERROR = 2,
  HS_CONFIG_ERROR = 3,
  HS_HORMANDER_FAILURE = 4,
  HS_NUMERICAL_ERROR = 5,
  HS_DIMENSION_ERROR = 6,
  HS_IO_ERROR = 7,
  HS_INTERNAL_ERROR = 8
} hs_status;

typedef struct hs_config hs_config;
typedef struct hs_run hs_run;
typedef struct hs_pencil hs_pencil;

typedef void (*hs_log_fn)(const char* message, void* user);

HS_API const char* hs_version(void);
/* Message of the last failed call on this thread; empty when none. */
HS_API const char* hs_last_error(void);
/* Strings returned through char** out-parameters are released here. */
HS_API void hs_string_free(char* s);

/* Registry listing, one scenario per line. */
HS_API hs_status hs_registry_listing(char** out);
/* Comma separated stage names. */
HS_API const char* hs_stage_names(void);

HS_API hs_status hs_config_load(const char* path, hs_config** out);
HS_API hs_status hs_config_from_string(const char* json_text, hs_config** out);
HS_API hs_status hs_config_for_scenario(const char* scenario_id, hs_config** out);
HS_API hs_status hs_config_set_seed(hs_config* cfg, uint64_t seed);
HS_API hs_status hs_config_set_workers(hs_config* cfg, int workers);
HS_API hs_status hs_config_set_output(hs_config* cfg, const char* dir);
HS_API hs_status hs_config_set_cache(hs_config* cfg, int enabled);
HS_API hs_status hs_config_hash(const hs_config* cfg, char** out);
HS_API hs_status hs_config_canonical(const hs_config* cfg, char** out);
HS_API void hs_config_free(hs_config* cfg);

/* A run owns its pipeline; stages share computed results. */
HS_API hs_status hs_run_create(const hs_config* cfg, hs_log_fn log, void* user, hs_run** out);
/* exit_code receives the stage status: for "verify", 0 iff all checks pass. */
HS_API hs_status hs_run_stage(hs_run* run, const char* stage, int* exit_code);
/* Verdict JSON of the last verify call on this run. */
HS_API hs_status hs_run_verdict(hs_run* run, char** out);
HS_API hs_status hs_run_fits(hs_run* run, char** out);
HS_API void hs_run_free(hs_run* run);

/* Pencils from explicit data: symmetric S in triplets (both triangles), W
 * diagonal of length n. */
HS_API hs_status hs_pencil_from_triplets(size_t n, size_t nnz, const int64_t* rows, const int64_t* cols,
                                        const double* values, const double* w, hs_pencil** out);
HS_API hs_status hs_pencil_from_config(const hs_config* cfg, hs_pencil** out);
HS_API hs_status hs_pencil_dim(const hs_pencil* p, size_t* out);
HS_API hs_status hs_pencil_count_below(const hs_pencil* p, double lambda, long* out);
/* Lowest k eigenvalues written to values[0..k). */
HS_API hs_status hs_pencil_lowest_eigs(const hs_pencil* p, int k, uint64_t seed, double* values);
/* Stochastic trace at nt times; value and stderr arrays of length nt. */
HS_API hs_status hs_pencil_trace(const hs_pencil* p, const double* ts, size_t nt, int probes, uint64_t seed,
                                 double* values, double* stderrs);
HS_API void hs_pencil_free(hs_pencil* p);

#ifdef __cplusplus
}
#endif

#endif
