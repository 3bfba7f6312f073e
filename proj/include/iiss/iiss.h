/* C interface to the iiss library. Objects are opaque handles owned by the
 * caller and released with the matching *_free function. Every function
 * returns an iiss_status; on failure iiss_last_error() describes the cause
 * for the calling thread. */
#ifndef IISS_IISS_H
#define IISS_IISS_H

#include <stddef.h>

#if defined(_WIN32)
#if defined(IISS_BUILDING_LIBRARY)
#define IISS_API __declspec(dllexport)
#else
#define IISS_API __declspec(dllimport)
#endif
#else
#define IISS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum iiss_status {
  IISS_OK = 0,
  IISS_ERR_INVALID_ARGUMENT = 1,
  IISS_ERR_NEGATIVE_ARGUMENT = 2,
  IISS_ERR_DOMAIN_EXCEEDED = 3,
  IISS_ERR_NOT_REACHABLE = 4,
  IISS_ERR_NO_MAJORANT = 5,
  IISS_ERR_DIMENSION_MISMATCH = 6,
  IISS_ERR_INVALID_INTERVAL = 7,
  IISS_ERR_NON_FINITE = 8,
  IISS_ERR_STEP_TOO_LARGE = 9,
  IISS_ERR_UNKNOWN_SCENARIO = 10,
  IISS_ERR_ZERO_GAIN = 11,
  IISS_ERR_HORIZON_UNBOUNDED = 12,
  IISS_ERR_NO_ROUTE = 13,
  IISS_ERR_IO = 14,
  IISS_ERR_NULL_POINTER = 15,
  IISS_ERR_INTERNAL = 16
} iiss_status;

typedef struct iiss_signal iiss_signal;
typedef struct iiss_scenario iiss_scenario;
typedef struct iiss_trajectory iiss_trajectory;

IISS_API const char* iiss_version(void);
IISS_API const char* iiss_status_string(iiss_status status);
/* Message of the last failed call on this thread; "" when none. */
IISS_API const char* iiss_last_error(void);

/* Signals: mini-language (zero, const:v:t_end, steps:file.json) or JSON. */
IISS_API iiss_status iiss_signal_parse(const char* text, iiss_signal** out);
IISS_API iiss_status iiss_signal_from_json(const char* json, iiss_signal** out);
IISS_API void iiss_signal_free(iiss_signal* signal);
IISS_API iiss_status iiss_signal_dim(const iiss_signal* signal, size_t* out);
/* u(t); `out` holds dim entries. */
IISS_API iiss_status iiss_signal_eval(const iiss_signal* signal, double t, double* out);
/* Measure by spec string (sup, integral:identity, windowed:power:1:2@1, ...). */
IISS_API iiss_status iiss_signal_measure(const iiss_signal* signal, const char* spec, double* out);

/* Scenarios by name; params_json may be NULL or an object of numbers. */
IISS_API iiss_status iiss_scenario_create(const char* name, const char* params_json,
                                          iiss_scenario** out);
IISS_API void iiss_scenario_free(iiss_scenario* scenario);
IISS_API iiss_status iiss_scenario_state_dim(const iiss_scenario* scenario, size_t* out);
IISS_API iiss_status iiss_scenario_input_dim(const iiss_scenario* scenario, size_t* out);

/* step <= 0 selects the scenario's recommended step. */
IISS_API iiss_status iiss_simulate(const iiss_scenario* scenario, double t0, const double* x0,
                                   size_t x0_len, const iiss_signal* input, double t_end,
                                   double step, iiss_trajectory** out);
IISS_API void iiss_trajectory_free(iiss_trajectory* trajectory);
IISS_API iiss_status iiss_trajectory_size(const iiss_trajectory* trajectory, size_t* out);
IISS_API iiss_status iiss_trajectory_dim(const iiss_trajectory* trajectory, size_t* out);
IISS_API iiss_status iiss_trajectory_time(const iiss_trajectory* trajectory, size_t index,
                                          double* out);
/* `out` holds dim entries. */
IISS_API iiss_status iiss_trajectory_state(const iiss_trajectory* trajectory, size_t index,
                                           double* out);
IISS_API iiss_status iiss_trajectory_escaped(const iiss_trajectory* trajectory, int* out);
/* Columns t, x_0 .. x_{n-1}; release with iiss_string_free. */
IISS_API iiss_status iiss_trajectory_csv(const iiss_trajectory* trajectory, char** out);

/* Runs a command (simulate, measure, estimate, bound-check, modulus,
 * falsify, horizon) on a JSON config. *report_json receives the report
 * (release with iiss_string_free); *verdict is 0 for pass, 1 for a failed
 * property or found witness, 3 for a recorded numerical failure. When csv
 * is not NULL it receives the trajectory CSV (simulate), the per-case rows
 * (estimate), sampled input values (measure with sample_dt) or NULL. */
IISS_API iiss_status iiss_run(const char* command, const char* config_json, char** report_json,
                              char** csv, int* verdict);

/* Worker count for sweeps; 0 restores the hardware default. */
IISS_API void iiss_set_threads(size_t threads);

IISS_API void iiss_string_free(char* str);

#ifdef __cplusplus
}
#endif

#endif /* IISS_IISS_H */
