/* SPDX-License-Identifier: Apache-2.0 */
/* Copyright 2026 The GinAR Engine Authors */

/*
 * C interface to the GinAR forecasting engine.
 *
 * Every call returns a ginar_status; on failure ginar_last_error() holds a
 * message for the calling thread until its next failing call. Objects are
 * opaque and owned by the caller, who releases them with the matching
 * *_free function. Strings returned through char** are released with
 * ginar_string_free.
 */

#ifndef GINAR_GINAR_H
#define GINAR_GINAR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(GINAR_BUILDING_LIBRARY)
#    define GINAR_API __declspec(dllexport)
#  else
#    define GINAR_API __declspec(dllimport)
#  endif
#else
#  define GINAR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ginar_status {
  GINAR_OK = 0,
  GINAR_E_INVALID_ARGUMENT = 1,
  GINAR_E_SHAPE = 2,
  GINAR_E_NON_FINITE = 3,
  GINAR_E_DATA_FORMAT = 4,
  GINAR_E_IO = 5,
  GINAR_E_STATE = 6,
  GINAR_E_INTERNAL = 99
} ginar_status;

typedef struct ginar_config ginar_config;
typedef struct ginar_report ginar_report;
typedef struct ginar_model ginar_model;

/* Called once per progress line (epoch summaries, warnings). */
typedef void (*ginar_log_fn)(const char *line, void *user);

GINAR_API const char *ginar_version(void);
GINAR_API const char *ginar_last_error(void);
GINAR_API void ginar_string_free(char *s);

/* Configuration ---------------------------------------------------------- */

GINAR_API ginar_status ginar_config_parse(const char *json, ginar_config **out);
GINAR_API ginar_status ginar_config_load(const char *path, ginar_config **out);
GINAR_API void ginar_config_free(ginar_config *cfg);

GINAR_API ginar_status ginar_config_set_rate(ginar_config *cfg, double rate);
GINAR_API ginar_status ginar_config_set_seeds(ginar_config *cfg, const uint64_t *seeds, size_t count);
/* Each flag is 0 (component removed) or 1. */
GINAR_API ginar_status ginar_config_set_ablation(ginar_config *cfg, int ia, int pg, int ag);
GINAR_API ginar_status ginar_config_set_output(ginar_config *cfg, const char *dir);
GINAR_API ginar_status ginar_config_set_log(ginar_config *cfg, ginar_log_fn fn, void *user);
/* Canonical JSON of the resolved configuration. */
GINAR_API ginar_status ginar_config_to_json(const ginar_config *cfg, char **out);
GINAR_API ginar_status ginar_config_hash(const ginar_config *cfg, char **out);

/* Experiments ------------------------------------------------------------ */

GINAR_API ginar_status ginar_train(const ginar_config *cfg, ginar_report **out);
GINAR_API ginar_status ginar_eval(const ginar_config *cfg, const char *checkpoint, ginar_report **out);
GINAR_API ginar_status ginar_ablate(const ginar_config *cfg, ginar_report **out);
GINAR_API ginar_status ginar_impute_eval(const ginar_config *cfg, ginar_report **out);

/* Writes data.csv, distances.csv, coords.csv and adjacency.csv into dir. */
GINAR_API ginar_status ginar_synth(size_t vars, size_t steps, uint64_t graph_seed, double noise,
                                   const char *dir);

/* Reports ---------------------------------------------------------------- */

/* Mean over seeds of the horizon-averaged scores. For ablation reports this
 * is the full model; for impute-eval reports the IA variant at the first
 * rate. MAPE is NaN when undefined. */
GINAR_API ginar_status ginar_report_headline(const ginar_report *r, double *mae, double *rmse,
                                             double *mape);
GINAR_API ginar_status ginar_report_seed_count(const ginar_report *r, size_t *count);
GINAR_API ginar_status ginar_report_seed_mae(const ginar_report *r, size_t index, double *mae);
GINAR_API ginar_status ginar_report_json(const ginar_report *r, char **out);
GINAR_API ginar_status ginar_report_csv(const ginar_report *r, char **out);
GINAR_API void ginar_report_free(ginar_report *r);

/* Trained models --------------------------------------------------------- */

GINAR_API ginar_status ginar_model_load(const char *checkpoint, ginar_model **out);
GINAR_API void ginar_model_free(ginar_model *m);
/* Number of variables, history length, input channels and horizon. */
GINAR_API ginar_status ginar_model_dims(const ginar_model *m, size_t *vars, size_t *history,
                                        size_t *channels, size_t *horizon);
/* x: batch x vars x history x channels raw values (masked variables are
 * zeroed internally); y: batch x vars x horizon in original units. */
GINAR_API ginar_status ginar_model_predict(ginar_model *m, const double *x, size_t batch, double *y);

#ifdef __cplusplus
}
#endif

#endif /* GINAR_GINAR_H */
