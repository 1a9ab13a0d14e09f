/* SPDX-License-Identifier: Apache-2.0 */
/* Copyright 2026 The GinAR Engine Authors */

/* Exercises the shared library through its C header only. */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "ginar/ginar.h"

static int failures = 0;

#define EXPECT(cond)                                                    \
  do {                                                                  \
    if (!(cond)) {                                                      \
      fprintf(stderr, "%s:%d: expectation failed: %s (last error: %s)\n", \
              __FILE__, __LINE__, #cond, ginar_last_error());           \
      ++failures;                                                       \
    }                                                                   \
  } while (0)

static int lines_seen = 0;
static void count_line(const char *line, void *user) {
  (void)line;
  (void)user;
  ++lines_seen;
}

int main(int argc, char **argv) {
  const char *root = argc > 1 ? argv[1] : ".";
  char dir[1024], path[1200], json[4096];
  snprintf(dir, sizeof dir, "%s/capi_scratch", root);

  EXPECT(ginar_version() != NULL && strlen(ginar_version()) > 0);

  /* Error reporting. */
  ginar_config *cfg = NULL;
  EXPECT(ginar_config_parse("{not json", &cfg) == GINAR_E_INVALID_ARGUMENT);
  EXPECT(cfg == NULL);
  EXPECT(strlen(ginar_last_error()) > 0);
  EXPECT(ginar_config_parse(NULL, &cfg) == GINAR_E_INVALID_ARGUMENT);
  EXPECT(ginar_config_load("/nonexistent/ginar.json", &cfg) == GINAR_E_IO);
  EXPECT(ginar_synth(3, 100, 0, 0.1, dir) == GINAR_E_INVALID_ARGUMENT);
  EXPECT(ginar_report_headline(NULL, NULL, NULL, NULL) == GINAR_E_INVALID_ARGUMENT);

  /* Synthetic data on disk, then a config pointing at it. */
  EXPECT(ginar_synth(6, 300, 4, 0.05, dir) == GINAR_OK);
  snprintf(json, sizeof json,
           "{\"dataset\": {\"path\": \"%s/data.csv\", \"distances\": \"%s/distances.csv\","
           " \"coords\": \"%s/coords.csv\"},"
           " \"seeds\": [0, 1], \"stride\": 6, \"train\": {\"epochs\": 1},"
           " \"model\": {\"embed\": 8, \"var_embed\": 4, \"layers\": 1, \"decoder_hidden\": 16},"
           " \"ia\": {\"k\": 3}}",
           dir, dir, dir);
  EXPECT(ginar_config_parse(json, &cfg) == GINAR_OK);
  if (!cfg)
    return 1;
  EXPECT(ginar_config_set_rate(cfg, 1.5) == GINAR_E_INVALID_ARGUMENT);
  EXPECT(ginar_config_set_ablation(cfg, 1, 0, 0) == GINAR_E_INVALID_ARGUMENT);
  EXPECT(ginar_config_set_seeds(cfg, NULL, 0) == GINAR_E_INVALID_ARGUMENT);
  EXPECT(ginar_config_set_rate(cfg, 0.5) == GINAR_OK);
  snprintf(path, sizeof path, "%s/out", dir);
  EXPECT(ginar_config_set_output(cfg, path) == GINAR_OK);
  EXPECT(ginar_config_set_log(cfg, count_line, NULL) == GINAR_OK);

  char *hash = NULL, *canon = NULL;
  EXPECT(ginar_config_hash(cfg, &hash) == GINAR_OK && hash && strlen(hash) == 16);
  EXPECT(ginar_config_to_json(cfg, &canon) == GINAR_OK && canon && strstr(canon, "\"seeds\""));
  ginar_string_free(hash);
  ginar_string_free(canon);

  /* Training run and report accessors. */
  ginar_report *report = NULL;
  EXPECT(ginar_train(cfg, &report) == GINAR_OK);
  EXPECT(lines_seen > 0);
  size_t count = 0;
  double mae = 0, rmse = 0, mape = 0, m0 = 0, m1 = 0;
  EXPECT(ginar_report_seed_count(report, &count) == GINAR_OK && count == 2);
  EXPECT(ginar_report_headline(report, &mae, &rmse, &mape) == GINAR_OK);
  EXPECT(ginar_report_seed_mae(report, 0, &m0) == GINAR_OK);
  EXPECT(ginar_report_seed_mae(report, 1, &m1) == GINAR_OK);
  EXPECT(fabs(mae - 0.5 * (m0 + m1)) < 1e-12);
  EXPECT(rmse >= mae);
  EXPECT(ginar_report_seed_mae(report, 2, &m0) == GINAR_E_INVALID_ARGUMENT);
  char *csv = NULL;
  EXPECT(ginar_report_csv(report, &csv) == GINAR_OK && csv && strncmp(csv, "seed,mae", 8) == 0);
  ginar_string_free(csv);
  char *rjson = NULL;
  EXPECT(ginar_report_json(report, &rjson) == GINAR_OK && rjson && strstr(rjson, "config_hash"));
  ginar_string_free(rjson);

  /* Checkpoint evaluation and direct prediction. */
  snprintf(path, sizeof path, "%s/out/checkpoint.json", dir);
  ginar_report *eval = NULL;
  EXPECT(ginar_eval(cfg, path, &eval) == GINAR_OK);
  double eval_mae = -1;
  EXPECT(ginar_report_seed_mae(eval, 0, &eval_mae) == GINAR_OK);
  EXPECT(ginar_report_seed_mae(report, 0, &m0) == GINAR_OK);
  EXPECT(eval_mae == m0);
  ginar_report_free(eval);
  ginar_report_free(report);

  ginar_model *model = NULL;
  EXPECT(ginar_model_load(path, &model) == GINAR_OK);
  size_t vars = 0, history = 0, channels = 0, horizon = 0;
  EXPECT(ginar_model_dims(model, &vars, &history, &channels, &horizon) == GINAR_OK);
  EXPECT(vars == 6 && history == 12 && channels == 1 && horizon == 12);
  double *x = calloc(2 * vars * history * channels, sizeof(double));
  double *y = calloc(2 * vars * horizon, sizeof(double));
  for (size_t k = 0; k < 2 * vars * history * channels; ++k)
    x[k] = 10.0 + (double)(k % 7);
  EXPECT(ginar_model_predict(model, x, 2, y) == GINAR_OK);
  int finite = 1;
  for (size_t k = 0; k < 2 * vars * horizon; ++k)
    finite = finite && isfinite(y[k]);
  EXPECT(finite);
  EXPECT(ginar_model_predict(model, NULL, 2, y) == GINAR_E_INVALID_ARGUMENT);
  EXPECT(ginar_model_load("/nonexistent/ck.json", &model) == GINAR_E_IO);
  free(x);
  free(y);
  ginar_model_free(model);

  ginar_config_free(cfg);
  if (failures)
    fprintf(stderr, "%d expectation(s) failed\n", failures);
  else
    printf("C API: all expectations met\n");
  return failures ? 1 : 0;
}
