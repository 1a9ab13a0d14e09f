// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

#include "ginar/ginar.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/experiment.hpp"

using namespace ginar;

struct ginar_config {
  config::ExperimentConfig cfg;
  ginar_log_fn log = nullptr;
  void *log_user = nullptr;
};

struct ginar_report {
  enum class Kind { kSingle, kAblation, kImpute } kind = Kind::kSingle;
  config::ExperimentConfig cfg;
  std::vector<experiment::MetricsReport> reports;  // single: 1, ablation: 4
  std::vector<experiment::ImputeRow> impute;
};

struct ginar_model {
  experiment::Checkpoint ck;
};

namespace {

thread_local std::string t_last_error;

ginar_status to_status(ErrorCode code) {
  switch (code) {
  case ErrorCode::kInvalidArgument: return GINAR_E_INVALID_ARGUMENT;
  case ErrorCode::kShapeMismatch: return GINAR_E_SHAPE;
  case ErrorCode::kNonFinite: return GINAR_E_NON_FINITE;
  case ErrorCode::kDataFormat: return GINAR_E_DATA_FORMAT;
  case ErrorCode::kIo: return GINAR_E_IO;
  case ErrorCode::kState: return GINAR_E_STATE;
  }
  return GINAR_E_INTERNAL;
}

template <typename F> ginar_status guarded(F &&f) {
  try {
    f();
    return GINAR_OK;
  } catch (const Error &e) {
    t_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc &) {
    t_last_error = "out of memory";
    return GINAR_E_INTERNAL;
  } catch (const std::exception &e) {
    t_last_error = e.what();
    return GINAR_E_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return GINAR_E_INTERNAL;
  }
}

void need(const void *p, const char *what) {
  if (!p)
    fail(ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

char *dup_string(const std::string &s) {
  char *out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

experiment::Log make_log(const ginar_config *c) {
  if (!c->log)
    return {};
  return [fn = c->log, user = c->log_user](const std::string &line) { fn(line.c_str(), user); };
}

const metrics::Scores &headline(const ginar_report &r) {
  if (r.kind == ginar_report::Kind::kImpute) {
    if (r.impute.empty())
      fail(ErrorCode::kState, "empty impute report");
    return r.impute.front().ia.mean;
  }
  if (r.reports.empty())
    fail(ErrorCode::kState, "empty report");
  return r.reports.front().mean;
}

const std::vector<experiment::SeedResult> &seed_results(const ginar_report &r) {
  if (r.kind == ginar_report::Kind::kImpute)
    return r.impute.at(0).ia.seeds;
  return r.reports.at(0).seeds;
}

} // namespace

extern "C" {

const char *ginar_version(void) { return "1.0.0"; }

const char *ginar_last_error(void) { return t_last_error.c_str(); }

void ginar_string_free(char *s) { delete[] s; }

ginar_status ginar_config_parse(const char *json, ginar_config **out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    *out = new ginar_config{config::parse(json)};
  });
}

ginar_status ginar_config_load(const char *path, ginar_config **out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new ginar_config{config::load(path)};
  });
}

void ginar_config_free(ginar_config *cfg) { delete cfg; }

ginar_status ginar_config_set_rate(ginar_config *cfg, double rate) {
  return guarded([&] {
    need(cfg, "config");
    auto copy = cfg->cfg;
    copy.missing_rate = rate;
    copy.validate();
    cfg->cfg = std::move(copy);
  });
}

ginar_status ginar_config_set_seeds(ginar_config *cfg, const uint64_t *seeds, size_t count) {
  return guarded([&] {
    need(cfg, "config");
    if (count > 0)
      need(seeds, "seeds");
    auto copy = cfg->cfg;
    copy.seeds.assign(seeds, seeds + count);
    copy.validate();
    cfg->cfg = std::move(copy);
  });
}

ginar_status ginar_config_set_ablation(ginar_config *cfg, int ia, int pg, int ag) {
  return guarded([&] {
    need(cfg, "config");
    auto copy = cfg->cfg;
    copy.ablation = {ia != 0, pg != 0, ag != 0};
    copy.validate();
    cfg->cfg = std::move(copy);
  });
}

ginar_status ginar_config_set_output(ginar_config *cfg, const char *dir) {
  return guarded([&] {
    need(cfg, "config");
    cfg->cfg.output = dir ? dir : "";
  });
}

ginar_status ginar_config_set_log(ginar_config *cfg, ginar_log_fn fn, void *user) {
  return guarded([&] {
    need(cfg, "config");
    cfg->log = fn;
    cfg->log_user = user;
  });
}

ginar_status ginar_config_to_json(const ginar_config *cfg, char **out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = dup_string(config::to_json(cfg->cfg));
  });
}

ginar_status ginar_config_hash(const ginar_config *cfg, char **out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = dup_string(config::config_hash(cfg->cfg));
  });
}

ginar_status ginar_train(const ginar_config *cfg, ginar_report **out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    auto r = std::make_unique<ginar_report>();
    r->cfg = cfg->cfg;
    r->reports.push_back(experiment::run_experiment(cfg->cfg, make_log(cfg)));
    *out = r.release();
  });
}

ginar_status ginar_eval(const ginar_config *cfg, const char *checkpoint, ginar_report **out) {
  return guarded([&] {
    need(cfg, "config");
    need(checkpoint, "checkpoint");
    need(out, "out");
    auto r = std::make_unique<ginar_report>();
    r->cfg = experiment::load_checkpoint(checkpoint).cfg;
    r->reports.push_back(experiment::run_eval(cfg->cfg, checkpoint, make_log(cfg)));
    *out = r.release();
  });
}

ginar_status ginar_ablate(const ginar_config *cfg, ginar_report **out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    auto r = std::make_unique<ginar_report>();
    r->kind = ginar_report::Kind::kAblation;
    r->cfg = cfg->cfg;
    r->reports = experiment::run_ablation(cfg->cfg, make_log(cfg));
    *out = r.release();
  });
}

ginar_status ginar_impute_eval(const ginar_config *cfg, ginar_report **out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    auto r = std::make_unique<ginar_report>();
    r->kind = ginar_report::Kind::kImpute;
    r->cfg = cfg->cfg;
    r->impute = experiment::run_impute_eval(cfg->cfg, make_log(cfg));
    *out = r.release();
  });
}

ginar_status ginar_synth(size_t vars, size_t steps, uint64_t graph_seed, double noise, const char *dir) {
  return guarded([&] {
    need(dir, "dir");
    const auto result = data::synth_generate(vars, steps, graph_seed, noise);
    const std::filesystem::path root(dir);
    std::filesystem::create_directories(root);
    data::save_dataset(result.dataset, (root / "data.csv").string());
    data::save_matrix_csv(*result.dataset.distances, (root / "distances.csv").string());
    data::save_matrix_csv(*result.dataset.coords, (root / "coords.csv").string());
    data::save_matrix_csv(result.adjacency, (root / "adjacency.csv").string());
  });
}

ginar_status ginar_report_headline(const ginar_report *r, double *mae, double *rmse, double *mape) {
  return guarded([&] {
    need(r, "report");
    const auto &s = headline(*r);
    if (mae)
      *mae = s.mae;
    if (rmse)
      *rmse = s.rmse;
    if (mape)
      *mape = s.mape;
  });
}

ginar_status ginar_report_seed_count(const ginar_report *r, size_t *count) {
  return guarded([&] {
    need(r, "report");
    need(count, "count");
    *count = seed_results(*r).size();
  });
}

ginar_status ginar_report_seed_mae(const ginar_report *r, size_t index, double *mae) {
  return guarded([&] {
    need(r, "report");
    need(mae, "mae");
    const auto &seeds = seed_results(*r);
    if (index >= seeds.size())
      fail(ErrorCode::kInvalidArgument, "seed index out of range");
    *mae = seeds[index].test.overall.mae;
  });
}

ginar_status ginar_report_json(const ginar_report *r, char **out) {
  return guarded([&] {
    need(r, "report");
    need(out, "out");
    std::string text;
    switch (r->kind) {
    case ginar_report::Kind::kSingle:
      text = experiment::report_json(r->reports.at(0), r->cfg);
      break;
    case ginar_report::Kind::kAblation: {
      auto j = nlohmann::json::array();
      for (const auto &rep : r->reports)
        j.push_back(nlohmann::json::parse(experiment::report_json(rep, r->cfg)));
      text = j.dump(2) + "\n";
      break;
    }
    case ginar_report::Kind::kImpute: {
      auto j = nlohmann::json::array();
      for (const auto &row : r->impute)
        j.push_back({{"rate", row.rate},
                     {"zero-fill", nlohmann::json::parse(experiment::report_json(row.zero_fill, r->cfg))},
                     {"IA", nlohmann::json::parse(experiment::report_json(row.ia, r->cfg))}});
      text = j.dump(2) + "\n";
      break;
    }
    }
    *out = dup_string(text);
  });
}

ginar_status ginar_report_csv(const ginar_report *r, char **out) {
  return guarded([&] {
    need(r, "report");
    need(out, "out");
    switch (r->kind) {
    case ginar_report::Kind::kSingle: *out = dup_string(experiment::report_csv(r->reports.at(0))); break;
    case ginar_report::Kind::kAblation: *out = dup_string(experiment::ablation_csv(r->reports)); break;
    case ginar_report::Kind::kImpute: *out = dup_string(experiment::impute_csv(r->impute)); break;
    }
  });
}

void ginar_report_free(ginar_report *r) { delete r; }

ginar_status ginar_model_load(const char *checkpoint, ginar_model **out) {
  return guarded([&] {
    need(checkpoint, "checkpoint");
    need(out, "out");
    *out = new ginar_model{experiment::load_checkpoint(checkpoint)};
  });
}

void ginar_model_free(ginar_model *m) { delete m; }

ginar_status ginar_model_dims(const ginar_model *m, size_t *vars, size_t *history, size_t *channels,
                              size_t *horizon) {
  return guarded([&] {
    need(m, "model");
    const auto &c = m->ck.model->config();
    if (vars)
      *vars = c.num_vars;
    if (history)
      *history = c.history;
    if (channels)
      *channels = c.in_channels;
    if (horizon)
      *horizon = c.horizon;
  });
}

ginar_status ginar_model_predict(ginar_model *m, const double *x, size_t batch, double *y) {
  return guarded([&] {
    need(m, "model");
    need(x, "x");
    need(y, "y");
    auto &g = *m->ck.model;
    const auto &c = g.config();
    const auto missing = m->ck.mask.flags(c.num_vars);
    model::InputBatch in;
    in.batch = batch;
    in.vars = c.num_vars;
    in.history = c.history;
    in.channels = c.in_channels;
    in.x.assign(x, x + batch * c.num_vars * c.history * c.in_channels);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < c.num_vars; ++i)
        for (std::size_t h = 0; h < c.history; ++h) {
          const std::size_t base = ((b * c.num_vars + i) * c.history + h) * c.in_channels;
          if (!std::isfinite(in.x[base]))
            fail(ErrorCode::kNonFinite, "input contains a non-finite value");
          if (missing[i]) {
            for (std::size_t ch = 0; ch < c.in_channels; ++ch)
              in.x[base + ch] = 0.0;
          } else {
            in.x[base] = (in.x[base] - m->ck.norm.mean[i]) / m->ck.norm.std[i];
          }
        }
    ad::NoGradGuard no_grad;
    std::mt19937_64 unused(0);
    auto out = train::denormalize(g.forward(in, false, unused), m->ck.norm);
    const auto values = out.data();
    for (std::size_t k = 0; k < values.size(); ++k)
      y[k] = static_cast<double>(values[k]);
  });
}

} // extern "C"
