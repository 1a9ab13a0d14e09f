// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

#include "core/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "core/graph.hpp"

namespace ginar::experiment {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json scores_json(const metrics::Scores &s) {
  return {{"mae", number(s.mae)}, {"rmse", number(s.rmse)}, {"mape", number(s.mape)}};
}

std::string fmt(double v) {
  if (std::isnan(v))
    return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double offdiag_std(const Matrix &d) {
  std::vector<double> xs;
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = 0; j < d.cols(); ++j)
      if (i != j && std::isfinite(d(i, j)))
        xs.push_back(d(i, j));
  if (xs.size() < 2)
    return 1.0;
  double mu = 0;
  for (const double x : xs)
    mu += x;
  mu /= static_cast<double>(xs.size());
  double var = 0;
  for (const double x : xs)
    var += (x - mu) * (x - mu);
  const double sd = std::sqrt(var / static_cast<double>(xs.size()));
  return sd > 0 ? sd : 1.0;
}

void log_line(const Log &log, const std::string &msg) {
  if (log)
    log(msg);
}

std::string variant_name(const config::Ablation &a) {
  if (!a.ia)
    return "w/o ia";
  if (!a.pg)
    return "w/o pg";
  if (!a.ag)
    return "w/o ag";
  return "ginar";
}

json model_config_json(const model::ModelConfig &m) {
  return {{"num_vars", m.num_vars},       {"in_channels", m.in_channels},
          {"embed", m.embed},             {"var_embed", m.var_embed},
          {"layers", m.layers},           {"history", m.history},
          {"horizon", m.horizon},         {"decoder_hidden", m.decoder_hidden},
          {"dropout", m.dropout},         {"ln_eps", m.ln_eps},
          {"use_ia", m.use_ia},           {"use_pg", m.use_pg},
          {"use_ag", m.use_ag},           {"sigmoid_gates", m.sigmoid_gates},
          {"ia_k", m.ia.k},               {"ia_pairwise_scores", m.ia.pairwise_scores},
          {"ia_correspondence_weighted", m.ia.correspondence_weighted},
          {"ia_leaky_slope", m.ia.leaky_slope}};
}

model::ModelConfig model_config_from(const json &j) {
  model::ModelConfig m;
  m.num_vars = j.at("num_vars");
  m.in_channels = j.at("in_channels");
  m.embed = j.at("embed");
  m.var_embed = j.at("var_embed");
  m.layers = j.at("layers");
  m.history = j.at("history");
  m.horizon = j.at("horizon");
  m.decoder_hidden = j.at("decoder_hidden");
  m.dropout = j.at("dropout");
  m.ln_eps = j.at("ln_eps");
  m.use_ia = j.at("use_ia");
  m.use_pg = j.at("use_pg");
  m.use_ag = j.at("use_ag");
  m.sigmoid_gates = j.at("sigmoid_gates");
  m.ia.k = j.at("ia_k");
  m.ia.pairwise_scores = j.at("ia_pairwise_scores");
  m.ia.correspondence_weighted = j.at("ia_correspondence_weighted");
  m.ia.leaky_slope = j.at("ia_leaky_slope");
  return m;
}

json matrix_json(const Matrix &m) {
  std::vector<double> flat(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      flat[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

Matrix matrix_from(const json &j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto flat = j.at("data").get<std::vector<double>>();
  require(flat.size() == static_cast<std::size_t>(rows * cols), ErrorCode::kDataFormat,
          "checkpoint: matrix size mismatch");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j2 = 0; j2 < cols; ++j2)
      m(i, j2) = flat[static_cast<std::size_t>(i * cols + j2)];
  return m;
}

void write_run_files(const fs::path &dir, const TrainedRun &run, const SeedContext &ctx,
                     const LoadedData &data, const config::ExperimentConfig &cfg) {
  fs::create_directories(dir);
  write_text((dir / "history.csv").string(), train::history_csv(run.result.fit.history));
  if (const auto *g = dynamic_cast<const model::GinAR<float> *>(run.model.get()))
    write_text((dir / "checkpoint.json").string(), checkpoint_json(*g, cfg, ctx));
  const std::size_t window = std::min(cfg.snapshot_index, ctx.test.windows() - 1);
  const std::size_t step = std::min(cfg.snapshot_horizon, ctx.test.horizon - 1);
  const auto rows = spatial_snapshot(ctx, data, run.test_pred, window, step);
  write_text((dir / "snapshot.csv").string(), snapshot_csv(rows));
  const std::string svg = snapshot_svg(rows);
  if (!svg.empty())
    write_text((dir / "snapshot.svg").string(), svg);
}

} // namespace

void write_text(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    fail(ErrorCode::kIo, "cannot write " + path);
  out << text;
}

// ---------------------------------------------------------------- data

LoadedData load_data(const config::ExperimentConfig &cfg) {
  LoadedData out;
  const auto &spec = cfg.dataset;
  if (spec.synth) {
    auto synth = data::synth_generate(spec.synth->vars, spec.synth->steps, spec.synth->graph_seed,
                                      spec.synth->noise);
    out.dataset = std::move(synth.dataset);
    out.adjacency = std::move(synth.adjacency);
  } else {
    out.dataset = data::load_dataset(spec.path);
    const auto n = static_cast<Eigen::Index>(out.dataset.vars());
    if (!spec.distances.empty()) {
      Matrix d = data::load_matrix_csv(spec.distances, false);
      require(d.rows() == n && d.cols() == n, ErrorCode::kDataFormat,
              "distance table must be N x N");
      out.dataset.distances = std::move(d);
    }
    if (!spec.coords.empty()) {
      Matrix c = data::load_matrix_csv(spec.coords, false);
      require(c.rows() == n && c.cols() == 2, ErrorCode::kDataFormat, "coordinates must be N x 2");
      out.dataset.coords = std::move(c);
    }
    if (!spec.adjacency.empty()) {
      Matrix a = graph::load_adjacency_csv(spec.adjacency);
      require(a.rows() == n, ErrorCode::kDataFormat, "adjacency must be N x N");
      out.adjacency = std::move(a);
    }
  }
  out.dataset.granularity = spec.granularity;
  return out;
}

Matrix predefined_adjacency(const config::ExperimentConfig &cfg, const LoadedData &data,
                            const data::Range &train, const data::MaskSpec &mask) {
  const auto n = static_cast<Eigen::Index>(data.dataset.vars());
  std::string kind = cfg.graph.kind;
  if (kind == "auto")
    kind = data.dataset.distances ? "distance" : "pearson";
  if (kind == "identity")
    return Matrix::Zero(n, n);
  if (kind == "file") {
    require(data.adjacency.has_value(), ErrorCode::kInvalidArgument, "no adjacency file loaded");
    return *data.adjacency;
  }
  if (kind == "distance") {
    require(data.dataset.distances.has_value(), ErrorCode::kInvalidArgument,
            "graph kind 'distance' needs a distance table");
    const Matrix &d = *data.dataset.distances;
    const double sigma = cfg.graph.sigma > 0 ? cfg.graph.sigma : offdiag_std(d);
    // Default cut keeps kernel weights of at least 0.1.
    const double threshold =
        cfg.graph.threshold > 0 ? cfg.graph.threshold : sigma * std::sqrt(std::log(10.0));
    return graph::build_adjacency_distance(d, threshold, sigma);
  }
  const double threshold = cfg.graph.threshold > 0 ? cfg.graph.threshold : 0.1;
  const Matrix series = data.dataset.values.middleCols(static_cast<Eigen::Index>(train.begin),
                                                       static_cast<Eigen::Index>(train.size()));
  return graph::build_adjacency_pearson(series, threshold, mask.indices);
}

SeedContext prepare_seed(const config::ExperimentConfig &cfg, const LoadedData &data, double rate,
                         std::uint64_t seed) {
  const auto &ds = data.dataset;
  SeedContext ctx;
  ctx.rate = rate;
  ctx.seed = seed;
  ctx.splits = data::split(ds.steps(), cfg.split, cfg.history + cfg.horizon);
  std::string warning;
  ctx.mask = data::gen_mask(ds.vars(), rate, seed, &warning);
  if (!warning.empty())
    ctx.warnings.push_back(warning);
  ctx.missing = ctx.mask.flags(ds.vars());
  const Matrix train_values = ds.values.middleCols(static_cast<Eigen::Index>(ctx.splits.train.begin),
                                                   static_cast<Eigen::Index>(ctx.splits.train.size()));
  ctx.norm = data::Normalizer::fit(train_values, ctx.missing, &ctx.warnings);
  const Matrix normalized = ctx.norm.apply(ds.values);
  ctx.train = data::prepare_split(normalized, ds.values, ctx.splits.train, cfg.history, cfg.horizon,
                                  cfg.stride, ctx.mask, cfg.channels);
  ctx.val = data::prepare_split(normalized, ds.values, ctx.splits.val, cfg.history, cfg.horizon, 1,
                                ctx.mask, cfg.channels);
  ctx.test = data::prepare_split(normalized, ds.values, ctx.splits.test, cfg.history, cfg.horizon, 1,
                                 ctx.mask, cfg.channels);
  ctx.a_pre = graph::normalize_predefined(predefined_adjacency(cfg, data, ctx.splits.train, ctx.mask));
  return ctx;
}

model::ModelConfig model_config(const config::ExperimentConfig &cfg, double rate, std::size_t vars,
                                std::size_t channels) {
  const auto defaults = config::rate_defaults(rate);
  model::ModelConfig m;
  m.num_vars = vars;
  m.in_channels = channels;
  m.embed = cfg.model.embed.value_or(defaults.embed);
  m.var_embed = cfg.model.var_embed.value_or(defaults.var_embed);
  m.layers = cfg.model.layers.value_or(defaults.layers);
  m.history = cfg.history;
  m.horizon = cfg.horizon;
  m.decoder_hidden = cfg.model.decoder_hidden;
  m.dropout = cfg.model.dropout;
  m.use_ia = cfg.ablation.ia;
  m.use_pg = cfg.ablation.pg;
  m.use_ag = cfg.ablation.ag;
  m.sigmoid_gates = cfg.model.sigmoid_gates;
  m.ia = cfg.ia;
  return m;
}

// ---------------------------------------------------------------- training

TrainedRun train_variant(const config::ExperimentConfig &cfg, const SeedContext &ctx,
                         Variant variant, const Log &log) {
  const std::size_t n = ctx.train.vars;
  TrainedRun run;
  switch (variant) {
  case Variant::kGinAR: {
    auto g = std::make_unique<model::GinAR<float>>(model_config(cfg, ctx.rate, n, ctx.train.channels),
                                                   ctx.seed);
    g->set_predefined_graph(ctx.a_pre);
    g->set_missing(ctx.missing);
    run.model = std::move(g);
    break;
  }
  case Variant::kMlp:
    run.model = std::make_unique<model::MlpForecaster<float>>(n, cfg.history, ctx.train.channels,
                                                              cfg.baseline.hidden, cfg.horizon, ctx.seed);
    break;
  case Variant::kIaMlp: {
    auto m = std::make_unique<model::IaMlpForecaster<float>>(
        n, cfg.history, ctx.train.channels, cfg.baseline.ia_width, cfg.baseline.var_embed,
        cfg.baseline.hidden, cfg.horizon, cfg.ia, ctx.seed);
    m->set_missing(ctx.missing);
    run.model = std::move(m);
    break;
  }
  }
  train::TrainConfig tc = cfg.train;
  tc.seed = ctx.seed;
  const train::TrainData td{&ctx.train, &ctx.val, &ctx.norm, ctx.missing};
  const std::string tag = run.model->kind() + " seed " + std::to_string(ctx.seed);
  run.result.fit = train::fit<float>(*run.model, td, tc, [&](const train::EpochRecord &r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s epoch %zu lr %.3g loss %.5f val_mae %.5f", tag.c_str(), r.epoch,
                  r.lr, r.train_loss, r.val.mae);
    log_line(log, buf);
  });
  run.test_pred = train::predict<float>(*run.model, ctx.test, ctx.norm);
  run.result.seed = ctx.seed;
  run.result.mask = ctx.mask;
  run.result.test = metrics::evaluate(run.test_pred, ctx.test.y, ctx.test.windows(), ctx.test.vars,
                                      ctx.test.horizon, ctx.missing);
  return run;
}

// ---------------------------------------------------------------- reports

MetricsReport aggregate(std::string variant, std::vector<SeedResult> seeds) {
  MetricsReport r;
  r.variant = std::move(variant);
  r.seeds = std::move(seeds);
  std::vector<metrics::Scores> overall, masked, normal;
  for (const auto &s : r.seeds) {
    overall.push_back(s.test.overall);
    masked.push_back(s.test.masked);
    normal.push_back(s.test.normal);
  }
  r.mean = metrics::mean_scores(overall);
  r.std = metrics::std_scores(overall);
  r.masked_mean = metrics::mean_scores(masked);
  r.normal_mean = metrics::mean_scores(normal);
  if (!r.seeds.empty()) {
    for (std::size_t h = 0; h < r.seeds.front().test.horizons.size(); ++h) {
      std::vector<metrics::Scores> per;
      for (const auto &s : r.seeds)
        per.push_back(s.test.horizons[h]);
      r.horizon_mean.push_back(metrics::mean_scores(per));
    }
  }
  return r;
}

std::string report_csv(const MetricsReport &report) {
  std::ostringstream out;
  out << "seed,mae,rmse,mape,masked_mae,normal_mae,best_epoch\n";
  for (const auto &s : report.seeds)
    out << s.seed << ',' << fmt(s.test.overall.mae) << ',' << fmt(s.test.overall.rmse) << ','
        << fmt(s.test.overall.mape) << ',' << fmt(s.test.masked.mae) << ','
        << fmt(s.test.normal.mae) << ',' << s.fit.best_epoch << '\n';
  out << "mean," << fmt(report.mean.mae) << ',' << fmt(report.mean.rmse) << ','
      << fmt(report.mean.mape) << ',' << fmt(report.masked_mean.mae) << ','
      << fmt(report.normal_mean.mae) << ",\n";
  return out.str();
}

std::string report_json(const MetricsReport &report, const config::ExperimentConfig &cfg) {
  json j;
  j["config"] = json::parse(config::to_json(cfg));
  j["config_hash"] = config::config_hash(cfg);
  j["variant"] = report.variant;
  json seeds = json::array();
  for (const auto &s : report.seeds) {
    json horizons = json::array();
    for (const auto &h : s.test.horizons)
      horizons.push_back(scores_json(h));
    json vars = json::array();
    for (const double v : s.test.variable_mae)
      vars.push_back(number(v));
    seeds.push_back({{"seed", s.seed},
                     {"mask", json::parse(s.mask.to_json())},
                     {"overall", scores_json(s.test.overall)},
                     {"masked", scores_json(s.test.masked)},
                     {"normal", scores_json(s.test.normal)},
                     {"horizons", horizons},
                     {"variable_mae", vars},
                     {"best_epoch", s.fit.best_epoch},
                     {"best_val_mae", number(s.fit.best_val_mae)}});
  }
  j["seeds"] = seeds;
  j["mean"] = scores_json(report.mean);
  j["std"] = scores_json(report.std);
  j["masked_mean"] = scores_json(report.masked_mean);
  j["normal_mean"] = scores_json(report.normal_mean);
  json horizons = json::array();
  for (const auto &h : report.horizon_mean)
    horizons.push_back(scores_json(h));
  j["horizon_mean"] = horizons;
  return j.dump(2) + "\n";
}

MetricsReport run_experiment(const config::ExperimentConfig &cfg, const Log &log) {
  cfg.validate();
  const LoadedData data = load_data(cfg);
  std::vector<SeedResult> results;
  const fs::path out_dir = cfg.output;
  for (std::size_t k = 0; k < cfg.seeds.size(); ++k) {
    const SeedContext ctx = prepare_seed(cfg, data, cfg.missing_rate, cfg.seeds[k]);
    for (const auto &w : ctx.warnings)
      log_line(log, "warning: " + w);
    TrainedRun run = train_variant(cfg, ctx, Variant::kGinAR, log);
    if (!cfg.output.empty()) {
      write_run_files(out_dir / ("seed_" + std::to_string(ctx.seed)), run, ctx, data, cfg);
      if (k == 0)
        write_run_files(out_dir, run, ctx, data, cfg);
    }
    results.push_back(std::move(run.result));
  }
  MetricsReport report = aggregate(variant_name(cfg.ablation), std::move(results));
  if (!cfg.output.empty()) {
    write_text((out_dir / "report.csv").string(), report_csv(report));
    write_text((out_dir / "report.json").string(), report_json(report, cfg));
  }
  return report;
}

std::vector<MetricsReport> run_ablation(const config::ExperimentConfig &cfg, const Log &log) {
  cfg.validate();
  struct Named {
    const char *dir;
    config::Ablation flags;
  };
  const Named variants[] = {{"full", {true, true, true}},
                            {"no_ia", {false, true, true}},
                            {"no_pg", {true, false, true}},
                            {"no_ag", {true, true, false}}};
  std::vector<MetricsReport> reports;
  for (const auto &v : variants) {
    config::ExperimentConfig c = cfg;
    c.ablation = v.flags;
    c.output = cfg.output.empty() ? "" : (fs::path(cfg.output) / v.dir).string();
    log_line(log, std::string("variant ") + variant_name(v.flags));
    reports.push_back(run_experiment(c, log));
  }
  if (!cfg.output.empty())
    write_text((fs::path(cfg.output) / "ablation.csv").string(), ablation_csv(reports));
  return reports;
}

std::string ablation_csv(const std::vector<MetricsReport> &reports) {
  std::ostringstream out;
  out << "variant,mae,rmse,mape,mae_std,masked_mae,normal_mae\n";
  for (const auto &r : reports)
    out << r.variant << ',' << fmt(r.mean.mae) << ',' << fmt(r.mean.rmse) << ',' << fmt(r.mean.mape)
        << ',' << fmt(r.std.mae) << ',' << fmt(r.masked_mean.mae) << ',' << fmt(r.normal_mean.mae)
        << '\n';
  return out.str();
}

std::vector<ImputeRow> run_impute_eval(const config::ExperimentConfig &cfg, const Log &log) {
  cfg.validate();
  const LoadedData data = load_data(cfg);
  const std::vector<double> rates = cfg.rates.empty() ? std::vector<double>{cfg.missing_rate} : cfg.rates;
  std::vector<ImputeRow> rows;
  for (const double rate : rates) {
    std::vector<SeedResult> zero_fill, ia;
    for (const std::uint64_t seed : cfg.seeds) {
      const SeedContext ctx = prepare_seed(cfg, data, rate, seed);
      zero_fill.push_back(train_variant(cfg, ctx, Variant::kMlp, log).result);
      ia.push_back(train_variant(cfg, ctx, Variant::kIaMlp, log).result);
    }
    rows.push_back({rate, aggregate("zero-fill", std::move(zero_fill)), aggregate("IA", std::move(ia))});
  }
  if (!cfg.output.empty()) {
    fs::create_directories(cfg.output);
    write_text((fs::path(cfg.output) / "impute.csv").string(), impute_csv(rows));
    json j;
    j["config"] = json::parse(config::to_json(cfg));
    j["config_hash"] = config::config_hash(cfg);
    json table = json::array();
    for (const auto &r : rows)
      table.push_back({{"rate", r.rate},
                       {"zero-fill", json::parse(report_json(r.zero_fill, cfg)).at("mean")},
                       {"IA", json::parse(report_json(r.ia, cfg)).at("mean")}});
    j["table"] = table;
    write_text((fs::path(cfg.output) / "impute.json").string(), j.dump(2) + "\n");
  }
  return rows;
}

std::string impute_csv(const std::vector<ImputeRow> &rows) {
  std::ostringstream out;
  out << "rate,seed,zero-fill,IA\n";
  for (const auto &r : rows) {
    for (std::size_t k = 0; k < r.zero_fill.seeds.size(); ++k)
      out << fmt(r.rate) << ',' << r.zero_fill.seeds[k].seed << ','
          << fmt(r.zero_fill.seeds[k].test.overall.mae) << ',' << fmt(r.ia.seeds[k].test.overall.mae)
          << '\n';
    out << fmt(r.rate) << ",mean," << fmt(r.zero_fill.mean.mae) << ',' << fmt(r.ia.mean.mae) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------- snapshot

std::vector<SnapshotRow> spatial_snapshot(const SeedContext &ctx, const LoadedData &data,
                                          std::span<const double> test_pred, std::size_t window,
                                          std::size_t step) {
  const auto &t = ctx.test;
  require(window < t.windows(), ErrorCode::kInvalidArgument, "snapshot window out of range");
  require(step < t.horizon, ErrorCode::kInvalidArgument, "snapshot step out of range");
  require(test_pred.size() == t.y.size(), ErrorCode::kShapeMismatch,
          "snapshot: prediction size does not match the test split");
  std::vector<SnapshotRow> rows;
  const auto &coords = data.dataset.coords;
  for (std::size_t i = 0; i < t.vars; ++i) {
    SnapshotRow r;
    r.var = i;
    if (coords) {
      r.x = (*coords)(static_cast<Eigen::Index>(i), 0);
      r.y = (*coords)(static_cast<Eigen::Index>(i), 1);
    }
    const double last = t.x[((window * t.vars + i) * t.history + t.history - 1) * t.channels];
    r.input = last * ctx.norm.std[i] + ctx.norm.mean[i];
    const std::size_t k = (window * t.vars + i) * t.horizon + step;
    r.pred = test_pred[k];
    r.truth = t.y[k];
    r.masked = ctx.missing[i] != 0;
    rows.push_back(r);
  }
  return rows;
}

std::string snapshot_csv(const std::vector<SnapshotRow> &rows) {
  std::ostringstream out;
  out << "var,x,y,input,pred,true,masked\n";
  char buf[256];
  for (const auto &r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%s,%s,%.17g,%.17g,%.17g,%d\n", r.var,
                  r.x ? fmt(*r.x).c_str() : "", r.y ? fmt(*r.y).c_str() : "", r.input, r.pred,
                  r.truth, r.masked ? 1 : 0);
    out << buf;
  }
  return out.str();
}

std::string snapshot_svg(const std::vector<SnapshotRow> &rows) {
  if (rows.empty() || !rows.front().x)
    return {};
  double x0 = *rows[0].x, x1 = x0, y0 = *rows[0].y, y1 = y0;
  double lo = rows[0].pred, hi = lo;
  for (const auto &r : rows) {
    x0 = std::min(x0, *r.x);
    x1 = std::max(x1, *r.x);
    y0 = std::min(y0, *r.y);
    y1 = std::max(y1, *r.y);
    lo = std::min({lo, r.pred, r.truth});
    hi = std::max({hi, r.pred, r.truth});
  }
  const double size = 400, pad = 20;
  auto px = [&](double v, double a, double b) { return pad + (b > a ? (v - a) / (b - a) : 0.5) * (size - 2 * pad); };
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
      << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  char buf[256];
  for (const auto &r : rows) {
    const double u = hi > lo ? (r.pred - lo) / (hi - lo) : 0.5;
    const int red = static_cast<int>(std::lround(255 * u));
    const int blue = 255 - red;
    std::snprintf(buf, sizeof buf,
                  "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"7\" fill=\"rgb(%d,64,%d)\" stroke=\"%s\" "
                  "stroke-width=\"%d\"><title>var %zu pred %.4g true %.4g%s</title></circle>\n",
                  px(*r.x, x0, x1), size - px(*r.y, y0, y1), red, blue, r.masked ? "black" : "none",
                  r.masked ? 3 : 0, r.var, r.pred, r.truth, r.masked ? " (masked)" : "");
    out << buf;
  }
  out << "</svg>\n";
  return out.str();
}

// ---------------------------------------------------------------- checkpoints

std::string checkpoint_json(const model::GinAR<float> &model, const config::ExperimentConfig &cfg,
                            const SeedContext &ctx) {
  json j;
  j["format"] = "ginar-checkpoint";
  j["version"] = 1;
  j["experiment"] = json::parse(config::to_json(cfg));
  j["rate"] = ctx.rate;
  j["seed"] = ctx.seed;
  j["model"] = model_config_json(model.config());
  j["mask"] = json::parse(ctx.mask.to_json());
  j["normalizer"] = {{"mean", ctx.norm.mean}, {"std", ctx.norm.std}};
  j["a_pre"] = matrix_json(ctx.a_pre);
  json params = json::object();
  for (const auto &[name, p] : model.parameters())
    params[name] = {{"shape", p.shape()}, {"data", std::vector<float>(p.data().begin(), p.data().end())}};
  j["params"] = params;
  return j.dump() + "\n";
}

Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    fail(ErrorCode::kIo, "cannot open checkpoint " + path);
  Checkpoint ck;
  try {
    const json j = json::parse(in);
    if (j.value("format", "") != "ginar-checkpoint" || j.value("version", 0) != 1)
      fail(ErrorCode::kDataFormat, path + ": not a version-1 checkpoint");
    ck.cfg = config::parse(j.at("experiment").dump());
    ck.rate = j.at("rate");
    ck.seed = j.at("seed");
    ck.mask = data::MaskSpec::from_json(j.at("mask").dump());
    ck.norm.mean = j.at("normalizer").at("mean").get<std::vector<double>>();
    ck.norm.std = j.at("normalizer").at("std").get<std::vector<double>>();
    ck.a_pre = matrix_from(j.at("a_pre"));
    const auto mc = model_config_from(j.at("model"));
    ck.model = std::make_unique<model::GinAR<float>>(mc, ck.seed);
    ck.model->set_predefined_graph(ck.a_pre);
    ck.model->set_missing(ck.mask.flags(mc.num_vars));
    const auto &params = j.at("params");
    for (auto &[name, p] : ck.model->parameters()) {
      if (!params.contains(name))
        fail(ErrorCode::kDataFormat, path + ": missing parameter " + name);
      const auto shape = params.at(name).at("shape").get<ad::Shape>();
      const auto values = params.at(name).at("data").get<std::vector<float>>();
      if (shape != p.shape() || values.size() != p.size())
        fail(ErrorCode::kDataFormat, path + ": shape mismatch for " + name);
      auto tensor = p;
      std::copy(values.begin(), values.end(), tensor.mutable_data().begin());
    }
  } catch (const json::exception &e) {
    fail(ErrorCode::kDataFormat, path + ": " + e.what());
  }
  return ck;
}

MetricsReport run_eval(const config::ExperimentConfig &cfg, const std::string &checkpoint_path,
                       const Log &log) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  const LoadedData data = load_data(ck.cfg);
  SeedContext ctx = prepare_seed(ck.cfg, data, ck.rate, ck.seed);
  require(ctx.mask.indices == ck.mask.indices, ErrorCode::kState,
          "checkpoint mask does not match the regenerated mask");
  ctx.norm = ck.norm;
  log_line(log, "evaluating " + checkpoint_path);
  SeedResult r;
  r.seed = ck.seed;
  r.mask = ck.mask;
  const auto pred = train::predict<float>(*ck.model, ctx.test, ctx.norm);
  r.test = metrics::evaluate(pred, ctx.test.y, ctx.test.windows(), ctx.test.vars, ctx.test.horizon,
                             ctx.missing);
  MetricsReport report = aggregate(variant_name(ck.cfg.ablation), {r});
  if (!cfg.output.empty()) {
    fs::create_directories(cfg.output);
    write_text((fs::path(cfg.output) / "eval_report.csv").string(), report_csv(report));
    write_text((fs::path(cfg.output) / "eval_report.json").string(), report_json(report, ck.cfg));
  }
  return report;
}

} // namespace ginar::experiment
