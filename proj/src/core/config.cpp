// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

#include "core/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ginar::config {

using nlohmann::json;

namespace {

template <typename T> void read(const json &j, const char *key, T &out) {
  if (j.contains(key) && !j.at(key).is_null())
    out = j.at(key).get<T>();
}

template <typename T> void read_opt(const json &j, const char *key, std::optional<T> &out) {
  if (j.contains(key) && !j.at(key).is_null())
    out = j.at(key).get<T>();
}

template <typename T> json opt(const std::optional<T> &v) {
  return v ? json(*v) : json(nullptr);
}

void check_keys(const json &j, const char *where, std::initializer_list<const char *> keys) {
  if (!j.is_object())
    fail(ErrorCode::kInvalidArgument, std::string("config: '") + where + "' must be an object");
  for (const auto &[k, v] : j.items()) {
    bool known = false;
    for (const char *key : keys)
      known = known || k == key;
    if (!known)
      fail(ErrorCode::kInvalidArgument, std::string("config: unknown key '") + k + "' in " + where);
  }
}

} // namespace

void ExperimentConfig::validate() const {
  require(!seeds.empty(), ErrorCode::kInvalidArgument, "config: seeds must be non-empty");
  require(ablation.pg || ablation.ag, ErrorCode::kInvalidArgument,
          "config: the predefined and adaptive graphs cannot both be disabled");
  require(missing_rate >= 0 && missing_rate < 1, ErrorCode::kInvalidArgument,
          "config: missing_rate must lie in [0, 1)");
  for (const double r : rates)
    require(r >= 0 && r < 1, ErrorCode::kInvalidArgument, "config: rates must lie in [0, 1)");
  require(history > 0 && horizon > 0, ErrorCode::kInvalidArgument,
          "config: history and horizon must be positive");
  require(stride > 0, ErrorCode::kInvalidArgument, "config: stride must be positive");
  require(ia.k >= 1, ErrorCode::kInvalidArgument, "config: ia.k must be at least 1");
  require(model.dropout >= 0 && model.dropout < 1, ErrorCode::kInvalidArgument,
          "config: dropout must lie in [0, 1)");
  require(!dataset.path.empty() || dataset.synth.has_value(), ErrorCode::kInvalidArgument,
          "config: dataset.path or dataset.synth is required");
  const std::string &k = graph.kind;
  require(k == "auto" || k == "distance" || k == "pearson" || k == "file" || k == "identity",
          ErrorCode::kInvalidArgument, "config: unknown graph kind '" + k + "'");
  require(k != "file" || !dataset.adjacency.empty(), ErrorCode::kInvalidArgument,
          "config: graph kind 'file' needs dataset.adjacency");
  require(channels.steps_per_day > 0, ErrorCode::kInvalidArgument,
          "config: steps_per_day must be positive");
  train.validate();
}

ExperimentConfig parse(const std::string &json_text) {
  ExperimentConfig c;
  try {
    const json j = json::parse(json_text);
    check_keys(j, "root",
               {"dataset", "graph", "missing_rate", "rates", "seeds", "split", "history", "horizon",
                "stride", "train", "model", "ablation", "ia", "channels", "baseline", "output",
                "snapshot"});
    if (j.contains("dataset")) {
      const auto &d = j["dataset"];
      check_keys(d, "dataset", {"path", "distances", "coords", "adjacency", "granularity", "synth"});
      read(d, "path", c.dataset.path);
      read(d, "distances", c.dataset.distances);
      read(d, "coords", c.dataset.coords);
      read(d, "adjacency", c.dataset.adjacency);
      read(d, "granularity", c.dataset.granularity);
      if (d.contains("synth") && !d["synth"].is_null()) {
        const auto &s = d["synth"];
        check_keys(s, "dataset.synth", {"vars", "steps", "graph_seed", "noise"});
        SynthSpec spec;
        read(s, "vars", spec.vars);
        read(s, "steps", spec.steps);
        read(s, "graph_seed", spec.graph_seed);
        read(s, "noise", spec.noise);
        c.dataset.synth = spec;
      }
    }
    if (j.contains("graph")) {
      const auto &g = j["graph"];
      check_keys(g, "graph", {"kind", "threshold", "sigma"});
      read(g, "kind", c.graph.kind);
      read(g, "threshold", c.graph.threshold);
      read(g, "sigma", c.graph.sigma);
    }
    read(j, "missing_rate", c.missing_rate);
    read(j, "rates", c.rates);
    read(j, "seeds", c.seeds);
    read(j, "split", c.split);
    read(j, "history", c.history);
    read(j, "horizon", c.horizon);
    read(j, "stride", c.stride);
    if (j.contains("train")) {
      const auto &t = j["train"];
      check_keys(t, "train", {"lr", "milestones", "gamma", "clip_norm", "batch", "epochs"});
      read(t, "lr", c.train.lr0);
      read(t, "milestones", c.train.milestones);
      read(t, "gamma", c.train.gamma);
      read(t, "clip_norm", c.train.clip_norm);
      read(t, "batch", c.train.batch);
      read(t, "epochs", c.train.epochs);
    }
    if (j.contains("model")) {
      const auto &m = j["model"];
      check_keys(m, "model", {"embed", "var_embed", "layers", "decoder_hidden", "dropout", "sigmoid_gates"});
      read_opt(m, "embed", c.model.embed);
      read_opt(m, "var_embed", c.model.var_embed);
      read_opt(m, "layers", c.model.layers);
      read(m, "decoder_hidden", c.model.decoder_hidden);
      read(m, "dropout", c.model.dropout);
      read(m, "sigmoid_gates", c.model.sigmoid_gates);
    }
    if (j.contains("ablation")) {
      const auto &a = j["ablation"];
      check_keys(a, "ablation", {"ia", "pg", "ag"});
      read(a, "ia", c.ablation.ia);
      read(a, "pg", c.ablation.pg);
      read(a, "ag", c.ablation.ag);
    }
    if (j.contains("ia")) {
      const auto &a = j["ia"];
      check_keys(a, "ia", {"k", "pairwise_scores", "correspondence_weighted", "leaky_slope"});
      read(a, "k", c.ia.k);
      read(a, "pairwise_scores", c.ia.pairwise_scores);
      read(a, "correspondence_weighted", c.ia.correspondence_weighted);
      read(a, "leaky_slope", c.ia.leaky_slope);
    }
    if (j.contains("channels")) {
      const auto &ch = j["channels"];
      check_keys(ch, "channels", {"time_of_day", "steps_per_day"});
      read(ch, "time_of_day", c.channels.time_of_day);
      read(ch, "steps_per_day", c.channels.steps_per_day);
    }
    if (j.contains("baseline")) {
      const auto &b = j["baseline"];
      check_keys(b, "baseline", {"hidden", "ia_width", "var_embed"});
      read(b, "hidden", c.baseline.hidden);
      read(b, "ia_width", c.baseline.ia_width);
      read(b, "var_embed", c.baseline.var_embed);
    }
    read(j, "output", c.output);
    if (j.contains("snapshot")) {
      const auto &s = j["snapshot"];
      check_keys(s, "snapshot", {"index", "horizon"});
      read(s, "index", c.snapshot_index);
      read(s, "horizon", c.snapshot_horizon);
    }
  } catch (const json::exception &e) {
    fail(ErrorCode::kInvalidArgument, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    fail(ErrorCode::kIo, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string to_json(const ExperimentConfig &c) {
  json j;
  json d = {{"path", c.dataset.path},
            {"distances", c.dataset.distances},
            {"coords", c.dataset.coords},
            {"adjacency", c.dataset.adjacency},
            {"granularity", c.dataset.granularity},
            {"synth", nullptr}};
  if (c.dataset.synth)
    d["synth"] = {{"vars", c.dataset.synth->vars},
                  {"steps", c.dataset.synth->steps},
                  {"graph_seed", c.dataset.synth->graph_seed},
                  {"noise", c.dataset.synth->noise}};
  j["dataset"] = d;
  j["graph"] = {{"kind", c.graph.kind}, {"threshold", c.graph.threshold}, {"sigma", c.graph.sigma}};
  j["missing_rate"] = c.missing_rate;
  j["rates"] = c.rates;
  j["seeds"] = c.seeds;
  j["split"] = c.split;
  j["history"] = c.history;
  j["horizon"] = c.horizon;
  j["stride"] = c.stride;
  j["train"] = {{"lr", c.train.lr0},           {"milestones", c.train.milestones},
                {"gamma", c.train.gamma},      {"clip_norm", c.train.clip_norm},
                {"batch", c.train.batch},      {"epochs", c.train.epochs}};
  j["model"] = {{"embed", opt(c.model.embed)},
                {"var_embed", opt(c.model.var_embed)},
                {"layers", opt(c.model.layers)},
                {"decoder_hidden", c.model.decoder_hidden},
                {"dropout", c.model.dropout},
                {"sigmoid_gates", c.model.sigmoid_gates}};
  j["ablation"] = {{"ia", c.ablation.ia}, {"pg", c.ablation.pg}, {"ag", c.ablation.ag}};
  j["ia"] = {{"k", c.ia.k},
             {"pairwise_scores", c.ia.pairwise_scores},
             {"correspondence_weighted", c.ia.correspondence_weighted},
             {"leaky_slope", c.ia.leaky_slope}};
  j["channels"] = {{"time_of_day", c.channels.time_of_day},
                   {"steps_per_day", c.channels.steps_per_day}};
  j["baseline"] = {{"hidden", c.baseline.hidden},
                   {"ia_width", c.baseline.ia_width},
                   {"var_embed", c.baseline.var_embed}};
  j["output"] = c.output;
  j["snapshot"] = {{"index", c.snapshot_index}, {"horizon", c.snapshot_horizon}};
  return j.dump(2);
}

std::string config_hash(const ExperimentConfig &cfg) {
  // The output directory does not affect results.
  ExperimentConfig copy = cfg;
  copy.output.clear();
  const std::string text = to_json(copy);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RateDefaults rate_defaults(double rate) {
  static constexpr double kRates[] = {0.25, 0.5, 0.75, 0.9};
  static constexpr RateDefaults kColumns[] = {{32, 16, 2}, {32, 16, 2}, {16, 8, 3}, {16, 8, 3}};
  std::size_t best = 0;
  for (std::size_t k = 1; k < 4; ++k)
    if (std::abs(rate - kRates[k]) < std::abs(rate - kRates[best]))
      best = k;
  return kColumns[best];
}

} // namespace ginar::config
