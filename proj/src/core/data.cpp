// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

#include "core/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

namespace ginar::data {

namespace {

std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ','))
    cells.push_back(cell);
  if (!line.empty() && line.back() == ',')
    cells.emplace_back();
  for (auto &c : cells) {
    while (!c.empty() && (c.back() == '\r' || c.back() == ' '))
      c.pop_back();
    while (!c.empty() && c.front() == ' ')
      c.erase(c.begin());
  }
  return cells;
}

double parse_cell(const std::string &cell, const std::string &path, std::size_t line) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used == 0 || used != cell.size())
    fail(ErrorCode::kDataFormat, path + ":" + std::to_string(line) + ": non-numeric cell '" + cell + "'");
  if (!std::isfinite(v))
    fail(ErrorCode::kDataFormat, path + ":" + std::to_string(line) + ": non-finite value");
  return v;
}

bool blank(const std::string &line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

} // namespace

// ---------------------------------------------------------------- CSV

TimeSeriesDataset load_dataset(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    fail(ErrorCode::kIo, "cannot open dataset " + path);
  std::string line;
  std::size_t line_no = 0;
  TimeSeriesDataset ds;
  while (std::getline(in, line)) {
    ++line_no;
    if (!blank(line))
      break;
  }
  if (blank(line))
    fail(ErrorCode::kDataFormat, path + ": empty file");
  ds.ids = split_csv_line(line);
  const std::size_t n = ds.ids.size();
  if (n < 2)
    fail(ErrorCode::kDataFormat, path + ": need at least 2 variables (N<2)");

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line))
      continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != n)
      fail(ErrorCode::kDataFormat, path + ":" + std::to_string(line_no) + ": ragged row with " +
                                       std::to_string(cells.size()) + " cells, expected " +
                                       std::to_string(n));
    std::vector<double> row(n);
    for (std::size_t j = 0; j < n; ++j)
      row[j] = parse_cell(cells[j], path, line_no);
    rows.push_back(std::move(row));
  }
  if (rows.size() <= 24)
    fail(ErrorCode::kDataFormat, path + ": too short (" + std::to_string(rows.size()) +
                                     " time steps); at least 25 are required");
  ds.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t j = 0; j < n; ++j)
      ds.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(t)) = rows[t][j];
  return ds;
}

void save_dataset(const TimeSeriesDataset &ds, const std::string &path) {
  std::ofstream out(path);
  if (!out)
    fail(ErrorCode::kIo, "cannot write dataset " + path);
  const std::size_t n = ds.vars();
  for (std::size_t j = 0; j < n; ++j)
    out << (j ? "," : "") << (j < ds.ids.size() ? ds.ids[j] : "v" + std::to_string(j));
  out << '\n' << std::setprecision(17);
  for (Eigen::Index t = 0; t < ds.values.cols(); ++t) {
    for (Eigen::Index j = 0; j < ds.values.rows(); ++j)
      out << (j ? "," : "") << ds.values(j, t);
    out << '\n';
  }
}

Matrix load_matrix_csv(const std::string &path, bool header) {
  std::ifstream in(path);
  if (!in)
    fail(ErrorCode::kIo, "cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<double>> rows;
  bool skipped = !header;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line))
      continue;
    if (!skipped) {
      skipped = true;
      continue;
    }
    std::vector<double> row;
    for (const auto &cell : split_csv_line(line))
      row.push_back(parse_cell(cell, path, line_no));
    if (!rows.empty() && row.size() != rows.front().size())
      fail(ErrorCode::kDataFormat, path + ":" + std::to_string(line_no) + ": ragged row");
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.empty() ? 0 : rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void save_matrix_csv(const Matrix &m, const std::string &path, const std::vector<std::string> &header) {
  std::ofstream out(path);
  if (!out)
    fail(ErrorCode::kIo, "cannot write " + path);
  if (!header.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j)
      out << (j ? "," : "") << header[j];
    out << '\n';
  }
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

// ---------------------------------------------------------------- splitting

Splits split(std::size_t steps, std::array<double, 3> ratios, std::size_t min_length) {
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9 || *std::min_element(ratios.begin(), ratios.end()) < 0)
    fail(ErrorCode::kInvalidArgument, "split ratios must be nonnegative and sum to 1");
  Splits s;
  const auto train_end = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(steps)));
  const auto val_end =
      static_cast<std::size_t>(std::llround((ratios[0] + ratios[1]) * static_cast<double>(steps)));
  s.train = {0, train_end};
  s.val = {train_end, val_end};
  s.test = {val_end, steps};
  const std::pair<const char *, Range> named[] = {{"train", s.train}, {"validation", s.val}, {"test", s.test}};
  for (const auto &[name, r] : named) {
    if (r.size() < min_length)
      fail(ErrorCode::kInvalidArgument,
           std::string(name) + " split holds " + std::to_string(r.size()) +
               " steps, fewer than history+horizon = " + std::to_string(min_length));
  }
  return s;
}

// ---------------------------------------------------------------- masking

std::vector<std::uint8_t> MaskSpec::flags(std::size_t n) const {
  std::vector<std::uint8_t> out(n, 0);
  for (const std::size_t i : indices) {
    require(i < n, ErrorCode::kInvalidArgument, "mask index out of range");
    out[i] = 1;
  }
  return out;
}

std::string MaskSpec::to_json() const {
  nlohmann::json j;
  j["rate"] = rate;
  j["seed"] = seed;
  j["indices"] = indices;
  return j.dump();
}

MaskSpec MaskSpec::from_json(const std::string &text) {
  try {
    const auto j = nlohmann::json::parse(text);
    MaskSpec m;
    m.rate = j.at("rate").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.indices = j.at("indices").get<std::vector<std::size_t>>();
    std::sort(m.indices.begin(), m.indices.end());
    return m;
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorCode::kDataFormat, std::string("invalid mask JSON: ") + e.what());
  }
}

MaskSpec gen_mask(std::size_t n, double rate, std::uint64_t seed, std::string *warning) {
  if (!(rate >= 0.0 && rate < 1.0))
    fail(ErrorCode::kInvalidArgument, "missing rate must lie in [0, 1)");
  require(n >= 1, ErrorCode::kInvalidArgument, "mask needs at least one variable");
  auto count = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  if (count >= n) {
    count = n - 1;
    if (warning)
      *warning = "missing rate " + std::to_string(rate) + " rounds to all " + std::to_string(n) +
                 " variables; clamped to " + std::to_string(count);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  MaskSpec m;
  m.rate = rate;
  m.seed = seed;
  m.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(m.indices.begin(), m.indices.end());
  return m;
}

// ---------------------------------------------------------------- normalization

Normalizer Normalizer::fit(const Matrix &train_values, std::span<const std::uint8_t> missing,
                           std::vector<std::string> *warnings) {
  const auto n = static_cast<std::size_t>(train_values.rows());
  require(missing.empty() || missing.size() == n, ErrorCode::kShapeMismatch,
          "normalizer mask length differs from N");
  require(train_values.cols() > 0, ErrorCode::kInvalidArgument, "normalizer needs training data");
  Normalizer norm;
  norm.mean.assign(n, 0.0);
  norm.std.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!missing.empty() && missing[i])
      continue;
    const auto row = train_values.row(static_cast<Eigen::Index>(i));
    const double mu = row.mean();
    const double var = (row.array() - mu).square().mean();
    norm.mean[i] = mu;
    if (var > 0) {
      norm.std[i] = std::sqrt(var);
    } else if (warnings) {
      warnings->push_back("variable " + std::to_string(i) + " is constant on the training split; std set to 1");
    }
  }
  return norm;
}

Matrix Normalizer::apply(const Matrix &values) const {
  require(static_cast<std::size_t>(values.rows()) == mean.size(), ErrorCode::kShapeMismatch,
          "normalizer fitted for a different variable count");
  Matrix out = values;
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    out.row(i) = (out.row(i).array() - mean[static_cast<std::size_t>(i)]) / std[static_cast<std::size_t>(i)];
  return out;
}

Matrix Normalizer::invert(const Matrix &values) const {
  require(static_cast<std::size_t>(values.rows()) == mean.size(), ErrorCode::kShapeMismatch,
          "normalizer fitted for a different variable count");
  Matrix out = values;
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    out.row(i) = out.row(i).array() * std[static_cast<std::size_t>(i)] + mean[static_cast<std::size_t>(i)];
  return out;
}

// ---------------------------------------------------------------- windows

std::vector<Window> make_windows(const Matrix &values, std::size_t history, std::size_t horizon,
                                 std::size_t stride) {
  require(stride >= 1, ErrorCode::kInvalidArgument, "window stride must be positive");
  const auto steps = static_cast<std::size_t>(values.cols());
  std::vector<Window> out;
  if (steps < history + horizon)
    return out;
  const auto H = static_cast<Eigen::Index>(history), L = static_cast<Eigen::Index>(horizon);
  for (std::size_t t = 0; t + history + horizon <= steps; t += stride) {
    const auto s = static_cast<Eigen::Index>(t);
    out.push_back({t, values.middleCols(s, H), values.middleCols(s + H, L)});
  }
  return out;
}

void apply_mask(std::vector<Window> &windows, const MaskSpec &mask) {
  for (auto &w : windows)
    for (const std::size_t i : mask.indices) {
      require(i < static_cast<std::size_t>(w.x.rows()), ErrorCode::kInvalidArgument,
              "mask index out of range");
      w.x.row(static_cast<Eigen::Index>(i)).setZero();
    }
}

PreparedSplit prepare_split(const Matrix &normalized, const Matrix &raw, Range range,
                            std::size_t history, std::size_t horizon, std::size_t stride,
                            const MaskSpec &mask, const ChannelOptions &channels) {
  require(normalized.rows() == raw.rows() && normalized.cols() == raw.cols(),
          ErrorCode::kShapeMismatch, "normalized and raw values differ in shape");
  require(range.end <= static_cast<std::size_t>(raw.cols()) && range.begin <= range.end,
          ErrorCode::kInvalidArgument, "split range outside the series");
  PreparedSplit p;
  p.vars = static_cast<std::size_t>(raw.rows());
  p.history = history;
  p.horizon = horizon;
  p.channels = channels.time_of_day ? 2 : 1;
  const std::vector<std::uint8_t> missing = mask.flags(p.vars);

  const auto seg_x = normalized.middleCols(static_cast<Eigen::Index>(range.begin),
                                           static_cast<Eigen::Index>(range.size()));
  const auto seg_y = raw.middleCols(static_cast<Eigen::Index>(range.begin),
                                    static_cast<Eigen::Index>(range.size()));
  auto windows = make_windows(Matrix(seg_x), history, horizon, stride);
  apply_mask(windows, mask);
  const std::size_t N = p.vars, H = history, L = horizon, C = p.channels;
  p.x.assign(windows.size() * N * H * C, 0.0);
  p.y.assign(windows.size() * N * L, 0.0);
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const std::size_t start = windows[w].start;
    p.starts.push_back(range.begin + start);
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t h = 0; h < H; ++h) {
        const std::size_t base = ((w * N + i) * H + h) * C;
        p.x[base] = windows[w].x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(h));
        if (C == 2 && !missing[i]) {
          const std::size_t step = range.begin + start + h;
          p.x[base + 1] = static_cast<double>(step % channels.steps_per_day) /
                          static_cast<double>(channels.steps_per_day);
        }
      }
      for (std::size_t l = 0; l < L; ++l)
        p.y[(w * N + i) * L + l] =
            seg_y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(start + H + l));
    }
  }
  return p;
}

model::InputBatch PreparedSplit::inputs(std::span<const std::size_t> ids) const {
  model::InputBatch b;
  b.batch = ids.size();
  b.vars = vars;
  b.history = history;
  b.channels = channels;
  const std::size_t stride = vars * history * channels;
  b.x.resize(ids.size() * stride);
  for (std::size_t k = 0; k < ids.size(); ++k)
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(ids[k] * stride), stride,
                b.x.begin() + static_cast<std::ptrdiff_t>(k * stride));
  return b;
}

std::vector<double> PreparedSplit::targets(std::span<const std::size_t> ids) const {
  const std::size_t stride = vars * horizon;
  std::vector<double> out(ids.size() * stride);
  for (std::size_t k = 0; k < ids.size(); ++k)
    std::copy_n(y.begin() + static_cast<std::ptrdiff_t>(ids[k] * stride), stride,
                out.begin() + static_cast<std::ptrdiff_t>(k * stride));
  return out;
}

// ---------------------------------------------------------------- synthetic data

SynthResult synth_generate(std::size_t n, std::size_t steps, std::uint64_t graph_seed, double noise) {
  if (n < 4)
    fail(ErrorCode::kInvalidArgument, "synthetic data needs N >= 4");
  require(noise >= 0, ErrorCode::kInvalidArgument, "noise level must be nonnegative");
  std::mt19937_64 rng(graph_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Matrix coords(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    coords(i, 0) = unit(rng);
    coords(i, 1) = unit(rng);
  }
  const auto N = static_cast<Eigen::Index>(n);
  Matrix dist(N, N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < N; ++j)
      dist(i, j) = (coords.row(i) - coords.row(j)).norm();

  // Random geometric graph; every node also links to its nearest neighbor.
  const double radius = std::sqrt(4.0 / (3.14159265358979 * static_cast<double>(n)));
  const double sigma = radius / 1.5;
  Matrix adj = Matrix::Zero(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    Eigen::Index nearest = -1;
    for (Eigen::Index j = 0; j < N; ++j) {
      if (i == j)
        continue;
      if (nearest < 0 || dist(i, j) < dist(i, nearest))
        nearest = j;
      if (dist(i, j) < radius)
        adj(i, j) = std::exp(-dist(i, j) * dist(i, j) / (sigma * sigma));
    }
    const double w = std::exp(-dist(i, nearest) * dist(i, nearest) / (sigma * sigma));
    adj(i, nearest) = adj(nearest, i) = w;
  }
  Matrix transition = adj;
  for (Eigen::Index i = 0; i < N; ++i)
    transition.row(i) /= transition.row(i).sum();

  // Drivers: periodic sources with spatially smooth loadings plus a shared
  // AR(1) component.
  constexpr int kSources = 3;
  double period[kSources], phase[kSources];
  Eigen::Vector2d center[kSources];
  for (int k = 0; k < kSources; ++k) {
    period[k] = 24.0 + 72.0 * unit(rng);
    phase[k] = 6.283185307179586 * unit(rng);
    center[k] = {unit(rng), unit(rng)};
  }
  Matrix loading(N, kSources);
  for (Eigen::Index i = 0; i < N; ++i)
    for (int k = 0; k < kSources; ++k)
      loading(i, k) = std::exp(-(coords.row(i).transpose() - center[k]).squaredNorm() / (2 * 0.35 * 0.35));
  Eigen::VectorXd ar_loading(N);
  for (Eigen::Index i = 0; i < N; ++i)
    ar_loading(i) = 0.5 + 0.5 * coords(i, 0);

  constexpr double kMix = 0.5;   // weight of the local driver per step
  constexpr double kArPhi = 0.95;
  constexpr double kArSd = 0.05;
  Matrix values(N, static_cast<Eigen::Index>(steps));
  Eigen::VectorXd state = Eigen::VectorXd::Zero(N);
  double ar = 0.0;
  const std::size_t burn_in = 200;
  for (std::size_t t = 0; t < steps + burn_in; ++t) {
    ar = kArPhi * ar + kArSd * gauss(rng);
    Eigen::VectorXd drive(N);
    for (Eigen::Index i = 0; i < N; ++i) {
      double v = ar_loading(i) * ar;
      for (int k = 0; k < kSources; ++k)
        v += loading(i, k) * std::sin(6.283185307179586 * static_cast<double>(t) / period[k] + phase[k]);
      drive(i) = v;
    }
    state = kMix * drive + (1.0 - kMix) * (transition * state);
    if (t >= burn_in) {
      const auto col = static_cast<Eigen::Index>(t - burn_in);
      for (Eigen::Index i = 0; i < N; ++i)
        values(i, col) = state(i) + noise * gauss(rng);
    }
  }

  SynthResult out;
  out.dataset.values = std::move(values);
  out.dataset.coords = coords;
  out.dataset.distances = dist;
  for (std::size_t i = 0; i < n; ++i)
    out.dataset.ids.push_back("v" + std::to_string(i));
  out.adjacency = std::move(adj);
  return out;
}

} // namespace ginar::data
