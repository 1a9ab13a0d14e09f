// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

#include <doctest.h>

#include <cmath>

#include "common/oracle.hpp"
#include "core/model.hpp"

using namespace ginar;
using T = ad::Tensor<double>;

namespace {

model::ModelConfig small_config(std::uint64_t seed) {
  model::ModelConfig cfg;
  cfg.num_vars = 5;
  cfg.in_channels = 2;
  cfg.embed = 4;
  cfg.var_embed = 3;
  cfg.layers = 2;
  cfg.history = 4;
  cfg.horizon = 3;
  cfg.decoder_hidden = 6;
  cfg.dropout = 0.0;
  cfg.ia.k = 1 + seed % 3;
  cfg.ia.pairwise_scores = seed % 2;
  return cfg;
}

Matrix random_graph(std::size_t n, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix a = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      a(i, j) = a(j, i) = u(rng) < 0.6 ? u(rng) : 0.0;
  return a;
}

oracle::Mat to_mat(const Matrix &m) {
  oracle::Mat o(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (std::size_t k = 0; k < o.v.size(); ++k)
    o.v[k] = m.data()[k];
  return o;
}

std::vector<std::uint8_t> mask_for(std::uint64_t seed, std::size_t n) {
  std::vector<std::uint8_t> m(n, 0);
  m[seed % n] = 1;
  if (seed % 3 != 0)
    m[(seed + 2) % n] = 1;
  return m;
}

} // namespace

TEST_SUITE("model") {

TEST_CASE("agcn_apply matches the oracle with either graph removed") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    auto cfg = small_config(seed);
    model::GinAR<double> m(cfg, seed);
    const auto &gate = m.layers()[0].forget;
    auto xv = oracle::random_vec(5 * 4, rng);
    oracle::Mat xm(5, 4);
    xm.v = xv;
    const Matrix pre = graph::normalize_predefined(random_graph(5, rng));
    auto adap_v = oracle::random_vec(25, rng);
    oracle::Mat adap(5, 5);
    adap.v = adap_v;
    const auto g = oracle::gate_params(gate);
    const oracle::Mat pre_m = to_mat(pre);
    const T x = T::constant({5, 4}, xv), a_pre = graph::to_tensor<double>(pre),
            a_adap = T::constant({5, 5}, adap_v);

    CHECK(oracle::max_abs_diff(oracle::agcn(xm, &pre_m, &adap, g, 1e-5),
                               model::agcn_apply(x, a_pre, a_adap, gate)) < 1e-10);
    CHECK(oracle::max_abs_diff(oracle::agcn(xm, nullptr, &adap, g, 1e-5),
                               model::agcn_apply(x, T{}, a_adap, gate)) < 1e-10);
    CHECK(oracle::max_abs_diff(oracle::agcn(xm, &pre_m, nullptr, g, 1e-5),
                               model::agcn_apply(x, a_pre, T{}, gate)) < 1e-10);
    CHECK(oracle::max_abs_diff(oracle::agcn(xm, &pre_m, &adap, g, 1e-5, true),
                               model::agcn_apply(x, a_pre, a_adap, gate, true)) < 1e-10);
  }
  model::GinAR<double> m(small_config(0), 0);
  CHECK_THROWS_AS(model::agcn_apply(T::zeros({5, 4}), T{}, T{}, m.layers()[0].forget), Error);
}

TEST_CASE("cell_step matches the oracle") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    std::mt19937_64 rng(seed + 50);
    auto cfg = small_config(seed);
    cfg.use_ia = seed % 4 != 3;
    cfg.use_pg = seed % 5 != 4;
    cfg.sigmoid_gates = seed == 7;
    model::GinAR<double> m(cfg, seed);
    const Matrix pre = graph::normalize_predefined(random_graph(5, rng));
    const auto missing = mask_for(seed, 5);
    auto xv = oracle::random_vec(5 * 2, rng);
    auto cv = oracle::random_vec(5 * 4, rng, 0.5);
    model::CellContext<double> ctx;
    ctx.config = &cfg;
    if (cfg.use_pg)
      ctx.a_pre = graph::to_tensor<double>(pre);
    ctx.missing = missing;
    auto [h, c] = model::cell_step(m.layers()[0], T::constant({5, 2}, xv), T::constant({5, 4}, cv), ctx);
    oracle::Mat xm(5, 2), cm(5, 4);
    xm.v = xv;
    cm.v = cv;
    const oracle::Mat pre_m = to_mat(pre);
    auto ref = oracle::cell(oracle::layer_params(m.layers()[0]), xm, cm, &pre_m, missing, cfg);
    INFO("seed " << seed);
    CHECK(oracle::max_abs_diff(ref.h, h) < 1e-10);
    CHECK(oracle::max_abs_diff(ref.c, c) < 1e-10);
  }
}

TEST_CASE("saturated gates reduce the cell to copy paths") {
  auto cfg = small_config(1);
  model::GinAR<double> m(cfg, 1);
  std::mt19937_64 rng(8);
  const auto missing = mask_for(1, 5);
  model::CellContext<double> ctx;
  ctx.config = &cfg;
  ctx.a_pre = graph::to_tensor<double>(Matrix::Identity(5, 5));
  ctx.missing = missing;
  ctx.options.force_forget = 1.0;
  ctx.options.force_reset = 0.0;
  const T x = T::constant({5, 2}, oracle::random_vec(10, rng));
  const T c_prev = T::constant({5, 4}, oracle::random_vec(20, rng));
  auto [h, c] = model::cell_step(m.layers()[0], x, c_prev, ctx);
  auto x_ia = ia::apply_ia(m.layers()[0].ia, x, missing, cfg.ia);
  for (std::size_t k = 0; k < c.size(); ++k) {
    CHECK(c.data()[k] == c_prev.data()[k]);
    CHECK(h.data()[k] == doctest::Approx(x_ia.data()[k]).epsilon(1e-14));
  }
}

TEST_CASE("forward matches the oracle") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed + 7);
    auto cfg = small_config(seed);
    cfg.layers = 1 + seed % 3;
    cfg.use_ag = seed % 4 != 2;
    model::GinAR<double> m(cfg, seed);
    const Matrix pre = graph::normalize_predefined(random_graph(5, rng));
    m.set_predefined_graph(pre);
    m.set_missing(mask_for(seed, 5));
    model::InputBatch batch{2, 5, cfg.history, 2, oracle::random_vec(2 * 5 * cfg.history * 2, rng)};
    std::mt19937_64 unused(0);
    auto y = m.forward(batch, false, unused);
    REQUIRE(y.shape() == ad::Shape{2, 5, 3});
    for (std::size_t b = 0; b < 2; ++b) {
      auto ref = oracle::forward(m, to_mat(pre), batch, b);
      INFO("seed " << seed << " sample " << b);
      CHECK(oracle::max_abs_diff(ref, y, b * 15) < 1e-9);
    }
  }
}

TEST_CASE("constructor rejects removing both graphs") {
  auto cfg = small_config(0);
  cfg.use_pg = cfg.use_ag = false;
  CHECK_THROWS_AS(model::GinAR<double>(cfg, 0), Error);
}

TEST_CASE("identical seeds give identical parameters") {
  model::GinAR<float> a(small_config(0), 42), b(small_config(0), 42), c(small_config(0), 43);
  auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  REQUIRE(pa.size() == pb.size());
  bool all_same = true, any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    for (std::size_t k = 0; k < pa[i].second.size(); ++k) {
      all_same = all_same && pa[i].second.data()[k] == pb[i].second.data()[k];
      any_diff = any_diff || pa[i].second.data()[k] != pc[i].second.data()[k];
    }
  }
  CHECK(all_same);
  CHECK(any_diff);
}

TEST_CASE("ablation flags keep the parameter set") {
  auto cfg = small_config(0);
  model::GinAR<float> full(cfg, 1);
  cfg.use_ia = false;
  model::GinAR<float> no_ia(cfg, 1);
  CHECK(full.parameters().size() == no_ia.parameters().size());
}

TEST_CASE("dropout only acts in training mode") {
  auto cfg = small_config(0);
  cfg.dropout = 0.5;
  model::GinAR<double> m(cfg, 3);
  std::mt19937_64 rng(1);
  model::InputBatch batch{1, 5, cfg.history, 2, oracle::random_vec(5 * cfg.history * 2, rng)};
  std::mt19937_64 r1(5), r2(6);
  auto eval1 = m.forward(batch, false, r1), eval2 = m.forward(batch, false, r2);
  auto train1 = m.forward(batch, true, r1);
  bool same_eval = true, train_differs = false;
  for (std::size_t k = 0; k < eval1.size(); ++k) {
    same_eval = same_eval && eval1.data()[k] == eval2.data()[k];
    train_differs = train_differs || train1.data()[k] != eval1.data()[k];
  }
  CHECK(same_eval);
  CHECK(train_differs);
}

TEST_CASE("per-variable MLP ignores other variables") {
  model::MlpForecaster<double> mlp(3, 4, 1, 8, 2, 0);
  std::mt19937_64 rng(2);
  model::InputBatch batch{1, 3, 4, 1, oracle::random_vec(12, rng)};
  std::mt19937_64 unused(0);
  auto a = mlp.forward(batch, false, unused);
  batch.x[8] += 3.0;  // variable 2
  auto b = mlp.forward(batch, false, unused);
  for (std::size_t k = 0; k < 4; ++k)
    CHECK(a.data()[k] == b.data()[k]);
  CHECK(a.data()[4] != b.data()[4]);
}

TEST_CASE("IA+MLP fills missing variables from normal ones") {
  model::IaMlpForecaster<double> m(4, 3, 1, 5, 2, 6, 2, ia::IAOptions{}, 1);
  m.set_missing({1, 0, 0, 0});
  std::mt19937_64 rng(3);
  model::InputBatch batch{1, 4, 3, 1, oracle::random_vec(12, rng)};
  std::mt19937_64 unused(0);
  auto a = m.forward(batch, false, unused);
  batch.x[4] += 2.0;  // a normal neighbor changes the recovered variable
  auto b = m.forward(batch, false, unused);
  CHECK(a.data()[0] != b.data()[0]);
}

TEST_CASE("batch shape mismatch is rejected") {
  model::GinAR<float> m(small_config(0), 0);
  model::InputBatch batch{1, 4, 4, 2, std::vector<double>(32, 0.0)};
  std::mt19937_64 rng(0);
  CHECK_THROWS_AS(m.forward(batch, false, rng), Error);
}

} // TEST_SUITE
