// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "common/oracle.hpp"
#include "core/graph.hpp"

using namespace ginar;

TEST_SUITE("graph") {

TEST_CASE("normalize_predefined on a two-node edge is all ones") {
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  const Matrix out = graph::normalize_predefined(a);
  CHECK(out(0, 0) == 1.0);
  CHECK(out(0, 1) == 1.0);
  CHECK(out(1, 0) == 1.0);
  CHECK(out(1, 1) == 1.0);
}

TEST_CASE("normalize_predefined keeps isolated nodes as identity rows") {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 1) = a(1, 0) = 4.0;
  const Matrix out = graph::normalize_predefined(a);
  CHECK(out(2, 2) == 1.0);
  CHECK(out(2, 0) == 0.0);
  CHECK(out(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("normalize_predefined matches D^-1/2 A D^-1/2 + I") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix a(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j <= i; ++j)
      a(i, j) = a(j, i) = i == j ? 0.0 : u(rng);
  const Matrix out = graph::normalize_predefined(a);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const double expect = a(i, j) / std::sqrt(a.row(i).sum() * a.row(j).sum()) + (i == j ? 1.0 : 0.0);
      CHECK(out(i, j) == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("distance kernel thresholds and excludes the diagonal") {
  Matrix d(3, 3);
  d << 0, 1, 3, 1, 0, 2, 3, 2, 0;
  const Matrix a = graph::build_adjacency_distance(d, 2.5, 2.0);
  CHECK(a(0, 0) == 0.0);
  CHECK(a(0, 1) == doctest::Approx(std::exp(-0.25)));
  CHECK(a(1, 2) == doctest::Approx(std::exp(-1.0)));
  CHECK(a(0, 2) == 0.0);
  Matrix neg = d;
  neg(0, 1) = -1;
  CHECK_THROWS_AS(graph::build_adjacency_distance(neg, 2.5, 2.0), Error);
  CHECK_THROWS_AS(graph::build_adjacency_distance(d, 2.5, 0.0), Error);
}

TEST_CASE("pearson graph uses |rho| and skips excluded rows") {
  Matrix s(3, 4);
  s << 1, 2, 3, 4, 4, 3, 2, 1, 1, 3, 2, 4;
  const Matrix a = graph::build_adjacency_pearson(s, 0.5);
  CHECK(a(0, 1) == doctest::Approx(1.0));
  CHECK(a(0, 0) == 0.0);
  CHECK(a(0, 2) == doctest::Approx(0.8));
  const std::vector<std::size_t> excluded{2};
  const Matrix b = graph::build_adjacency_pearson(s, 0.5, excluded);
  CHECK(b(0, 2) == 0.0);
  CHECK(b(2, 0) == 0.0);
  const Matrix c = graph::build_adjacency_pearson(s, 0.9);
  CHECK(c(0, 2) == 0.0);
}

TEST_CASE("adjacency CSV round trip and format errors") {
  const auto dir = std::filesystem::temp_directory_path() / "ginar_graph_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "a.csv") << "0,1.5\n1.5,0\n";
    const Matrix a = graph::load_adjacency_csv((dir / "a.csv").string());
    CHECK(a(0, 1) == 1.5);
  }
  std::ofstream(dir / "bad.csv") << "0,1\n1\n";
  CHECK_THROWS_AS(graph::load_adjacency_csv((dir / "bad.csv").string()), Error);
  std::ofstream(dir / "text.csv") << "0,x\n1,0\n";
  CHECK_THROWS_AS(graph::load_adjacency_csv((dir / "text.csv").string()), Error);
  CHECK_THROWS_AS(graph::load_adjacency_csv((dir / "missing.csv").string()), Error);
}

TEST_CASE("adaptive adjacency rows sum to two and match the oracle") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    auto state = graph::AdaptiveGraphState<double>::init(6, 4, 3, rng);
    auto xv = oracle::random_vec(24, rng);
    auto x = ad::Tensor<double>::constant({6, 4}, xv);
    auto a = graph::adaptive_adjacency(graph::fuse_embedding(x, state));
    oracle::Mat xm(6, 4);
    xm.v = xv;
    const auto ref = oracle::adaptive(oracle::ag_params(state), xm);
    CHECK(oracle::max_abs_diff(ref, a) < 1e-12);
    for (std::size_t i = 0; i < 6; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < 6; ++j)
        s += a.at({i, j});
      CHECK(std::abs(s - 2.0) <= 1e-5);
    }
  }
}

TEST_CASE("batched adaptive adjacency equals per-sample results") {
  std::mt19937_64 rng(5);
  auto state = graph::AdaptiveGraphState<double>::init(3, 2, 2, rng);
  auto xv = oracle::random_vec(12, rng);
  auto batched = graph::adaptive_adjacency(
      graph::fuse_embedding(ad::Tensor<double>::constant({2, 3, 2}, xv), state));
  for (std::size_t b = 0; b < 2; ++b) {
    std::vector<double> part(xv.begin() + b * 6, xv.begin() + b * 6 + 6);
    auto single = graph::adaptive_adjacency(
        graph::fuse_embedding(ad::Tensor<double>::constant({3, 2}, part), state));
    for (std::size_t k = 0; k < 9; ++k)
      CHECK(batched.data()[b * 9 + k] == doctest::Approx(single.data()[k]).epsilon(1e-14));
  }
}

} // TEST_SUITE
