#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "scf/error.hpp"
#include "scf/metrics.hpp"

using namespace scf;

TEST_CASE("p_e examples") {
  const std::vector<double> s1{0.1, 0.2, 0.8, 0.9};
  const std::vector<Label> l1{0, 0, 1, 1};
  const auto r1 = p_e(s1, l1);
  CHECK(r1.p_e == 0.0);
  CHECK(r1.threshold > 0.2);
  CHECK(r1.threshold < 0.8);

  const auto r2 = p_e(std::vector<double>{0.9, 0.1}, std::vector<Label>{0, 1});
  CHECK(r2.p_e == 0.5);
  CHECK(r2.threshold == -std::numeric_limits<double>::infinity());

  const auto r3 = p_e(std::vector<double>(6, 0.5), std::vector<Label>{0, 1, 0, 1, 0, 1});
  CHECK(r3.p_e == 0.5);

  CHECK_THROWS_AS(p_e(std::vector<double>{0.1, 0.2}, std::vector<Label>{1, 1}), InvalidArgument);
  CHECK_THROWS_AS(p_e(std::vector<double>{0.1}, std::vector<Label>{1, 0}), InvalidArgument);
}

TEST_CASE("p_e matches the exhaustive sweep") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(60);
    auto labels = oracle::random_binary_labels(rng, n);
    std::vector<double> scores(n);
    // Coarse grid so ties are common.
    for (auto& s : scores) s = trial % 2 == 0 ? rng.uniform() : static_cast<double>(rng.uniform_index(5)) / 4.0;
    const auto fast = p_e(scores, labels);
    const auto slow = oracle::p_e_sweep(scores, labels);
    CHECK(fast.p_e == slow.p_e);
    CHECK(fast.threshold == slow.threshold);
    CHECK(fast.p_fa == slow.p_fa);
    CHECK(fast.p_md == slow.p_md);
    CHECK(fast.p_e >= 0.0);
    CHECK(fast.p_e <= 0.5);
  }
}

TEST_CASE("silhouette") {
  Rng rng(32);
  Matrix z(40, 3);
  std::vector<Label> labels(40);
  for (std::size_t i = 0; i < 40; ++i) {
    labels[i] = i < 20 ? 0 : 1;
    for (std::size_t c = 0; c < 3; ++c) z(i, c) = 0.01 * rng.gaussian() + (labels[i] == 1 ? 10.0 : 0.0);
  }
  CHECK(silhouette(z, labels) > 0.9);

  for (int t = 0; t < 20; ++t) {
    Matrix noise(60, 4);
    for (double& v : noise.values()) v = rng.gaussian();
    const auto shuffled = oracle::random_binary_labels(rng, 60);
    CHECK(std::abs(silhouette(noise, shuffled)) < 0.1);
  }

  CHECK(silhouette(Matrix(6, 2, 1.0), std::vector<Label>{0, 0, 0, 1, 1, 1}) == 0.0);

  // Three points: hand-computed value.
  const Matrix line(4, 1, std::vector<double>{0.0, 1.0, 3.0, 4.0});
  // a = 1 for all; b = 3.5, 2.5, 2.5, 3.5 -> s = 1 - 1/b
  const double expected = (2.0 * (1.0 - 1.0 / 3.5) + 2.0 * (1.0 - 1.0 / 2.5)) / 4.0;
  CHECK(silhouette(line, std::vector<Label>{0, 0, 1, 1}) == doctest::Approx(expected).epsilon(1e-14));

  CHECK_THROWS_AS(silhouette(Matrix(3, 2), std::vector<Label>{0, 0, 1}), InvalidArgument);
  CHECK_THROWS_AS(silhouette(Matrix(3, 2), std::vector<Label>{0, 0, 0}), InvalidArgument);
}
