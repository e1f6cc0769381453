#include <doctest.h>

#include <cmath>
#include <vector>

#include "gatenet/error.hpp"
#include "gatenet/metrics.hpp"
#include "gatenet/rng.hpp"

using namespace gatenet;
using V = std::vector<double>;

TEST_CASE("auc examples") {
  CHECK(metrics::auc(V{0.9, 0.1}, V{1, 0}) == 1.0);
  CHECK(metrics::auc(V{0.5, 0.5}, V{1, 0}) == 0.5);
  CHECK(metrics::auc(V{0.8, 0.7, 0.6, 0.5}, V{1, 0, 1, 0}) == 0.75);
  CHECK(metrics::auc_bruteforce(V{0.8, 0.7, 0.6, 0.5}, V{1, 0, 1, 0}) == 0.75);
}

TEST_CASE("auc rejects a single class") {
  CHECK_THROWS_AS(metrics::auc(V{0.1, 0.2}, V{1, 1}), DataError);
  CHECK_THROWS_AS(metrics::auc_bruteforce(V{0.1, 0.2}, V{0, 0}), DataError);
  const EvalResult r = metrics::evaluate(V{0.1, 0.2}, V{1, 1});
  CHECK_FALSE(r.auc.has_value());
  CHECK(r.n_pos == 2);
  CHECK(r.n_neg == 0);
}

TEST_CASE("sorted auc agrees with the pairwise oracle") {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.uniform_int(150);
    V s(n);
    V y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.uniform_int(8));
      y[i] = static_cast<double>(rng.uniform_int(2));
    }
    y[0] = 1;
    y[1] = 0;
    CHECK(std::abs(metrics::auc(s, y) - metrics::auc_bruteforce(s, y)) <= 1e-12);
  }
}

TEST_CASE("auc is rank invariant and flips with the labels") {
  Rng rng(5);
  V s(60);
  V y(60);
  for (std::size_t i = 0; i < 60; ++i) {
    s[i] = rng.uniform();
    y[i] = static_cast<double>(rng.uniform_int(2));
  }
  V t(60);
  V flipped(60);
  for (std::size_t i = 0; i < 60; ++i) {
    t[i] = std::exp(3 * s[i]) - 7;
    flipped[i] = 1 - y[i];
  }
  const double a = metrics::auc(s, y);
  CHECK(metrics::auc(t, y) == a);
  CHECK(std::abs(metrics::auc(s, flipped) - (1 - a)) < 1e-12);
}

TEST_CASE("logloss anchors") {
  CHECK(std::abs(metrics::logloss(V{0.5, 0.5}, V{0, 1}) - std::log(2.0)) < 1e-12);
  CHECK(std::abs(metrics::logloss(V{0.9}, V{0}) - 2.3025851) < 1e-6);
  CHECK(std::isfinite(metrics::logloss(V{0.0, 1.0}, V{1, 0})));
  CHECK(std::abs(metrics::logloss(V{0.0}, V{1}) + std::log(kProbabilityEpsilon)) < 1e-9);
  CHECK_THROWS_AS(metrics::logloss(V{}, V{}), DataError);
  CHECK_THROWS_AS(metrics::logloss(V{0.5}, V{1, 0}), DataError);
}

TEST_CASE("evaluate counts classes") {
  const EvalResult r = metrics::evaluate(V{0.9, 0.2, 0.4}, V{1, 0, 0});
  REQUIRE(r.auc.has_value());
  CHECK(*r.auc == 1.0);
  CHECK(r.n_pos == 1);
  CHECK(r.n_neg == 2);
}
