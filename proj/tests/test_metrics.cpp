#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "tpayield/errors.hpp"
#include "tpayield/metrics.hpp"
#include "tpayield/rng.hpp"

using namespace tpayield;

TEST_CASE("rmse matches a hand oracle") {
  // residuals 3 and 4: sqrt((9 + 16) / 2) = sqrt(12.5)
  const double v = rmse({0.0, 0.0}, {3.0, 4.0});
  CHECK(v == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
}

TEST_CASE("perfect predictions give rmse 0 and r2 1") {
  const std::vector<double> y = {1.0, 2.0, 5.0, -3.0};
  CHECK(rmse(y, y) == 0.0);
  CHECK(r_squared(y, y) == 1.0);
}

TEST_CASE("predicting the mean gives r2 0") {
  const std::vector<double> y = {1.0, 2.0, 3.0, 6.0};
  const double mean = 3.0;
  const std::vector<double> yhat(y.size(), mean);
  CHECK(r_squared(y, yhat) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("r2 oracle on a small fixed pair") {
  const std::vector<double> y = {2.0, 4.0, 6.0, 8.0};
  const std::vector<double> yhat = {2.5, 3.5, 6.5, 7.5};
  // ss_res = 4 * 0.25 = 1, ss_tot = 9 + 1 + 1 + 9 = 20
  CHECK(r_squared(y, yhat) == doctest::Approx(1.0 - 1.0 / 20.0).epsilon(1e-15));
}

TEST_CASE("fuzzed identity r2 = 1 - n * rmse^2 / ss_tot") {
  Rng rng(20260814);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(40);
    std::vector<double> y(n), yhat(n);
    bool degenerate = true;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.uniform(-50.0, 150.0);
      yhat[i] = y[i] + rng.gaussian() * rng.uniform(0.0, 20.0);
      if (i > 0 && y[i] != y[0]) degenerate = false;
    }
    if (degenerate) y[0] += 1.0;
    double mean = 0.0;
    for (const double v : y) mean += v;
    mean /= static_cast<double>(n);
    double ss_tot = 0.0;
    for (const double v : y) ss_tot += (v - mean) * (v - mean);
    const double e = rmse(y, yhat);
    const double expected = 1.0 - static_cast<double>(n) * e * e / ss_tot;
    CHECK(r_squared(y, yhat) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("r2 is invariant to affine rescaling of both series") {
  Rng rng(99);
  std::vector<double> y(25), yhat(25);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = rng.uniform(0.0, 100.0);
    yhat[i] = y[i] + rng.gaussian() * 5.0;
  }
  const double base = r_squared(y, yhat);
  std::vector<double> y2 = y, yhat2 = yhat;
  for (std::size_t i = 0; i < y.size(); ++i) {
    y2[i] = 3.0 * y[i] + 7.0;
    yhat2[i] = 3.0 * yhat[i] + 7.0;
  }
  CHECK(r_squared(y2, yhat2) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("metric_pair bundles both values with the sample count") {
  const std::vector<double> y = {2.0, 4.0, 6.0, 8.0};
  const std::vector<double> yhat = {2.5, 3.5, 6.5, 7.5};
  const MetricPair pair = metric_pair(y, yhat);
  CHECK(pair.n == 4);
  CHECK(pair.r2 == r_squared(y, yhat));
  CHECK(pair.rmse == rmse(y, yhat));
}

TEST_CASE("length mismatches and empty input are rejected") {
  CHECK_THROWS_AS(rmse({1.0}, {1.0, 2.0}), Error);
  CHECK_THROWS_AS(r_squared({1.0, 2.0}, {1.0}), Error);
  CHECK_THROWS_AS(rmse({}, {}), Error);
  try {
    rmse({1.0}, {1.0, 2.0});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
}

TEST_CASE("constant targets make r2 undefined") {
  try {
    r_squared({5.0, 5.0, 5.0}, {4.0, 5.0, 6.0});
    FAIL("expected a degenerate-target error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateTarget);
  }
  // single observation has no variance either
  CHECK_THROWS_AS(r_squared({5.0}, {4.0}), Error);
}
