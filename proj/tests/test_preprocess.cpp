#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "tpayield/errors.hpp"
#include "tpayield/preprocess.hpp"
#include "tpayield/rng.hpp"
#include "tpayield/synth.hpp"

using namespace tpayield;

namespace {

Record base_record() {
  Record r;
  r.inputs = {Cell::make_number(200.0), Cell::make_number(10.0),
              Cell::make_label("A"),    Cell::make_number(1.5),
              Cell::make_label("a"),    Cell::make_number(0.5),
              Cell::make_number(100.0), Cell::make_label("a1"),
              Cell::make_number(2.0),   Cell::make_label("a1r")};
  r.yield = 55.0;
  return r;
}

Dataset tiny_dataset(const std::vector<std::string>& catalyst_labels) {
  Dataset d;
  d.schema = default_schema_vec();
  for (const auto& label : catalyst_labels) {
    Record r = base_record();
    r.inputs[4] = Cell::make_label(label);
    d.records.push_back(r);
  }
  return d;
}

// Naive textbook form of the transform, for cross-checking the stable one.
double yj_naive(double x, double lambda) {
  if (x >= 0.0) {
    if (lambda == 0.0) return std::log(1.0 + x);
    return (std::pow(1.0 + x, lambda) - 1.0) / lambda;
  }
  if (lambda == 2.0) return -std::log(1.0 - x);
  return -(std::pow(1.0 - x, 2.0 - lambda) - 1.0) / (2.0 - lambda);
}

}  // namespace

TEST_CASE("encoding covers the four categorical features") {
  Dataset d = synth_generate(100, 5, 1.0);
  EncodingMap map = fit_encoding(d);
  CHECK(map.tables.size() == 4);
  std::set<int> columns;
  for (const auto& t : map.tables) columns.insert(t.column);
  CHECK(columns == std::set<int>{2, 4, 7, 9});
}

TEST_CASE("codes follow first appearance") {
  Dataset d = tiny_dataset({"b", "a", "b"});
  EncodingMap map = fit_encoding(d);
  CHECK(map.code_for(4, "b") == 0);
  CHECK(map.code_for(4, "a") == 1);
  CHECK(map.code_for(4, "c") == -1);

  Dataset single = tiny_dataset({"e"});
  EncodingMap single_map = fit_encoding(single);
  CHECK(single_map.code_for(4, "e") == 0);
}

TEST_CASE("apply_encoding produces a 10-column numeric matrix") {
  Dataset d = synth_generate(50, 9, 1.0);
  EncodingMap map = fit_encoding(d);
  Eigen::MatrixXd X = apply_encoding(map, d);
  CHECK(X.rows() == 50);
  CHECK(X.cols() == 10);
  // continuous columns pass through
  CHECK(X(0, 0) == d.records[0].inputs[0].number);
  CHECK(X(7, 8) == d.records[7].inputs[8].number);
  CHECK(X.allFinite());
}

TEST_CASE("missing pressure encodes as ambient 1 atm") {
  Dataset d = tiny_dataset({"a", "b"});
  d.records[1].inputs[1] = Cell::make_missing();
  EncodingMap map = fit_encoding(d);
  Eigen::MatrixXd X = apply_encoding(map, d);
  CHECK(X(0, 1) == 10.0);
  CHECK(X(1, 1) == 1.0);
}

TEST_CASE("unseen label at apply time raises UnseenLabel") {
  Dataset fit_data = tiny_dataset({"a", "b"});
  EncodingMap map = fit_encoding(fit_data);
  Dataset apply_data = tiny_dataset({"a", "c"});
  try {
    apply_encoding(map, apply_data);
    FAIL("expected UnseenLabel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnseenLabel);
    CHECK(e.row() == 1);
    CHECK(e.column() == 4);
  }
}

TEST_CASE("encoding decodes labels exactly") {
  Dataset d = synth_generate(120, 17, 1.0);
  EncodingMap map = fit_encoding(d);
  Eigen::MatrixXd X = apply_encoding(map, d);
  for (const auto& table : map.tables) {
    for (std::size_t r = 0; r < d.n(); ++r) {
      const int code = static_cast<int>(
          X(static_cast<Eigen::Index>(r), table.column));
      CHECK(table.labels[static_cast<std::size_t>(code)] ==
            d.records[r].inputs[static_cast<std::size_t>(table.column)].label);
    }
  }
}

TEST_CASE("yeo_johnson matches reference transform values") {
  // spot values frozen from an independent implementation
  CHECK(yeo_johnson(2.5, 0.5) ==
        doctest::Approx(1.7416573867739416).epsilon(1e-14));
  CHECK(yeo_johnson(2.5, 0.0) ==
        doctest::Approx(1.2527629684953681).epsilon(1e-14));
  CHECK(yeo_johnson(-1.5, 3.0) == doctest::Approx(-0.6).epsilon(1e-14));
  CHECK(yeo_johnson(-1.5, 2.0) ==
        doctest::Approx(-0.91629073187415511).epsilon(1e-14));
  CHECK(yeo_johnson(0.0, 1.7) == 0.0);
}

TEST_CASE("yeo_johnson agrees with the naive formula away from poles") {
  Rng rng(31);
  for (int i = 0; i < 500; ++i) {
    const double x = rng.uniform(-20.0, 50.0);
    double lambda = rng.uniform(-5.0, 5.0);
    if (std::fabs(lambda) < 0.05) lambda += 0.1;
    if (std::fabs(lambda - 2.0) < 0.05) lambda += 0.1;
    const double stable = yeo_johnson(x, lambda);
    const double naive = yj_naive(x, lambda);
    CHECK(std::fabs(stable - naive) <=
          1e-12 * std::max(1.0, std::fabs(naive)));
  }
}

TEST_CASE("yeo_johnson is continuous at the lambda poles") {
  CHECK(yeo_johnson(3.0, 1e-13) ==
        doctest::Approx(yeo_johnson(3.0, 0.0)).epsilon(1e-9));
  CHECK(yeo_johnson(-3.0, 2.0 - 1e-13) ==
        doctest::Approx(yeo_johnson(-3.0, 2.0)).epsilon(1e-9));
}

TEST_CASE("fitted lambda matches an independent optimizer") {
  // references from a Brent-search fit of the same likelihood
  Eigen::VectorXd col1(20);
  col1 << 0.5, 1.2, 3.8, 0.05, 7.4, 2.2, 0.9, 15.0, 4.4, 0.3, 2.9, 6.1, 0.7,
      1.8, 9.3, 0.1, 5.2, 3.3, 1.1, 11.6;
  Eigen::VectorXd col2(16);
  col2 << 0.02, 0.05, 0.11, 0.2, 0.33, 0.5, 0.8, 1.3, 2.1, 3.4, 5.5, 8.9,
      14.4, 23.3, 37.7, 61.0;
  Eigen::VectorXd col3(16);
  col3 << -3.2, -1.1, -0.4, 0.0, 0.6, 1.9, 2.4, -2.2, 0.9, 3.3, -0.7, 1.2,
      2.8, -1.6, 0.2, 4.1;

  Eigen::MatrixXd X(20, 1);
  X.col(0) = col1;
  CHECK(fit_power_transform(X).lambda[0] ==
        doctest::Approx(-0.1363968027).epsilon(1e-4));

  Eigen::MatrixXd X2(16, 1);
  X2.col(0) = col2;
  CHECK(fit_power_transform(X2).lambda[0] ==
        doctest::Approx(-0.3672753024).epsilon(1e-4));
  X2.col(0) = col3;
  CHECK(fit_power_transform(X2).lambda[0] ==
        doctest::Approx(0.9676751045).epsilon(1e-4));
}

TEST_CASE("standard normal column keeps lambda near 1") {
  Rng rng(77);
  Eigen::MatrixXd X(10000, 1);
  for (int i = 0; i < 10000; ++i) X(i, 0) = rng.gaussian();
  const double lambda = fit_power_transform(X).lambda[0];
  CHECK(lambda > 0.8);
  CHECK(lambda < 1.2);
}

TEST_CASE("constant column raises DegenerateFeature") {
  Eigen::MatrixXd X(5, 2);
  X.col(0) << 1, 2, 3, 4, 5;
  X.col(1).setConstant(3.3);
  try {
    fit_power_transform(X);
    FAIL("expected DegenerateFeature");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateFeature);
    CHECK(e.column() == 1);
  }
}

TEST_CASE("fit then apply standardizes every column") {
  Dataset d = synth_generate(200, 23, 2.0);
  Eigen::MatrixXd X = apply_encoding(fit_encoding(d), d);
  PowerTransformParams params = fit_power_transform(X);
  Eigen::MatrixXd Z = apply_power_transform(params, X);
  for (Eigen::Index c = 0; c < Z.cols(); ++c) {
    const double mean = Z.col(c).mean();
    const double sd =
        std::sqrt(Z.col(c).squaredNorm() / static_cast<double>(Z.rows()) -
                  mean * mean);
    CHECK(std::fabs(mean) < 1e-8);
    CHECK(std::fabs(sd - 1.0) < 1e-6);
  }
}

TEST_CASE("transform preserves order within each column") {
  Rng rng(41);
  Eigen::MatrixXd X(60, 2);
  for (int i = 0; i < 60; ++i) {
    X(i, 0) = rng.uniform(-4.0, 30.0);
    X(i, 1) = std::exp(rng.uniform(-2.0, 4.0));
  }
  PowerTransformParams params = fit_power_transform(X);
  Eigen::MatrixXd Z = apply_power_transform(params, X);
  for (Eigen::Index c = 0; c < 2; ++c) {
    for (int i = 0; i < 60; ++i) {
      for (int j = i + 1; j < 60; ++j) {
        if (X(i, c) < X(j, c)) CHECK(Z(i, c) < Z(j, c));
        if (X(i, c) > X(j, c)) CHECK(Z(i, c) > Z(j, c));
      }
    }
  }
}

TEST_CASE("lambda = 1 acts as an affine rescale") {
  PowerTransformParams params;
  params.lambda = {1.0};
  params.mean = {2.0};
  params.sd = {4.0};
  Eigen::MatrixXd X(3, 1);
  X << -2.0, 0.0, 6.0;
  Eigen::MatrixXd Z = apply_power_transform(params, X);
  // yj(x,1) = x, so z = (x - 2) / 4
  CHECK(Z(0, 0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(Z(1, 0) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(Z(2, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("column-count mismatch raises DimensionMismatch") {
  PowerTransformParams params;
  params.lambda = {1.0, 1.0};
  params.mean = {0.0, 0.0};
  params.sd = {1.0, 1.0};
  Eigen::MatrixXd X(3, 1);
  X << 1, 2, 3;
  CHECK_THROWS_AS(apply_power_transform(params, X), Error);
}

TEST_CASE("381/5/4 split plan yields 20 triples sized 305/39/37") {
  Dataset d = synth_generate(381, 7, 2.0);
  SplitPlan plan = make_splits(381, 5, 4, 5, yield_vector(d), 99);
  REQUIRE(plan.triples.size() == 20);
  for (const auto& t : plan.triples) {
    CHECK(t.train.size() == 305);
    CHECK(t.validation.size() == 39);
    CHECK(t.test.size() == 37);
  }
}

TEST_CASE("100/5/1 split plan yields 5 triples sized 80/10/10") {
  std::vector<double> y(100);
  Rng rng(3);
  for (auto& v : y) v = rng.uniform(0.0, 100.0);
  SplitPlan plan = make_splits(100, 5, 1, 1, y, 42);
  REQUIRE(plan.triples.size() == 5);
  for (const auto& t : plan.triples) {
    CHECK(t.train.size() == 80);
    CHECK(t.validation.size() == 10);
    CHECK(t.test.size() == 10);
  }
}

TEST_CASE("each triple partitions the index set") {
  Dataset d = synth_generate(381, 7, 2.0);
  SplitPlan plan = make_splits(381, 5, 4, 5, yield_vector(d), 1234);
  for (const auto& t : plan.triples) {
    std::vector<std::size_t> all;
    all.insert(all.end(), t.train.begin(), t.train.end());
    all.insert(all.end(), t.validation.begin(), t.validation.end());
    all.insert(all.end(), t.test.begin(), t.test.end());
    REQUIRE(all.size() == 381);
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
  }
}

TEST_CASE("split plans are deterministic and seed-sensitive") {
  std::vector<double> y(150);
  Rng rng(8);
  for (auto& v : y) v = rng.uniform(0.0, 100.0);
  SplitPlan a = make_splits(150, 5, 2, 5, y, 7);
  SplitPlan b = make_splits(150, 5, 2, 5, y, 7);
  SplitPlan c = make_splits(150, 5, 2, 5, y, 8);
  bool differs = false;
  for (std::size_t i = 0; i < a.triples.size(); ++i) {
    CHECK(a.triples[i].train == b.triples[i].train);
    CHECK(a.triples[i].validation == b.triples[i].validation);
    CHECK(a.triples[i].test == b.triples[i].test);
    differs = differs || a.triples[i].validation != c.triples[i].validation;
  }
  CHECK(differs);
}

TEST_CASE("holdout respects the quantile strata within one record") {
  const std::size_t n = 381;
  Dataset d = synth_generate(static_cast<long>(n), 7, 2.0);
  const std::vector<double> y = yield_vector(d);
  const int bins = 5;
  SplitPlan plan = make_splits(n, 5, 4, bins, y, 77);

  // reconstruct the quantile bins the same way the splitter defines them
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return y[a] != y[b] ? y[a] < y[b] : a < b;
  });
  std::vector<int> bin_of(n);
  std::vector<double> bin_count(bins, 0.0);
  for (int j = 0; j < bins; ++j) {
    const std::size_t begin = static_cast<std::size_t>(j) * n / bins;
    const std::size_t end = static_cast<std::size_t>(j + 1) * n / bins;
    for (std::size_t p = begin; p < end; ++p) bin_of[order[p]] = j;
    bin_count[static_cast<std::size_t>(j)] =
        static_cast<double>(end - begin);
  }

  for (const auto& t : plan.triples) {
    std::vector<double> held(bins, 0.0);
    for (std::size_t idx : t.validation) held[static_cast<std::size_t>(bin_of[idx])] += 1.0;
    for (std::size_t idx : t.test) held[static_cast<std::size_t>(bin_of[idx])] += 1.0;
    const double pool = 76.0;
    for (int j = 0; j < bins; ++j) {
      const double expected =
          pool * bin_count[static_cast<std::size_t>(j)] /
          static_cast<double>(n);
      CHECK(std::fabs(held[static_cast<std::size_t>(j)] - expected) <= 1.0);
    }
  }
}

TEST_CASE("invalid split arguments are rejected") {
  std::vector<double> y(10, 1.0);
  CHECK_THROWS_AS(make_splits(10, 1, 1, 5, y, 0), Error);
  CHECK_THROWS_AS(make_splits(3, 5, 1, 5, y, 0), Error);
  CHECK_THROWS_AS(make_splits(10, 5, 0, 5, y, 0), Error);
  std::vector<double> short_y(5, 1.0);
  CHECK_THROWS_AS(make_splits(10, 5, 1, 5, short_y, 0), Error);
}

TEST_CASE("encoding and transform params survive a JSON round trip") {
  Dataset d = synth_generate(80, 2, 1.0);
  EncodingMap map = fit_encoding(d);
  EncodingMap map2 = encoding_from_json(encoding_to_json(map));
  REQUIRE(map2.tables.size() == map.tables.size());
  for (std::size_t i = 0; i < map.tables.size(); ++i) {
    CHECK(map2.tables[i].column == map.tables[i].column);
    CHECK(map2.tables[i].labels == map.tables[i].labels);
  }

  Eigen::MatrixXd X = apply_encoding(map, d);
  PowerTransformParams params = fit_power_transform(X);
  PowerTransformParams params2 =
      power_params_from_json(power_params_to_json(params));
  CHECK(params2.lambda == params.lambda);
  CHECK(params2.mean == params.mean);
  CHECK(params2.sd == params.sd);
}

TEST_CASE("split plan JSON carries every assignment") {
  std::vector<double> y(50);
  Rng rng(6);
  for (auto& v : y) v = rng.uniform(0.0, 100.0);
  SplitPlan plan = make_splits(50, 5, 2, 3, y, 11);
  nlohmann::json doc = split_plan_to_json(plan);
  CHECK(doc["k"] == 5);
  CHECK(doc["repeats"] == 2);
  CHECK(doc["triples"].size() == 10);
  CHECK(doc["triples"][0]["train"].size() == 40);
  CHECK(doc["triples"][0]["validation"].size() == 5);
  CHECK(doc["triples"][0]["test"].size() == 5);
}
