#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tpayield/errors.hpp"
#include "tpayield/metrics.hpp"
#include "tpayield/report.hpp"
#include "tpayield/rng.hpp"
#include "tpayield/serialize.hpp"

using namespace tpayield;

namespace {

struct ParityFile {
  std::string tag;
  double r2 = 0.0;
  double rmse_value = 0.0;
  std::size_t n = 0;
  std::vector<double> real, predicted, residual;
};

double parse_or_fail(const std::string& text) {
  double value = 0.0;
  REQUIRE(parse_double(text, value));
  return value;
}

ParityFile read_parity(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  ParityFile file;
  std::string line;
  REQUIRE(std::getline(in, line));
  std::istringstream header(line);
  std::string token;
  while (header >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "tag") file.tag = value;
    if (key == "r2") file.r2 = parse_or_fail(value);
    if (key == "rmse") file.rmse_value = parse_or_fail(value);
    if (key == "n") file.n = std::stoul(value);
  }
  REQUIRE(std::getline(in, line));
  REQUIRE(line == "index,real,predicted,residual");
  std::size_t expected_index = 0;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 4);
    CHECK(std::stoul(cells[0]) == expected_index);
    ++expected_index;
    file.real.push_back(parse_or_fail(cells[1]));
    file.predicted.push_back(parse_or_fail(cells[2]));
    file.residual.push_back(parse_or_fail(cells[3]));
  }
  return file;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

SignificanceTable sample_table() {
  SignificanceTable table;
  table.alpha = 0.05;
  table.rows.push_back({"temperature_C", "pearson", 0.81, 0.0002, true, ""});
  table.rows.push_back({"time_hr", "pearson", 0.40, 0.04, true, ""});
  table.rows.push_back({"catalyst_type", "kruskal_wallis", 2.1, 0.55, false,
                        "groups with one label skipped"});
  return table;
}

FeatureRanking sample_ranking() {
  FeatureRanking ranking;
  ranking.threshold = 45.5;
  ranking.ridge_fallback = false;
  ranking.iterations = 7;
  ranking.entries.push_back({"temperature_C", 0, 2.5, 1});
  ranking.entries.push_back({"time_hr", 8, 1.25, 2});
  return ranking;
}

}  // namespace

TEST_CASE("parity file metrics can be recomputed exactly from its rows") {
  Rng rng(4242);
  std::vector<double> y(60), yhat(60);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = rng.uniform(0.0, 100.0);
    yhat[i] = y[i] + rng.gaussian() * 4.0;
  }
  const auto path = temp_file("parity_roundtrip.csv");
  emit_parity_csv(path.string(), y, yhat, "mlp_test");
  const ParityFile file = read_parity(path.string());
  CHECK(file.tag == "mlp_test");
  CHECK(file.n == 60);
  REQUIRE(file.real.size() == 60);
  // shortest round-trip serialization means the parsed columns equal the
  // originals bit for bit, so recomputed metrics match the header
  for (std::size_t i = 0; i < y.size(); ++i) {
    CHECK(file.real[i] == y[i]);
    CHECK(file.predicted[i] == yhat[i]);
    CHECK(file.residual[i] == yhat[i] - y[i]);
  }
  CHECK(r_squared(file.real, file.predicted) == file.r2);
  CHECK(rmse(file.real, file.predicted) == file.rmse_value);
  std::filesystem::remove(path);
}

TEST_CASE("perfect predictions produce all-zero residuals") {
  const std::vector<double> y = {10.0, 30.0, 70.0};
  const auto path = temp_file("parity_perfect.csv");
  emit_parity_csv(path.string(), y, y, "exact");
  const ParityFile file = read_parity(path.string());
  CHECK(file.r2 == 1.0);
  CHECK(file.rmse_value == 0.0);
  for (const double r : file.residual) CHECK(r == 0.0);
  std::filesystem::remove(path);
}

TEST_CASE("parity emission rejects mismatched lengths") {
  const auto path = temp_file("parity_bad.csv");
  CHECK_THROWS_AS(emit_parity_csv(path.string(), {1.0, 2.0}, {1.0}, "bad"),
                  Error);
}

TEST_CASE("significance text orders rows by ascending p") {
  const std::string text = significance_table_text(sample_table());
  const auto pos_temp = text.find("temperature_C");
  const auto pos_time = text.find("time_hr");
  const auto pos_cat = text.find("catalyst_type");
  REQUIRE(pos_temp != std::string::npos);
  REQUIRE(pos_time != std::string::npos);
  REQUIRE(pos_cat != std::string::npos);
  CHECK(pos_temp < pos_time);
  CHECK(pos_time < pos_cat);
  CHECK(text.find("note: groups with one label skipped") != std::string::npos);
}

TEST_CASE("ranking text lists the strongest feature first") {
  const std::string text = feature_ranking_text(sample_ranking());
  CHECK(text.find("temperature_C") < text.find("time_hr"));
  CHECK(text.find("   1 ") != std::string::npos);
}

TEST_CASE("json renderings carry the fields verbatim") {
  const nlohmann::json sig = significance_table_json(sample_table());
  CHECK(sig["alpha"] == 0.05);
  REQUIRE(sig["rows"].size() == 3);
  CHECK(sig["rows"][0]["feature"] == "temperature_C");
  CHECK(sig["rows"][0].contains("note") == false);
  CHECK(sig["rows"][2]["note"] == "groups with one label skipped");

  const nlohmann::json rank = feature_ranking_json(sample_ranking());
  CHECK(rank["entries"][0]["rank"] == 1);
  CHECK(rank["entries"][1]["column"] == 8);
  CHECK(rank["ridge_fallback"] == false);

  MetricPair pair;
  pair.r2 = 0.9;
  pair.rmse = 3.5;
  pair.n = 37;
  const nlohmann::json mj = metric_pair_json(pair);
  CHECK(mj["r2"] == 0.9);
  CHECK(mj["n"] == 37);
}

TEST_CASE("run report assembly is byte stable and checks artifacts") {
  const auto dir = std::filesystem::temp_directory_path() / "tpayield_report";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "mlp_test_parity.csv") << "stub\n";
  }

  RunReportInputs inputs;
  inputs.dataset_fingerprint = 0xDEADBEEFCAFEF00DULL;
  inputs.dataset_rows = 381;
  inputs.config_echo = {{"seed", 7}, {"folds", 5}};
  inputs.seeds = {{"master", 7}};
  inputs.split = {{"fold", 2}, {"repeat", 1}, {"train", 305},
                  {"validation", 39}, {"test", 37}};
  inputs.hidden_size = 12;
  inputs.sweep_curve = nlohmann::json::array({{{"hidden", 2}, {"val_r2", 0.8}}});
  inputs.mlp_train = {0.97, 2.1, 305};
  inputs.mlp_test = {0.95, 3.0, 37};
  inputs.anfis_train = {0.96, 2.5, 305};
  inputs.anfis_test = {0.94, 3.2, 37};
  inputs.significance = sample_table();
  inputs.ranking = sample_ranking();
  inputs.artifacts = {"mlp_test_parity.csv"};
  inputs.out_dir = dir.string();

  const nlohmann::json report = build_report(inputs);
  CHECK(report["dataset"]["fingerprint"] == "deadbeefcafef00d");
  CHECK(report["dataset"]["rows"] == 381);
  CHECK(report["hidden_size"] == 12);
  CHECK(report["mlp"]["test"]["n"] == 37);
  CHECK(report["split"]["train"] == 305);

  const std::string once = dump_json_17(report);
  const std::string twice = dump_json_17(build_report(inputs));
  CHECK(once == twice);

  inputs.artifacts = {"not_written.csv"};
  try {
    build_report(inputs);
    FAIL("expected a missing-artifact error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingArtifact);
  }
  std::filesystem::remove_all(dir);
}
