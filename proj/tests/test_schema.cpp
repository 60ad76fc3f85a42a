#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "tpayield/errors.hpp"
#include "tpayield/schema.hpp"
#include "tpayield/synth.hpp"

using namespace tpayield;

namespace {

const char* kHeader =
    "temperature_C,pressure_atm,pet_config,pet_amount_mol,catalyst_type,"
    "catalyst_conc_M,solution_mL,reaction_type,time_hr,heat_mix,tpa_yield_pct";

std::string row(const std::string& overrides = "") {
  // A conformant baseline row; callers splice replacements by position.
  std::string r = "200,10,A,1.5,a,0.5,100,a1,2,a1r,55";
  return overrides.empty() ? r : overrides;
}

struct TempCsv {
  std::string path;
  explicit TempCsv(const std::string& body) {
    static int counter = 0;
    path = "schema_test_" + std::to_string(counter++) + ".csv";
    std::ofstream out(path, std::ios::binary);
    out << body;
  }
  ~TempCsv() { std::remove(path.c_str()); }
};

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream body;
  body << in.rdbuf();
  return body.str();
}

}  // namespace

TEST_CASE("default schema pins the ten input columns") {
  const auto& schema = default_schema();
  CHECK(schema[0].name == "temperature_C");
  CHECK(schema[0].allowed_range->first == 40.0);
  CHECK(schema[0].allowed_range->second == 385.0);
  CHECK(schema[1].missing_allowed);
  CHECK(schema[2].allowed_labels == std::vector<std::string>{"A", "B", "C"});
  CHECK(schema[4].allowed_labels.size() == 8);
  CHECK(schema[7].allowed_labels ==
        std::vector<std::string>{"a1", "a2", "a3"});
  CHECK(schema[9].allowed_labels.size() == 6);
  int continuous = 0, categorical = 0;
  for (const auto& f : schema) {
    (f.kind == FeatureKind::Continuous ? continuous : categorical) += 1;
    if (f.kind == FeatureKind::Continuous) CHECK(f.allowed_range.has_value());
  }
  CHECK(continuous == 6);
  CHECK(categorical == 4);
}

TEST_CASE("a 381-row file loads with n = 381") {
  Dataset d = synth_generate(381, 7, 2.0);
  write_csv("schema_test_full.csv", d);
  Dataset loaded = load_csv("schema_test_full.csv", default_schema_vec());
  CHECK(loaded.n() == 381);
  std::remove("schema_test_full.csv");
}

TEST_CASE("header-only file raises EmptyDataset") {
  TempCsv csv(std::string(kHeader) + "\n");
  CHECK_THROWS_WITH_AS(load_csv(csv.path, default_schema_vec()),
                       doctest::Contains("no data rows"), Error);
  try {
    load_csv(csv.path, default_schema_vec());
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyDataset);
  }
}

TEST_CASE("yield above 100 raises OutOfRange naming the row") {
  TempCsv csv(std::string(kHeader) + "\n" + row() + "\n" +
              "200,10,A,1.5,a,0.5,100,a1,2,a1r,105\n");
  try {
    load_csv(csv.path, default_schema_vec());
    FAIL("expected OutOfRange");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfRange);
    CHECK(e.row() == 1);
  }
}

TEST_CASE("unknown catalyst label raises UnknownLabel") {
  TempCsv csv(std::string(kHeader) + "\n" +
              "200,10,A,1.5,z,0.5,100,a1,2,a1r,55\n");
  try {
    load_csv(csv.path, default_schema_vec());
    FAIL("expected UnknownLabel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownLabel);
    CHECK(e.column() == 4);
  }
}

TEST_CASE("wrong header raises MissingColumn") {
  TempCsv csv("temp_C,pressure_atm,pet_config,pet_amount_mol,catalyst_type,"
              "catalyst_conc_M,solution_mL,reaction_type,time_hr,heat_mix,"
              "tpa_yield_pct\n" +
              row() + "\n");
  CHECK_THROWS_AS(load_csv(csv.path, default_schema_vec()), Error);
  try {
    load_csv(csv.path, default_schema_vec());
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingColumn);
  }
}

TEST_CASE("NR pressure loads as missing; NR elsewhere is a parse error") {
  TempCsv ok(std::string(kHeader) + "\n" +
             "200,NR,A,1.5,a,0.5,100,a1,2,a1r,55\n");
  Dataset d = load_csv(ok.path, default_schema_vec());
  CHECK(d.records[0].inputs[1].kind == Cell::Kind::Missing);

  TempCsv bad(std::string(kHeader) + "\n" +
              "NR,10,A,1.5,a,0.5,100,a1,2,a1r,55\n");
  try {
    load_csv(bad.path, default_schema_vec());
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
  }
}

TEST_CASE("malformed numeric field raises ParseError with position") {
  TempCsv csv(std::string(kHeader) + "\n" +
              "200,10,A,oops,a,0.5,100,a1,2,a1r,55\n");
  try {
    load_csv(csv.path, default_schema_vec());
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(e.row() == 0);
    CHECK(e.column() == 3);
  }
}

TEST_CASE("write then load is the identity, and rewriting is byte-stable") {
  Dataset d = synth_generate(60, 11, 3.0);
  write_csv("schema_roundtrip_a.csv", d);
  Dataset back = load_csv("schema_roundtrip_a.csv", default_schema_vec());
  REQUIRE(back.n() == d.n());
  for (std::size_t i = 0; i < d.n(); ++i) {
    CHECK(back.records[i].inputs == d.records[i].inputs);
    CHECK(back.records[i].yield == d.records[i].yield);
  }
  write_csv("schema_roundtrip_b.csv", back);
  CHECK(file_bytes("schema_roundtrip_a.csv") ==
        file_bytes("schema_roundtrip_b.csv"));
  std::remove("schema_roundtrip_a.csv");
  std::remove("schema_roundtrip_b.csv");
}

TEST_CASE("validate reports zero violations for accepted files") {
  Dataset d = synth_generate(100, 3, 1.0);
  write_csv("schema_valid.csv", d);
  Dataset loaded = load_csv("schema_valid.csv", default_schema_vec());
  CHECK(validate(loaded).ok());
  std::remove("schema_valid.csv");
}

TEST_CASE("validate reports column extremes") {
  // Two rows pin the temperature span 40..385.
  TempCsv csv(std::string(kHeader) + "\n" +
              "40,10,A,1.5,a,0.5,100,a1,2,a1r,55\n" +
              "385,10,B,1.5,b,0.5,100,a2,2,a2r,60\n");
  Dataset d = load_csv(csv.path, default_schema_vec());
  ValidationReport report = validate(d);
  CHECK(report.columns[0].min == 40.0);
  CHECK(report.columns[0].max == 385.0);
  CHECK(report.ok());
}

TEST_CASE("validate on a lenient load names each violation") {
  TempCsv csv(std::string(kHeader) + "\n" +
              "200,10,A,1.5,z,0.5,100,a1,2,a1r,55\n" +
              "500,10,A,1.5,a,0.5,100,a1,2,a1r,55\n");
  Dataset d = load_csv_lenient(csv.path, default_schema_vec());
  ValidationReport report = validate(d);
  REQUIRE(report.violations.size() == 2);
  CHECK(report.violations[0].row == 0);
  CHECK(report.violations[0].column == 4);
  CHECK(report.violations[1].row == 1);
  CHECK(report.violations[1].column == 0);
}

TEST_CASE("validate counts missing pressure and builds a label census") {
  TempCsv csv(std::string(kHeader) + "\n" +
              "200,NR,A,1.5,a,0.5,100,a1,2,a1r,55\n" +
              "210,NR,B,1.5,a,0.5,100,a1,2,a1r,56\n" +
              "220,12,B,1.5,b,0.5,100,a1,2,a1r,57\n");
  Dataset d = load_csv(csv.path, default_schema_vec());
  ValidationReport report = validate(d);
  CHECK(report.columns[1].missing == 2);
  REQUIRE(report.columns[4].label_census.size() == 2);
  CHECK(report.columns[4].label_census[0] ==
        std::pair<std::string, std::size_t>{"a", 2});
  CHECK(report.columns[4].label_census[1] ==
        std::pair<std::string, std::size_t>{"b", 1});
}

TEST_CASE("fingerprint is stable across loads and sensitive to content") {
  Dataset d = synth_generate(25, 5, 1.0);
  const std::uint64_t fp = dataset_fingerprint(d);
  write_csv("schema_fp.csv", d);
  Dataset loaded = load_csv("schema_fp.csv", default_schema_vec());
  CHECK(dataset_fingerprint(loaded) == fp);
  loaded.records[3].yield += 0.5;
  CHECK(dataset_fingerprint(loaded) != fp);
  std::remove("schema_fp.csv");
}

TEST_CASE("yield_vector preserves record order") {
  Dataset d = synth_generate(10, 1, 0.0);
  const auto y = yield_vector(d);
  REQUIRE(y.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) CHECK(y[i] == d.records[i].yield);
}
