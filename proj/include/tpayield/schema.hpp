#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tpayield {

inline constexpr int kInputCount = 10;
inline constexpr const char* kYieldColumn = "tpa_yield_pct";
inline constexpr const char* kMissingMarker = "NR";

enum class FeatureKind { Continuous, Categorical };

struct FeatureSchema {
  std::string name;
  FeatureKind kind = FeatureKind::Continuous;
  std::string unit;
  // Continuous features only.
  std::optional<std::pair<double, double>> allowed_range;
  bool missing_allowed = false;
  // Categorical features only, in canonical vocabulary order.
  std::vector<std::string> allowed_labels;
};

/// The ten input columns, in file order, with ranges and label vocabularies
/// covering the literature data this toolkit models.
const std::array<FeatureSchema, kInputCount>& default_schema();

inline std::vector<FeatureSchema> default_schema_vec() {
  const auto& a = default_schema();
  return {a.begin(), a.end()};
}

/// One cell of a record: a number, a categorical label, or explicitly missing
/// (only the pressure column admits missing values, written as "NR").
struct Cell {
  enum class Kind { Number, Label, Missing };
  Kind kind = Kind::Missing;
  double number = 0.0;
  std::string label;

  static Cell make_number(double v) { return {Kind::Number, v, {}}; }
  static Cell make_label(std::string s) {
    return {Kind::Label, 0.0, std::move(s)};
  }
  static Cell make_missing() { return {Kind::Missing, 0.0, {}}; }

  bool operator==(const Cell&) const = default;
};

struct Record {
  std::array<Cell, kInputCount> inputs;
  double yield = 0.0;
  std::string source_tag;  // optional provenance label

  bool operator==(const Record&) const = default;
};

struct Dataset {
  std::vector<FeatureSchema> schema;
  std::vector<Record> records;

  std::size_t n() const { return records.size(); }
};

struct Violation {
  long row;     // 0-based record index
  int column;   // 0-based schema index, kInputCount for the yield column
  std::string message;
};

struct ColumnSummary {
  std::string name;
  // Continuous columns.
  double min = 0.0;
  double max = 0.0;
  std::size_t missing = 0;
  // Categorical columns: label -> count.
  std::vector<std::pair<std::string, std::size_t>> label_census;
};

struct ValidationReport {
  std::vector<ColumnSummary> columns;  // one per input column + yield
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

/// Strict CSV load: throws on the first structural or invariant violation.
Dataset load_csv(const std::string& path,
                 const std::vector<FeatureSchema>& schema);

/// Lenient CSV load for auditing: only structural problems throw
/// (unparseable numbers, wrong column count); range and label violations
/// survive into the returned dataset for validate() to report.
Dataset load_csv_lenient(const std::string& path,
                         const std::vector<FeatureSchema>& schema);

void write_csv(const std::string& path, const Dataset& dataset);

/// Per-column census plus the list of every schema-invariant violation.
ValidationReport validate(const Dataset& dataset);

/// Content hash (FNV-1a over the canonical CSV serialization) used to
/// fingerprint datasets in run reports.
std::uint64_t dataset_fingerprint(const Dataset& dataset);

/// Yield values as a vector, in record order.
std::vector<double> yield_vector(const Dataset& dataset);

}  // namespace tpayield
