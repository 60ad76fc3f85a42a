#include "tpayield/schema.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "tpayield/errors.hpp"
#include "tpayield/serialize.hpp"

namespace tpayield {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateFeature: return "DegenerateFeature";
    case ErrorCode::UnseenLabel: return "UnseenLabel";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::DegenerateTarget: return "DegenerateTarget";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

const std::array<FeatureSchema, kInputCount>& default_schema() {
  static const std::array<FeatureSchema, kInputCount> schema = {{
      {"temperature_C", FeatureKind::Continuous, "°C",
       std::make_pair(40.0, 385.0), false, {}},
      {"pressure_atm", FeatureKind::Continuous, "atm",
       std::make_pair(1.0, 296.0), true, {}},
      {"pet_config", FeatureKind::Categorical, "", std::nullopt, false,
       {"A", "B", "C"}},
      {"pet_amount_mol", FeatureKind::Continuous, "mol",
       std::make_pair(0.001, 11.5), false, {}},
      {"catalyst_type", FeatureKind::Categorical, "", std::nullopt, false,
       {"a", "b", "c", "d", "e", "f", "g", "h"}},
      {"catalyst_conc_M", FeatureKind::Continuous, "M",
       std::make_pair(0.0, 168.8), false, {}},
      {"solution_mL", FeatureKind::Continuous, "mL",
       std::make_pair(4.6, 1500.0), false, {}},
      {"reaction_type", FeatureKind::Categorical, "", std::nullopt, false,
       {"a1", "a2", "a3"}},
      {"time_hr", FeatureKind::Continuous, "hr",
       std::make_pair(0.02, 145.0), false, {}},
      {"heat_mix", FeatureKind::Categorical, "", std::nullopt, false,
       {"a1r", "a2r", "a3r", "a4r", "a5r", "a6r"}},
  }};
  return schema;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

bool label_allowed(const FeatureSchema& feature, const std::string& label) {
  return std::find(feature.allowed_labels.begin(),
                   feature.allowed_labels.end(),
                   label) != feature.allowed_labels.end();
}

Dataset parse_csv(const std::string& path,
                  const std::vector<FeatureSchema>& schema, bool strict) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open " + path);
  }

  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::EmptyDataset, path + ": empty file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_line(line);
  const std::size_t expected = schema.size() + 1;
  if (header.size() != expected) {
    throw Error(ErrorCode::MissingColumn,
                path + ": expected " + std::to_string(expected) +
                    " columns, found " + std::to_string(header.size()));
  }
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (header[c] != schema[c].name) {
      throw Error(ErrorCode::MissingColumn,
                  path + ": header column " + std::to_string(c) + " is '" +
                      header[c] + "', expected '" + schema[c].name + "'",
                  0, static_cast<long>(c));
    }
  }
  if (header.back() != kYieldColumn) {
    throw Error(ErrorCode::MissingColumn,
                path + ": last column must be '" + std::string(kYieldColumn) +
                    "'",
                0, static_cast<long>(schema.size()));
  }

  Dataset dataset;
  dataset.schema.assign(schema.begin(), schema.end());

  long row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != expected) {
      throw Error(ErrorCode::ParseError,
                  path + ": row " + std::to_string(row) + " has " +
                      std::to_string(fields.size()) + " fields",
                  row, 0);
    }

    Record record;
    for (int c = 0; c < kInputCount; ++c) {
      const FeatureSchema& feature = schema[static_cast<std::size_t>(c)];
      const std::string& text = fields[static_cast<std::size_t>(c)];
      if (feature.kind == FeatureKind::Continuous) {
        if (text == kMissingMarker) {
          if (strict && !feature.missing_allowed) {
            throw Error(ErrorCode::ParseError,
                        path + ": missing value in column '" + feature.name +
                            "' at row " + std::to_string(row),
                        row, c);
          }
          record.inputs[static_cast<std::size_t>(c)] = Cell::make_missing();
          continue;
        }
        double value = 0.0;
        if (!parse_double(text, value) || !std::isfinite(value)) {
          throw Error(ErrorCode::ParseError,
                      path + ": cannot parse '" + text + "' at row " +
                          std::to_string(row) + ", column '" + feature.name +
                          "'",
                      row, c);
        }
        if (strict && feature.allowed_range &&
            (value < feature.allowed_range->first ||
             value > feature.allowed_range->second)) {
          throw Error(ErrorCode::OutOfRange,
                      path + ": " + feature.name + " = " + text + " at row " +
                          std::to_string(row) + " outside [" +
                          format_double(feature.allowed_range->first) + ", " +
                          format_double(feature.allowed_range->second) + "]",
                      row, c);
        }
        record.inputs[static_cast<std::size_t>(c)] = Cell::make_number(value);
      } else {
        if (strict && !label_allowed(feature, text)) {
          throw Error(ErrorCode::UnknownLabel,
                      path + ": label '" + text + "' at row " +
                          std::to_string(row) + " not in vocabulary of '" +
                          feature.name + "'",
                      row, c);
        }
        record.inputs[static_cast<std::size_t>(c)] = Cell::make_label(text);
      }
    }

    const std::string& ytext = fields.back();
    if (!parse_double(ytext, record.yield) || !std::isfinite(record.yield)) {
      throw Error(ErrorCode::ParseError,
                  path + ": cannot parse yield '" + ytext + "' at row " +
                      std::to_string(row),
                  row, kInputCount);
    }
    if (strict && (record.yield < 0.0 || record.yield > 100.0)) {
      throw Error(ErrorCode::OutOfRange,
                  path + ": yield " + ytext + " at row " +
                      std::to_string(row) + " outside [0, 100]",
                  row, kInputCount);
    }
    dataset.records.push_back(std::move(record));
    ++row;
  }

  if (dataset.records.empty()) {
    throw Error(ErrorCode::EmptyDataset, path + ": no data rows");
  }
  return dataset;
}

std::string csv_text(const Dataset& dataset) {
  std::string out;
  for (const auto& feature : dataset.schema) {
    out += feature.name;
    out += ',';
  }
  out += kYieldColumn;
  out += '\n';
  for (const auto& record : dataset.records) {
    for (const auto& cell : record.inputs) {
      switch (cell.kind) {
        case Cell::Kind::Number: out += format_double(cell.number); break;
        case Cell::Kind::Label: out += cell.label; break;
        case Cell::Kind::Missing: out += kMissingMarker; break;
      }
      out += ',';
    }
    out += format_double(record.yield);
    out += '\n';
  }
  return out;
}

}  // namespace

Dataset load_csv(const std::string& path,
                 const std::vector<FeatureSchema>& schema) {
  return parse_csv(path, schema, /*strict=*/true);
}

Dataset load_csv_lenient(const std::string& path,
                         const std::vector<FeatureSchema>& schema) {
  return parse_csv(path, schema, /*strict=*/false);
}

void write_csv(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::Io, "cannot write " + path);
  }
  out << csv_text(dataset);
}

ValidationReport validate(const Dataset& dataset) {
  ValidationReport report;
  report.columns.resize(static_cast<std::size_t>(kInputCount) + 1);

  for (int c = 0; c < kInputCount; ++c) {
    const FeatureSchema& feature = dataset.schema[static_cast<std::size_t>(c)];
    ColumnSummary& summary = report.columns[static_cast<std::size_t>(c)];
    summary.name = feature.name;

    if (feature.kind == FeatureKind::Continuous) {
      bool any = false;
      for (std::size_t r = 0; r < dataset.records.size(); ++r) {
        const Cell& cell = dataset.records[r].inputs[static_cast<std::size_t>(c)];
        if (cell.kind == Cell::Kind::Missing) {
          ++summary.missing;
          if (!feature.missing_allowed) {
            report.violations.push_back(
                {static_cast<long>(r), c,
                 feature.name + ": missing value not allowed"});
          }
          continue;
        }
        if (cell.kind != Cell::Kind::Number || !std::isfinite(cell.number)) {
          report.violations.push_back(
              {static_cast<long>(r), c, feature.name + ": non-numeric value"});
          continue;
        }
        if (!any) {
          summary.min = summary.max = cell.number;
          any = true;
        } else {
          summary.min = std::min(summary.min, cell.number);
          summary.max = std::max(summary.max, cell.number);
        }
        if (feature.allowed_range &&
            (cell.number < feature.allowed_range->first ||
             cell.number > feature.allowed_range->second)) {
          report.violations.push_back(
              {static_cast<long>(r), c,
               feature.name + " = " + format_double(cell.number) +
                   " outside [" + format_double(feature.allowed_range->first) +
                   ", " + format_double(feature.allowed_range->second) + "]"});
        }
      }
    } else {
      std::map<std::string, std::size_t> census;
      for (std::size_t r = 0; r < dataset.records.size(); ++r) {
        const Cell& cell = dataset.records[r].inputs[static_cast<std::size_t>(c)];
        if (cell.kind != Cell::Kind::Label) {
          report.violations.push_back(
              {static_cast<long>(r), c,
               feature.name + ": expected a categorical label"});
          continue;
        }
        ++census[cell.label];
        if (!label_allowed(feature, cell.label)) {
          report.violations.push_back(
              {static_cast<long>(r), c,
               feature.name + ": label '" + cell.label +
                   "' not in vocabulary"});
        }
      }
      summary.label_census.assign(census.begin(), census.end());
    }
  }

  ColumnSummary& ysummary = report.columns.back();
  ysummary.name = kYieldColumn;
  for (std::size_t r = 0; r < dataset.records.size(); ++r) {
    const double y = dataset.records[r].yield;
    if (r == 0) {
      ysummary.min = ysummary.max = y;
    } else {
      ysummary.min = std::min(ysummary.min, y);
      ysummary.max = std::max(ysummary.max, y);
    }
    if (!std::isfinite(y) || y < 0.0 || y > 100.0) {
      report.violations.push_back(
          {static_cast<long>(r), kInputCount,
           std::string(kYieldColumn) + " = " + format_double(y) +
               " outside [0, 100]"});
    }
  }

  std::stable_sort(report.violations.begin(), report.violations.end(),
                   [](const Violation& a, const Violation& b) {
                     return a.row != b.row ? a.row < b.row
                                           : a.column < b.column;
                   });
  return report;
}

std::uint64_t dataset_fingerprint(const Dataset& dataset) {
  return fnv1a64(csv_text(dataset));
}

std::vector<double> yield_vector(const Dataset& dataset) {
  std::vector<double> y;
  y.reserve(dataset.records.size());
  for (const auto& record : dataset.records) y.push_back(record.yield);
  return y;
}

}  // namespace tpayield
