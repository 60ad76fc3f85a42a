#include "tpayield/synth.hpp"

#include <algorithm>
#include <cmath>

#include "tpayield/errors.hpp"
#include "tpayield/rng.hpp"

namespace tpayield {

namespace {

double unit_scale(const Cell& cell, const FeatureSchema& feature) {
  const auto& range = *feature.allowed_range;
  const double x = cell.kind == Cell::Kind::Missing ? 1.0 : cell.number;
  return (x - range.first) / (range.second - range.first);
}

double label_offset(const std::string& label,
                    std::initializer_list<std::pair<const char*, double>> table) {
  for (const auto& [name, value] : table) {
    if (label == name) return value;
  }
  return 0.0;
}

}  // namespace

double synth_ground_truth(const Record& record) {
  const auto& schema = default_schema();
  const double u_temp = unit_scale(record.inputs[0], schema[0]);
  const double u_pressure = unit_scale(record.inputs[1], schema[1]);
  const double u_amount = unit_scale(record.inputs[3], schema[3]);
  const double u_conc = unit_scale(record.inputs[5], schema[5]);
  const double u_solution = unit_scale(record.inputs[6], schema[6]);
  const double u_time = unit_scale(record.inputs[8], schema[8]);

  double z = -2.6 + 3.0 * u_temp + 1.6 * u_time + 1.2 * u_conc +
             0.8 * u_temp * u_conc + 0.5 * u_pressure - 0.7 * u_amount +
             0.4 * u_solution;
  z += label_offset(record.inputs[2].label,
                    {{"A", 0.05}, {"B", 0.0}, {"C", -0.05}});
  z += label_offset(record.inputs[4].label,
                    {{"a", 0.25},
                     {"b", 0.15},
                     {"c", 0.05},
                     {"d", -0.05},
                     {"e", 0.20},
                     {"f", 0.30},
                     {"g", 0.10},
                     {"h", -0.40}});
  z += label_offset(record.inputs[7].label,
                    {{"a1", 0.10}, {"a2", 0.15}, {"a3", -0.25}});
  z += label_offset(record.inputs[9].label,
                    {{"a1r", 0.10},
                     {"a2r", 0.05},
                     {"a3r", 0.0},
                     {"a4r", -0.05},
                     {"a5r", 0.15},
                     {"a6r", -0.10}});
  return 100.0 / (1.0 + std::exp(-z));
}

Dataset synth_generate(long n, std::uint64_t seed, double noise_sd) {
  if (n < 1) {
    throw Error(ErrorCode::InvalidArgument, "synth_generate: n must be >= 1");
  }
  if (!(noise_sd >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "synth_generate: noise_sd must be >= 0");
  }

  const auto& schema = default_schema();
  Dataset dataset;
  dataset.schema.assign(schema.begin(), schema.end());
  dataset.records.reserve(static_cast<std::size_t>(n));

  for (long i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    Record record;
    for (int c = 0; c < kInputCount; ++c) {
      const FeatureSchema& feature = schema[static_cast<std::size_t>(c)];
      if (feature.kind == FeatureKind::Continuous) {
        record.inputs[static_cast<std::size_t>(c)] = Cell::make_number(
            rng.uniform(feature.allowed_range->first,
                        feature.allowed_range->second));
      } else {
        record.inputs[static_cast<std::size_t>(c)] = Cell::make_label(
            feature.allowed_labels[rng.uniform_index(
                feature.allowed_labels.size())]);
      }
    }
    const double noise = noise_sd * rng.gaussian();
    record.yield =
        std::clamp(synth_ground_truth(record) + noise, 0.0, 100.0);
    record.source_tag = "synth";
    dataset.records.push_back(std::move(record));
  }
  return dataset;
}

}  // namespace tpayield
