#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tpayield/feature_stats.hpp"
#include "tpayield/metrics.hpp"

namespace tpayield {

/// Writes parity-plot data: one `# tag=... r2=... rmse=... n=...` comment
/// line, a column header, then `index,real,predicted,residual` rows
/// (residual = predicted - real). Numbers print in shortest round-trip form
/// so the metrics can be recomputed exactly from the file.
void emit_parity_csv(const std::string& path, const std::vector<double>& y,
                     const std::vector<double>& yhat, const std::string& tag);

nlohmann::json significance_table_json(const SignificanceTable& table);
nlohmann::json feature_ranking_json(const FeatureRanking& ranking);
nlohmann::json metric_pair_json(const MetricPair& metrics);

/// Aligned-column text rendering of the significance table, rows ordered by
/// ascending p-value (ties keep schema order).
std::string significance_table_text(const SignificanceTable& table);

/// Aligned-column text rendering of the ranking, strongest feature first.
std::string feature_ranking_text(const FeatureRanking& ranking);

struct RunReportInputs {
  std::uint64_t dataset_fingerprint = 0;
  std::size_t dataset_rows = 0;
  nlohmann::json config_echo;
  nlohmann::json seeds;
  nlohmann::json split;       // selected fold/repeat and subset sizes
  int hidden_size = 0;
  nlohmann::json sweep_curve;  // per-hidden-size validation metrics
  MetricPair mlp_train, mlp_test, anfis_train, anfis_test;
  SignificanceTable significance;
  FeatureRanking ranking;
  // paths relative to the report's directory
  std::vector<std::string> artifacts;
  std::string out_dir;  // where artifact existence is checked
};

/// Assembles the single-document run report. Every artifact path must exist
/// under out_dir (MissingArtifact otherwise). Serialize with dump_json_17
/// for byte-stable output.
nlohmann::json build_report(const RunReportInputs& inputs);

}  // namespace tpayield
