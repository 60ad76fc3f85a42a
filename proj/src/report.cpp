#include "tpayield/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tpayield/errors.hpp"
#include "tpayield/serialize.hpp"

namespace tpayield {

namespace {

std::string format_17g(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace

void emit_parity_csv(const std::string& path, const std::vector<double>& y,
                     const std::vector<double>& yhat,
                     const std::string& tag) {
  if (y.size() != yhat.size()) {
    throw Error(ErrorCode::LengthMismatch, "emit_parity_csv: length mismatch");
  }
  const MetricPair metrics = metric_pair(y, yhat);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::Io, "cannot write " + path);
  }
  out << "# tag=" << tag << " r2=" << format_17g(metrics.r2)
      << " rmse=" << format_17g(metrics.rmse) << " n=" << metrics.n << "\n";
  out << "index,real,predicted,residual\n";
  for (std::size_t i = 0; i < y.size(); ++i) {
    out << i << ',' << format_double(y[i]) << ',' << format_double(yhat[i])
        << ',' << format_double(yhat[i] - y[i]) << '\n';
  }
}

nlohmann::json significance_table_json(const SignificanceTable& table) {
  nlohmann::json doc;
  doc["alpha"] = table.alpha;
  doc["rows"] = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json entry = {{"feature", row.feature},
                            {"test", row.test},
                            {"statistic", row.statistic},
                            {"p", row.p},
                            {"significant", row.significant}};
    if (!row.note.empty()) entry["note"] = row.note;
    doc["rows"].push_back(std::move(entry));
  }
  return doc;
}

nlohmann::json feature_ranking_json(const FeatureRanking& ranking) {
  nlohmann::json doc;
  doc["threshold"] = ranking.threshold;
  doc["ridge_fallback"] = ranking.ridge_fallback;
  doc["iterations"] = ranking.iterations;
  doc["entries"] = nlohmann::json::array();
  for (const auto& entry : ranking.entries) {
    doc["entries"].push_back({{"feature", entry.feature},
                              {"column", entry.column},
                              {"weight", entry.weight},
                              {"rank", entry.rank}});
  }
  return doc;
}

nlohmann::json metric_pair_json(const MetricPair& metrics) {
  return {{"r2", metrics.r2}, {"rmse", metrics.rmse}, {"n", metrics.n}};
}

std::string significance_table_text(const SignificanceTable& table) {
  std::vector<const SignificanceRow*> rows;
  for (const auto& row : table.rows) rows.push_back(&row);
  std::stable_sort(rows.begin(), rows.end(),
                   [](const SignificanceRow* a, const SignificanceRow* b) {
                     return a->p < b->p;
                   });
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-18s %-15s %12s %12s %s\n", "feature",
                "test", "statistic", "p", "significant");
  out += line;
  for (const auto* row : rows) {
    std::snprintf(line, sizeof(line), "%-18s %-15s %12.6g %12.6g %s%s%s\n",
                  row->feature.c_str(), row->test.c_str(), row->statistic,
                  row->p, row->significant ? "yes" : "no",
                  row->note.empty() ? "" : "  note: ",
                  row->note.c_str());
    out += line;
  }
  return out;
}

std::string feature_ranking_text(const FeatureRanking& ranking) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%4s %-18s %s\n", "rank", "feature",
                "|coefficient|");
  out += line;
  for (const auto& entry : ranking.entries) {
    std::snprintf(line, sizeof(line), "%4d %-18s %.6g\n", entry.rank,
                  entry.feature.c_str(), entry.weight);
    out += line;
  }
  return out;
}

nlohmann::json build_report(const RunReportInputs& inputs) {
  for (const auto& artifact : inputs.artifacts) {
    const std::filesystem::path path =
        std::filesystem::path(inputs.out_dir) / artifact;
    if (!std::filesystem::exists(path)) {
      throw Error(ErrorCode::MissingArtifact,
                  "build_report: missing artifact " + path.string());
    }
  }

  char fingerprint[32];
  std::snprintf(fingerprint, sizeof(fingerprint), "%016llx",
                static_cast<unsigned long long>(inputs.dataset_fingerprint));

  nlohmann::json doc;
  doc["dataset"] = {{"rows", inputs.dataset_rows},
                    {"fingerprint", fingerprint}};
  doc["config"] = inputs.config_echo;
  doc["seeds"] = inputs.seeds;
  doc["split"] = inputs.split;
  doc["hidden_size"] = inputs.hidden_size;
  doc["sweep"] = inputs.sweep_curve;
  doc["mlp"] = {{"train", metric_pair_json(inputs.mlp_train)},
                {"test", metric_pair_json(inputs.mlp_test)}};
  doc["anfis"] = {{"train", metric_pair_json(inputs.anfis_train)},
                  {"test", metric_pair_json(inputs.anfis_test)}};
  doc["significance"] = significance_table_json(inputs.significance);
  doc["feature_ranking"] = feature_ranking_json(inputs.ranking);
  doc["artifacts"] = inputs.artifacts;
  return doc;
}

}  // namespace tpayield
