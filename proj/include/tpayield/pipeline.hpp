#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpayield/anfis.hpp"
#include "tpayield/feature_stats.hpp"
#include "tpayield/metrics.hpp"
#include "tpayield/mlp.hpp"
#include "tpayield/preprocess.hpp"
#include "tpayield/schema.hpp"

namespace tpayield {

struct PipelineConfig {
  std::string data;
  std::uint64_t seed = 7;
  int folds = 5;
  int repeats = 4;
  int strat_bins = 5;
  int hidden_lo = 2;
  int hidden_hi = 25;
  MlpTrainConfig mlp;
  SubClusterConfig subcluster;
  HybridTrainConfig hybrid;
  double alpha = 0.05;
  std::string out_dir = "out";
  int threads = 1;
};

/// Experiment parameters only: out_dir and threads change where and how fast
/// the run executes, never what it computes, so they stay out of the echo and
/// reports stay byte-comparable across output locations and thread counts.
nlohmann::json pipeline_config_echo(const PipelineConfig& config);

/// Strict parse: unknown keys anywhere raise InvalidArgument naming the key.
PipelineConfig pipeline_config_from_json(const nlohmann::json& doc);

/// Which stage of the run read a batch of target values. Train and
/// validation reads carry the owning triple; full-dataset statistics run
/// before any split exists and use fold = repeat = -1.
enum class AccessPhase {
  Stats,
  SweepTrain,
  SweepValidation,
  FinalTrain,
  FinalValidation,
  TestEval,
};

const char* access_phase_name(AccessPhase phase);

struct TargetRead {
  AccessPhase phase;
  int fold;
  int repeat;
  std::size_t index;
};

/// Thread-safe record of every target read the pipeline performs; tests use
/// it to prove test-subset isolation.
class TargetAccessLog {
 public:
  void record(AccessPhase phase, int fold, int repeat,
              const std::vector<std::size_t>& indices);
  std::vector<TargetRead> snapshot() const;

 private:
  mutable std::mutex mutex_;
  std::vector<TargetRead> reads_;
};

struct DatasetStats {
  SignificanceTable significance;
  FeatureRanking ranking;
};

/// Full-dataset screening: significance tests per feature plus the logistic
/// feature ranking on encoded, power-transformed columns.
DatasetStats compute_dataset_stats(const Dataset& dataset, double alpha,
                                   TargetAccessLog* log = nullptr);

struct PipelineResult {
  nlohmann::json report;
  std::string report_path;
  SplitPlan plan;
  int fold = 0;
  int repeat = 0;
  int hidden = 0;
  MetricPair mlp_train, mlp_test, anfis_train, anfis_test;
  // preprocessing state of the winning triple, for leakage audits
  EncodingMap encoding;
  PowerTransformParams power;
  MlpParams mlp;
  AnfisModel anfis;
};

/// End-to-end run: full-data statistics, repeated stratified splits,
/// per-triple preprocessing fit on train, the hidden-size sweep over every
/// triple, winner selection by validation R^2 (ties to the lowest
/// (fold, repeat, hidden)), final MLP + ANFIS training on the winning train
/// subset, one evaluation on its untouched test subset, and artifact
/// emission under config.out_dir.
PipelineResult run_pipeline(const Dataset& dataset,
                            const PipelineConfig& config,
                            TargetAccessLog* log = nullptr);

}  // namespace tpayield
