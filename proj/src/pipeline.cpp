#include "tpayield/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <thread>
#include <tuple>

#include "tpayield/errors.hpp"
#include "tpayield/report.hpp"
#include "tpayield/rng.hpp"
#include "tpayield/serialize.hpp"

namespace tpayield {

namespace {

constexpr int kLogisticMaxIter = 200;

void expect_keys(const nlohmann::json& doc,
                 const std::vector<std::string>& allowed,
                 const std::string& scope) {
  for (const auto& item : doc.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) ==
        allowed.end()) {
      throw Error(ErrorCode::InvalidArgument,
                  "unknown config key '" + item.key() + "' in " + scope);
    }
  }
}

template <typename T>
void read_if(const nlohmann::json& doc, const char* key, T& out) {
  if (doc.contains(key)) out = doc.at(key).get<T>();
}

void check_config(const PipelineConfig& config) {
  if (config.folds < 2 || config.repeats < 1 || config.strat_bins < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "need folds >= 2, repeats >= 1, strat_bins >= 1");
  }
  if (config.hidden_lo < 1 || config.hidden_hi < config.hidden_lo) {
    throw Error(ErrorCode::InvalidArgument,
                "need 1 <= hidden_lo <= hidden_hi");
  }
  if (!(config.alpha > 0.0) || !(config.alpha < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  }
  if (config.threads < 1) {
    throw Error(ErrorCode::InvalidArgument, "threads must be >= 1");
  }
}

Dataset subset(const Dataset& dataset, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.schema = dataset.schema;
  out.records.reserve(rows.size());
  for (const std::size_t row : rows) out.records.push_back(dataset.records[row]);
  return out;
}

std::vector<double> gather_targets(const std::vector<double>& y,
                                   const std::vector<std::size_t>& rows,
                                   AccessPhase phase, int fold, int repeat,
                                   TargetAccessLog* log) {
  if (log != nullptr) log->record(phase, fold, repeat, rows);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const std::size_t row : rows) out.push_back(y[row]);
  return out;
}

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body) {
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)),
                            count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

nlohmann::json sweep_entry_json(const SweepEntry& entry) {
  nlohmann::json doc = {{"hidden", entry.hidden}, {"valid", entry.valid}};
  if (entry.valid) {
    doc["train_r2"] = entry.train_r2;
    doc["train_rmse"] = entry.train_rmse;
    doc["val_r2"] = entry.val_r2;
    doc["val_rmse"] = entry.val_rmse;
  } else {
    doc["error"] = entry.error;
  }
  return doc;
}

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage ") + stage + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::Io, "cannot write " + path.string());
  }
  out << content;
}

}  // namespace

nlohmann::json pipeline_config_echo(const PipelineConfig& config) {
  return {
      {"data", config.data},
      {"seed", config.seed},
      {"folds", config.folds},
      {"repeats", config.repeats},
      {"strat_bins", config.strat_bins},
      {"hidden", {{"lo", config.hidden_lo}, {"hi", config.hidden_hi}}},
      {"mlp",
       {{"trainer", config.mlp.trainer},
        {"learning_rate", config.mlp.learning_rate},
        {"max_iter", config.mlp.max_iter},
        {"lbfgs_memory", config.mlp.lbfgs_memory},
        {"tolerance", config.mlp.tolerance}}},
      {"subcluster",
       {{"range_of_influence", config.subcluster.range_of_influence},
        {"squash_factor", config.subcluster.squash_factor},
        {"acceptance_ratio", config.subcluster.acceptance_ratio},
        {"rejection_ratio", config.subcluster.rejection_ratio}}},
      {"hybrid",
       {{"epochs", config.hybrid.epochs},
        {"max_iter", config.hybrid.max_iter},
        {"initial_step", config.hybrid.initial_step},
        {"step_decrease", config.hybrid.step_decrease},
        {"step_increase", config.hybrid.step_increase}}},
      {"alpha", config.alpha},
  };
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& doc) {
  PipelineConfig config;
  try {
    expect_keys(doc,
                {"data", "seed", "folds", "repeats", "strat_bins", "hidden",
                 "mlp", "subcluster", "hybrid", "alpha", "out_dir", "threads"},
                "top level");
    read_if(doc, "data", config.data);
    read_if(doc, "seed", config.seed);
    read_if(doc, "folds", config.folds);
    read_if(doc, "repeats", config.repeats);
    read_if(doc, "strat_bins", config.strat_bins);
    read_if(doc, "alpha", config.alpha);
    read_if(doc, "out_dir", config.out_dir);
    read_if(doc, "threads", config.threads);
    if (doc.contains("hidden")) {
      const nlohmann::json& hidden = doc.at("hidden");
      expect_keys(hidden, {"lo", "hi"}, "hidden");
      read_if(hidden, "lo", config.hidden_lo);
      read_if(hidden, "hi", config.hidden_hi);
    }
    if (doc.contains("mlp")) {
      const nlohmann::json& mlp = doc.at("mlp");
      expect_keys(mlp,
                  {"trainer", "learning_rate", "max_iter", "lbfgs_memory",
                   "tolerance"},
                  "mlp");
      read_if(mlp, "trainer", config.mlp.trainer);
      read_if(mlp, "learning_rate", config.mlp.learning_rate);
      read_if(mlp, "max_iter", config.mlp.max_iter);
      read_if(mlp, "lbfgs_memory", config.mlp.lbfgs_memory);
      read_if(mlp, "tolerance", config.mlp.tolerance);
    }
    if (doc.contains("subcluster")) {
      const nlohmann::json& sub = doc.at("subcluster");
      expect_keys(sub,
                  {"range_of_influence", "squash_factor", "acceptance_ratio",
                   "rejection_ratio"},
                  "subcluster");
      read_if(sub, "range_of_influence", config.subcluster.range_of_influence);
      read_if(sub, "squash_factor", config.subcluster.squash_factor);
      read_if(sub, "acceptance_ratio", config.subcluster.acceptance_ratio);
      read_if(sub, "rejection_ratio", config.subcluster.rejection_ratio);
    }
    if (doc.contains("hybrid")) {
      const nlohmann::json& hybrid = doc.at("hybrid");
      expect_keys(hybrid,
                  {"epochs", "max_iter", "initial_step", "step_decrease",
                   "step_increase"},
                  "hybrid");
      read_if(hybrid, "epochs", config.hybrid.epochs);
      read_if(hybrid, "max_iter", config.hybrid.max_iter);
      read_if(hybrid, "initial_step", config.hybrid.initial_step);
      read_if(hybrid, "step_decrease", config.hybrid.step_decrease);
      read_if(hybrid, "step_increase", config.hybrid.step_increase);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError,
                std::string("malformed config: ") + e.what());
  }
  return config;
}

const char* access_phase_name(AccessPhase phase) {
  switch (phase) {
    case AccessPhase::Stats: return "stats";
    case AccessPhase::SweepTrain: return "sweep_train";
    case AccessPhase::SweepValidation: return "sweep_validation";
    case AccessPhase::FinalTrain: return "final_train";
    case AccessPhase::FinalValidation: return "final_validation";
    case AccessPhase::TestEval: return "test_eval";
  }
  return "unknown";
}

void TargetAccessLog::record(AccessPhase phase, int fold, int repeat,
                             const std::vector<std::size_t>& indices) {
  const std::lock_guard<std::mutex> lock(mutex_);
  reads_.reserve(reads_.size() + indices.size());
  for (const std::size_t index : indices) {
    reads_.push_back({phase, fold, repeat, index});
  }
}

std::vector<TargetRead> TargetAccessLog::snapshot() const {
  const std::lock_guard<std::mutex> lock(mutex_);
  return reads_;
}

DatasetStats compute_dataset_stats(const Dataset& dataset, double alpha,
                                   TargetAccessLog* log) {
  if (dataset.records.empty()) {
    throw Error(ErrorCode::EmptyDataset, "no records to analyze");
  }
  const std::vector<double> y = yield_vector(dataset);
  std::vector<std::size_t> all(dataset.n());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  gather_targets(y, all, AccessPhase::Stats, -1, -1, log);

  DatasetStats stats;
  stats.significance = significance_table(dataset, alpha);
  const EncodingMap encoding = fit_encoding(dataset);
  const Eigen::MatrixXd raw = apply_encoding(encoding, dataset);
  const Eigen::MatrixXd X =
      apply_power_transform(fit_power_transform(raw), raw);
  std::vector<std::string> names;
  names.reserve(dataset.schema.size());
  for (const FeatureSchema& feature : dataset.schema) {
    names.push_back(feature.name);
  }
  stats.ranking = rank_features_logistic(X, y, kLogisticMaxIter, names);
  return stats;
}

PipelineResult run_pipeline(const Dataset& dataset,
                            const PipelineConfig& config,
                            TargetAccessLog* log) {
  check_config(config);
  if (dataset.records.empty()) {
    throw Error(ErrorCode::EmptyDataset, "no records to run on");
  }
  const std::vector<double> y_full = yield_vector(dataset);

  // 1. full-data screening statistics (runs before any split exists)
  const DatasetStats stats = run_stage(
      "stats", [&]() { return compute_dataset_stats(dataset, config.alpha, log); });

  // 2. repeated stratified splits
  const SplitPlan plan = run_stage("split", [&]() {
    return make_splits(dataset.n(), config.folds, config.repeats,
                       config.strat_bins, y_full, config.seed);
  });

  // 3 + 4. per-triple preprocessing (fit on train only) and the sweep
  struct TripleState {
    bool valid = false;
    std::string error;
    EncodingMap encoding;
    PowerTransformParams power;
    Eigen::MatrixXd train_X, val_X, test_X;
    SweepResult sweep;
  };
  std::vector<TripleState> states(plan.triples.size());
  run_stage("sweep", [&]() {
    parallel_for(plan.triples.size(), config.threads, [&](std::size_t i) {
      const SplitTriple& triple = plan.triples[i];
      TripleState& state = states[i];
      try {
        const Dataset train_set = subset(dataset, triple.train);
        state.encoding = fit_encoding(train_set);
        const Eigen::MatrixXd train_raw =
            apply_encoding(state.encoding, train_set);
        state.power = fit_power_transform(train_raw);
        state.train_X = apply_power_transform(state.power, train_raw);
        state.val_X = apply_power_transform(
            state.power,
            apply_encoding(state.encoding, subset(dataset, triple.validation)));
        state.test_X = apply_power_transform(
            state.power,
            apply_encoding(state.encoding, subset(dataset, triple.test)));
        const std::vector<double> train_y =
            gather_targets(y_full, triple.train, AccessPhase::SweepTrain,
                           triple.fold, triple.repeat, log);
        const std::vector<double> val_y =
            gather_targets(y_full, triple.validation,
                           AccessPhase::SweepValidation, triple.fold,
                           triple.repeat, log);
        state.sweep = sweep_hidden_size(
            config.hidden_lo, config.hidden_hi, state.train_X, train_y,
            state.val_X, val_y, config.mlp,
            derive_seed(config.seed,
                        {static_cast<std::uint64_t>(triple.fold),
                         static_cast<std::uint64_t>(triple.repeat)}));
        state.valid = true;
      } catch (const Error& e) {
        state.error = e.what();
      }
    });
    return 0;
  });

  // 5. winner = highest validation R^2, ties to lowest (fold, repeat, hidden)
  std::size_t best_triple = 0;
  int best_hidden = 0;
  double best_val_r2 = -std::numeric_limits<double>::infinity();
  std::tuple<int, int, int> best_key{0, 0, 0};
  bool found = false;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (!states[i].valid) continue;
    const SplitTriple& triple = plan.triples[i];
    for (const SweepEntry& entry : states[i].sweep.curve) {
      if (!entry.valid) continue;
      const std::tuple<int, int, int> key{triple.fold, triple.repeat,
                                          entry.hidden};
      if (!found || entry.val_r2 > best_val_r2 ||
          (entry.val_r2 == best_val_r2 && key < best_key)) {
        found = true;
        best_val_r2 = entry.val_r2;
        best_key = key;
        best_triple = i;
        best_hidden = entry.hidden;
      }
    }
  }
  if (!found) {
    std::string detail = "every split failed";
    for (const TripleState& state : states) {
      if (!state.error.empty()) {
        detail += "; first error: " + state.error;
        break;
      }
    }
    throw Error(ErrorCode::NonConvergence, "stage select: " + detail);
  }

  const SplitTriple& winner = plan.triples[best_triple];
  const TripleState& chosen = states[best_triple];
  const std::uint64_t task_seed =
      derive_seed(config.seed, {static_cast<std::uint64_t>(winner.fold),
                                static_cast<std::uint64_t>(winner.repeat)});
  const std::uint64_t mlp_seed =
      derive_seed(task_seed, {static_cast<std::uint64_t>(best_hidden)});

  // 6. final models on the winning train subset
  const std::vector<double> train_y =
      gather_targets(y_full, winner.train, AccessPhase::FinalTrain,
                     winner.fold, winner.repeat, log);
  PipelineResult result;
  run_stage("final_mlp", [&]() {
    const MlpParams initial =
        mlp_init(kInputCount, best_hidden, mlp_seed);
    result.mlp = mlp_train(initial, chosen.train_X, train_y, config.mlp).params;
    return 0;
  });
  const std::vector<double> final_val_y =
      gather_targets(y_full, winner.validation, AccessPhase::FinalValidation,
                     winner.fold, winner.repeat, log);
  run_stage("final_anfis", [&]() {
    std::vector<std::size_t> centers =
        subtractive_cluster(chosen.train_X, config.subcluster);
    const std::size_t budget = consequent_rule_budget(
        static_cast<std::size_t>(chosen.train_X.rows()), kInputCount);
    if (centers.size() > budget) centers.resize(budget);
    const AnfisModel initial =
        init_from_clusters(centers, chosen.train_X, config.subcluster);
    result.anfis = train_hybrid(initial, chosen.train_X, train_y,
                                config.hybrid, &chosen.val_X, &final_val_y)
                       .model;
    return 0;
  });

  // 7. the single test-subset read of the whole run
  const std::vector<double> test_y =
      gather_targets(y_full, winner.test, AccessPhase::TestEval, winner.fold,
                     winner.repeat, log);
  const std::vector<double> mlp_train_pred =
      mlp_predict(result.mlp, chosen.train_X);
  const std::vector<double> mlp_test_pred =
      mlp_predict(result.mlp, chosen.test_X);
  const std::vector<double> anfis_train_pred =
      anfis_predict(result.anfis, chosen.train_X);
  const std::vector<double> anfis_test_pred =
      anfis_predict(result.anfis, chosen.test_X);
  result.mlp_train = metric_pair(train_y, mlp_train_pred);
  result.mlp_test = metric_pair(test_y, mlp_test_pred);
  result.anfis_train = metric_pair(train_y, anfis_train_pred);
  result.anfis_test = metric_pair(test_y, anfis_test_pred);

  // 8. artifacts, then the report that indexes them
  const std::filesystem::path out_dir(config.out_dir);
  run_stage("emit", [&]() {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
      throw Error(ErrorCode::Io, "cannot create " + out_dir.string());
    }
    emit_parity_csv((out_dir / "mlp_train_parity.csv").string(), train_y,
                    mlp_train_pred, "mlp_train");
    emit_parity_csv((out_dir / "mlp_test_parity.csv").string(), test_y,
                    mlp_test_pred, "mlp_test");
    emit_parity_csv((out_dir / "anfis_train_parity.csv").string(), train_y,
                    anfis_train_pred, "anfis_train");
    emit_parity_csv((out_dir / "anfis_test_parity.csv").string(), test_y,
                    anfis_test_pred, "anfis_test");
    write_text_file(out_dir / "mlp_model.json",
                    dump_json_17(mlp_to_json(result.mlp)) + "\n");
    write_text_file(out_dir / "anfis_model.json",
                    dump_json_17(anfis_to_json(result.anfis)) + "\n");
    const nlohmann::json preprocess = {
        {"fold", winner.fold},
        {"repeat", winner.repeat},
        {"train", winner.train},
        {"validation", winner.validation},
        {"test", winner.test},
        {"encoding", encoding_to_json(chosen.encoding)},
        {"power", power_params_to_json(chosen.power)},
    };
    write_text_file(out_dir / "preprocess.json",
                    dump_json_17(preprocess) + "\n");
    return 0;
  });

  nlohmann::json curve = nlohmann::json::array();
  for (const SweepEntry& entry : chosen.sweep.curve) {
    curve.push_back(sweep_entry_json(entry));
  }
  nlohmann::json triples = nlohmann::json::array();
  for (std::size_t i = 0; i < states.size(); ++i) {
    const SplitTriple& triple = plan.triples[i];
    nlohmann::json entry = {{"fold", triple.fold},
                            {"repeat", triple.repeat},
                            {"valid", states[i].valid}};
    if (states[i].valid) {
      entry["best_hidden"] = states[i].sweep.best_hidden;
      double best = -std::numeric_limits<double>::infinity();
      for (const SweepEntry& e : states[i].sweep.curve) {
        if (e.valid && e.val_r2 > best) best = e.val_r2;
      }
      entry["best_val_r2"] = best;
    } else {
      entry["error"] = states[i].error;
    }
    triples.push_back(std::move(entry));
  }

  RunReportInputs inputs;
  inputs.dataset_fingerprint = dataset_fingerprint(dataset);
  inputs.dataset_rows = dataset.n();
  inputs.config_echo = pipeline_config_echo(config);
  inputs.seeds = {{"master", config.seed},
                  {"selected_task", task_seed},
                  {"final_mlp", mlp_seed}};
  inputs.split = {{"fold", winner.fold},
                  {"repeat", winner.repeat},
                  {"train", winner.train.size()},
                  {"validation", winner.validation.size()},
                  {"test", winner.test.size()},
                  {"selected_val_r2", best_val_r2}};
  inputs.hidden_size = best_hidden;
  inputs.sweep_curve = {{"curve", curve}, {"triples", triples}};
  inputs.mlp_train = result.mlp_train;
  inputs.mlp_test = result.mlp_test;
  inputs.anfis_train = result.anfis_train;
  inputs.anfis_test = result.anfis_test;
  inputs.significance = stats.significance;
  inputs.ranking = stats.ranking;
  inputs.artifacts = {"mlp_train_parity.csv",  "mlp_test_parity.csv",
                      "anfis_train_parity.csv", "anfis_test_parity.csv",
                      "mlp_model.json",         "anfis_model.json",
                      "preprocess.json"};
  inputs.out_dir = config.out_dir;

  result.report = run_stage("report", [&]() { return build_report(inputs); });
  const std::filesystem::path report_path = out_dir / "run_report.json";
  run_stage("report", [&]() {
    write_text_file(report_path, dump_json_17(result.report) + "\n");
    return 0;
  });

  result.report_path = report_path.string();
  result.plan = plan;
  result.fold = winner.fold;
  result.repeat = winner.repeat;
  result.hidden = best_hidden;
  result.encoding = chosen.encoding;
  result.power = chosen.power;
  return result;
}

}  // namespace tpayield
