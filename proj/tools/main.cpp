#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tpayield/anfis.hpp"
#include "tpayield/errors.hpp"
#include "tpayield/metrics.hpp"
#include "tpayield/mlp.hpp"
#include "tpayield/pipeline.hpp"
#include "tpayield/preprocess.hpp"
#include "tpayield/report.hpp"
#include "tpayield/rng.hpp"
#include "tpayield/schema.hpp"
#include "tpayield/serialize.hpp"
#include "tpayield/synth.hpp"

namespace {

using namespace tpayield;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Io:
    case ErrorCode::MissingArtifact:
      return 2;
    case ErrorCode::NonConvergence:
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::DegenerateFeature:
    case ErrorCode::DegenerateInput:
    case ErrorCode::DegenerateTarget:
      return 3;
    default:
      return 1;
  }
}

nlohmann::json validation_to_json(const ValidationReport& report) {
  nlohmann::json columns = nlohmann::json::array();
  for (const ColumnSummary& column : report.columns) {
    nlohmann::json entry = {{"name", column.name}};
    if (column.label_census.empty()) {
      entry["min"] = column.min;
      entry["max"] = column.max;
      entry["missing"] = column.missing;
    } else {
      nlohmann::json census;
      for (const auto& [label, count] : column.label_census) {
        census[label] = count;
      }
      entry["labels"] = census;
    }
    columns.push_back(std::move(entry));
  }
  nlohmann::json violations = nlohmann::json::array();
  for (const Violation& violation : report.violations) {
    violations.push_back({{"row", violation.row},
                          {"column", violation.column},
                          {"message", violation.message}});
  }
  return {{"ok", report.ok()},
          {"columns", columns},
          {"violations", violations}};
}

void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::Io, "cannot write " + path.string());
  }
  out << body;
}

std::filesystem::path ensure_out_dir(const std::string& out_dir) {
  const std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::Io, "cannot create " + dir.string());
  }
  return dir;
}

struct Cli {
  CLI::App app{"PET aqueous-hydrolysis TPA-yield modeling toolkit"};

  // global options; subcommand flags override config-file keys
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  int threads = 0;
  std::string data;
  CLI::Option* opt_config = nullptr;
  CLI::Option* opt_seed = nullptr;
  CLI::Option* opt_out_dir = nullptr;
  CLI::Option* opt_threads = nullptr;
  CLI::Option* opt_data = nullptr;

  int exit_status = 0;

  PipelineConfig resolve() const {
    PipelineConfig config;
    if (opt_config->count() > 0) {
      std::ifstream in(config_path);
      if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + config_path);
      }
      nlohmann::json doc;
      try {
        in >> doc;
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError,
                    "config " + config_path + ": " + e.what());
      }
      config = pipeline_config_from_json(doc);
    }
    if (opt_seed->count() > 0) config.seed = seed;
    if (opt_out_dir->count() > 0) config.out_dir = out_dir;
    if (opt_threads->count() > 0) config.threads = threads;
    if (opt_data->count() > 0) config.data = data;
    return config;
  }

  Dataset load_data(const PipelineConfig& config, bool strict) const {
    if (config.data.empty()) {
      throw Error(ErrorCode::InvalidArgument,
                  "no dataset given (use --data or the config's data key)");
    }
    return strict ? load_csv(config.data, default_schema_vec())
                  : load_csv_lenient(config.data, default_schema_vec());
  }
};

void cmd_validate(Cli& cli, const std::string& report_out) {
  const PipelineConfig config = cli.resolve();
  const Dataset dataset = cli.load_data(config, /*strict=*/false);
  const ValidationReport report = validate(dataset);
  const std::string body = dump_json_17(validation_to_json(report)) + "\n";
  std::cout << body;
  if (!report_out.empty()) {
    if (std::filesystem::path(report_out).has_parent_path()) {
      ensure_out_dir(std::filesystem::path(report_out).parent_path().string());
    }
    write_text(report_out, body);
  }
  cli.exit_status = report.ok() ? 0 : 1;
}

void cmd_stats(Cli& cli, double alpha_flag, bool alpha_set) {
  PipelineConfig config = cli.resolve();
  if (alpha_set) config.alpha = alpha_flag;
  const Dataset dataset = cli.load_data(config, /*strict=*/true);
  const DatasetStats stats = compute_dataset_stats(dataset, config.alpha);
  const auto dir = ensure_out_dir(config.out_dir);
  write_text(dir / "significance.json",
             dump_json_17(significance_table_json(stats.significance)) + "\n");
  write_text(dir / "ranking.json",
             dump_json_17(feature_ranking_json(stats.ranking)) + "\n");
  const std::string sig_text = significance_table_text(stats.significance);
  const std::string rank_text = feature_ranking_text(stats.ranking);
  write_text(dir / "significance.txt", sig_text);
  write_text(dir / "ranking.txt", rank_text);
  std::cout << sig_text << "\n" << rank_text;
}

void cmd_split(Cli& cli, int folds, int repeats, int bins, bool sized[3]) {
  PipelineConfig config = cli.resolve();
  if (sized[0]) config.folds = folds;
  if (sized[1]) config.repeats = repeats;
  if (sized[2]) config.strat_bins = bins;
  const Dataset dataset = cli.load_data(config, /*strict=*/true);
  const SplitPlan plan =
      make_splits(dataset.n(), config.folds, config.repeats,
                  config.strat_bins, yield_vector(dataset), config.seed);
  const auto dir = ensure_out_dir(config.out_dir);
  write_text(dir / "split_plan.json",
             dump_json_17(split_plan_to_json(plan)) + "\n");
  const SplitTriple& first = plan.triples.front();
  std::cout << plan.triples.size() << " triples, each "
            << first.train.size() << " train / " << first.validation.size()
            << " validation / " << first.test.size() << " test\n"
            << (dir / "split_plan.json").string() << "\n";
}

// Whole-dataset model trainers: diagnostic utilities, no held-out subset.
void cmd_train_mlp(Cli& cli, int hidden) {
  const PipelineConfig config = cli.resolve();
  const Dataset dataset = cli.load_data(config, /*strict=*/true);
  const std::vector<double> y = yield_vector(dataset);
  const EncodingMap encoding = fit_encoding(dataset);
  const Eigen::MatrixXd raw = apply_encoding(encoding, dataset);
  const PowerTransformParams power = fit_power_transform(raw);
  const Eigen::MatrixXd X = apply_power_transform(power, raw);
  const MlpParams initial = mlp_init(kInputCount, hidden, config.seed);
  const MlpParams fitted = mlp_train(initial, X, y, config.mlp).params;
  const std::vector<double> pred = mlp_predict(fitted, X);
  const MetricPair metrics = metric_pair(y, pred);
  const auto dir = ensure_out_dir(config.out_dir);
  write_text(dir / "mlp_model.json", dump_json_17(mlp_to_json(fitted)) + "\n");
  emit_parity_csv((dir / "mlp_full_parity.csv").string(), y, pred, "mlp_full");
  std::cout << "mlp hidden=" << hidden << " train r2=" << metrics.r2
            << " rmse=" << metrics.rmse << "\n";
}

void cmd_train_anfis(Cli& cli) {
  const PipelineConfig config = cli.resolve();
  const Dataset dataset = cli.load_data(config, /*strict=*/true);
  const std::vector<double> y = yield_vector(dataset);
  const EncodingMap encoding = fit_encoding(dataset);
  const Eigen::MatrixXd raw = apply_encoding(encoding, dataset);
  const PowerTransformParams power = fit_power_transform(raw);
  const Eigen::MatrixXd X = apply_power_transform(power, raw);
  std::vector<std::size_t> centers = subtractive_cluster(X, config.subcluster);
  const std::size_t budget = consequent_rule_budget(
      static_cast<std::size_t>(X.rows()), static_cast<int>(X.cols()));
  if (centers.size() > budget) centers.resize(budget);
  const AnfisModel initial = init_from_clusters(centers, X, config.subcluster);
  const AnfisModel fitted = train_hybrid(initial, X, y, config.hybrid).model;
  const std::vector<double> pred = anfis_predict(fitted, X);
  const MetricPair metrics = metric_pair(y, pred);
  const auto dir = ensure_out_dir(config.out_dir);
  write_text(dir / "anfis_model.json",
             dump_json_17(anfis_to_json(fitted)) + "\n");
  emit_parity_csv((dir / "anfis_full_parity.csv").string(), y, pred,
                  "anfis_full");
  std::cout << "anfis rules=" << fitted.rules.size()
            << " train r2=" << metrics.r2 << " rmse=" << metrics.rmse << "\n";
}

void cmd_sweep(Cli& cli, int lo, int hi, bool sized[2]) {
  PipelineConfig config = cli.resolve();
  if (sized[0]) config.hidden_lo = lo;
  if (sized[1]) config.hidden_hi = hi;
  const Dataset dataset = cli.load_data(config, /*strict=*/true);
  const std::vector<double> y = yield_vector(dataset);
  const SplitPlan plan =
      make_splits(dataset.n(), config.folds, config.repeats,
                  config.strat_bins, y, config.seed);
  nlohmann::json triples = nlohmann::json::array();
  double best_r2 = -1e300;
  int best_fold = 0, best_repeat = 0, best_hidden = 0;
  for (const SplitTriple& triple : plan.triples) {
    Dataset train_set;
    train_set.schema = dataset.schema;
    for (const std::size_t row : triple.train) {
      train_set.records.push_back(dataset.records[row]);
    }
    const EncodingMap encoding = fit_encoding(train_set);
    const Eigen::MatrixXd train_raw = apply_encoding(encoding, train_set);
    const PowerTransformParams power = fit_power_transform(train_raw);
    const Eigen::MatrixXd train_X = apply_power_transform(power, train_raw);
    Dataset val_set;
    val_set.schema = dataset.schema;
    for (const std::size_t row : triple.validation) {
      val_set.records.push_back(dataset.records[row]);
    }
    const Eigen::MatrixXd val_X =
        apply_power_transform(power, apply_encoding(encoding, val_set));
    std::vector<double> train_y, val_y;
    for (const std::size_t row : triple.train) train_y.push_back(y[row]);
    for (const std::size_t row : triple.validation) val_y.push_back(y[row]);
    const SweepResult sweep = sweep_hidden_size(
        config.hidden_lo, config.hidden_hi, train_X, train_y, val_X, val_y,
        config.mlp,
        derive_seed(config.seed, {static_cast<std::uint64_t>(triple.fold),
                                  static_cast<std::uint64_t>(triple.repeat)}));
    nlohmann::json curve = nlohmann::json::array();
    for (const SweepEntry& entry : sweep.curve) {
      nlohmann::json doc = {{"hidden", entry.hidden}, {"valid", entry.valid}};
      if (entry.valid) {
        doc["train_r2"] = entry.train_r2;
        doc["train_rmse"] = entry.train_rmse;
        doc["val_r2"] = entry.val_r2;
        doc["val_rmse"] = entry.val_rmse;
        if (entry.val_r2 > best_r2) {
          best_r2 = entry.val_r2;
          best_fold = triple.fold;
          best_repeat = triple.repeat;
          best_hidden = entry.hidden;
        }
      } else {
        doc["error"] = entry.error;
      }
      curve.push_back(std::move(doc));
    }
    triples.push_back({{"fold", triple.fold},
                       {"repeat", triple.repeat},
                       {"best_hidden", sweep.best_hidden},
                       {"curve", curve}});
  }
  const auto dir = ensure_out_dir(config.out_dir);
  write_text(dir / "sweep.json", dump_json_17(nlohmann::json{
                                     {"triples", triples}}) + "\n");
  std::cout << "best val r2=" << best_r2 << " at fold=" << best_fold
            << " repeat=" << best_repeat << " hidden=" << best_hidden << "\n"
            << (dir / "sweep.json").string() << "\n";
}

void cmd_run(Cli& cli) {
  const PipelineConfig config = cli.resolve();
  const Dataset dataset = cli.load_data(config, /*strict=*/true);
  const PipelineResult result = run_pipeline(dataset, config);
  std::cout << "selected fold=" << result.fold << " repeat=" << result.repeat
            << " hidden=" << result.hidden << "\n"
            << "mlp   train r2=" << result.mlp_train.r2
            << " rmse=" << result.mlp_train.rmse
            << " | test r2=" << result.mlp_test.r2
            << " rmse=" << result.mlp_test.rmse << "\n"
            << "anfis train r2=" << result.anfis_train.r2
            << " rmse=" << result.anfis_train.rmse
            << " | test r2=" << result.anfis_test.r2
            << " rmse=" << result.anfis_test.rmse << "\n"
            << result.report_path << "\n";
}

void cmd_synth(Cli& cli, long n, double noise_sd, const std::string& out_csv) {
  const PipelineConfig config = cli.resolve();
  std::string path = out_csv;
  if (path.empty()) {
    path = (ensure_out_dir(config.out_dir) / "synth.csv").string();
  } else if (std::filesystem::path(path).has_parent_path()) {
    ensure_out_dir(std::filesystem::path(path).parent_path().string());
  }
  const Dataset dataset = synth_generate(n, config.seed, noise_sd);
  write_csv(path, dataset);
  std::cout << dataset.n() << " rows -> " << path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  Cli cli;
  cli.app.require_subcommand(1);
  cli.app.fallthrough();
  cli.opt_config =
      cli.app.add_option("--config", cli.config_path, "JSON config file");
  cli.opt_seed = cli.app.add_option("--seed", cli.seed, "Master seed");
  cli.opt_out_dir =
      cli.app.add_option("--out-dir", cli.out_dir, "Output directory");
  cli.opt_threads =
      cli.app.add_option("--threads", cli.threads, "Worker threads");
  cli.opt_data = cli.app.add_option("--data", cli.data, "Dataset CSV path");

  auto* validate_cmd =
      cli.app.add_subcommand("validate", "Audit a CSV against the schema");
  static std::string report_out;
  validate_cmd->add_option("--out", report_out, "Also write the report here");
  validate_cmd->callback([&]() { cmd_validate(cli, report_out); });

  auto* stats_cmd = cli.app.add_subcommand(
      "stats", "Feature significance tests and logistic ranking");
  static double alpha = 0.05;
  auto* alpha_opt = stats_cmd->add_option("--alpha", alpha,
                                          "Significance level (default 0.05)");
  stats_cmd->callback(
      [&]() { cmd_stats(cli, alpha, alpha_opt->count() > 0); });

  auto* split_cmd = cli.app.add_subcommand(
      "split", "Emit the repeated stratified split plan");
  static int folds = 0, repeats = 0, bins = 0;
  auto* folds_opt = split_cmd->add_option("--folds", folds, "Fold count");
  auto* repeats_opt =
      split_cmd->add_option("--repeats", repeats, "Repeat count");
  auto* bins_opt =
      split_cmd->add_option("--bins", bins, "Stratification bins");
  split_cmd->callback([&]() {
    bool sized[3] = {folds_opt->count() > 0, repeats_opt->count() > 0,
                     bins_opt->count() > 0};
    cmd_split(cli, folds, repeats, bins, sized);
  });

  auto* mlp_cmd = cli.app.add_subcommand(
      "train-mlp", "Train one MLP on the whole dataset (diagnostic)");
  static int hidden = 0;
  mlp_cmd->add_option("--hidden", hidden, "Hidden layer size")->required();
  mlp_cmd->callback([&]() { cmd_train_mlp(cli, hidden); });

  auto* anfis_cmd = cli.app.add_subcommand(
      "train-anfis", "Train one ANFIS on the whole dataset (diagnostic)");
  anfis_cmd->callback([&]() { cmd_train_anfis(cli); });

  auto* sweep_cmd = cli.app.add_subcommand(
      "sweep", "Hidden-size sweep over every split triple");
  static int lo = 0, hi = 0;
  auto* lo_opt = sweep_cmd->add_option("--hidden-lo", lo, "Smallest size");
  auto* hi_opt = sweep_cmd->add_option("--hidden-hi", hi, "Largest size");
  sweep_cmd->callback([&]() {
    bool sized[2] = {lo_opt->count() > 0, hi_opt->count() > 0};
    cmd_sweep(cli, lo, hi, sized);
  });

  auto* run_cmd =
      cli.app.add_subcommand("run", "Full pipeline: stats, sweep, final "
                                    "models, test evaluation, report");
  run_cmd->callback([&]() { cmd_run(cli); });

  auto* synth_cmd = cli.app.add_subcommand(
      "synth", "Generate a synthetic dataset with known structure");
  static long n = 381;
  static double noise_sd = 2.0;
  static std::string out_csv;
  synth_cmd->add_option("--n", n, "Row count (default 381)");
  synth_cmd->add_option("--noise-sd", noise_sd,
                        "Yield noise, percentage points (default 2.0)");
  synth_cmd->add_option("--out", out_csv, "CSV path (default <out-dir>/synth.csv)");
  synth_cmd->callback([&]() { cmd_synth(cli, n, noise_sd, out_csv); });

  try {
    cli.app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const tpayield::Error& e) {
    std::cerr << "error (" << tpayield::error_code_name(e.code())
              << "): " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return cli.exit_status;
}
