#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "tpayield/schema.hpp"

namespace tpayield {

/// Label -> integer-code tables for the categorical features, codes assigned
/// 0..L-1 by first appearance in the fitting data.
struct EncodingMap {
  struct Table {
    int column = 0;                   // schema index
    std::vector<std::string> labels;  // code = position in this list
  };
  std::vector<Table> tables;  // schema order

  /// Code for a label, or -1 when the label was never seen.
  int code_for(int column, const std::string& label) const;
};

EncodingMap fit_encoding(const Dataset& dataset);

/// n x 10 numeric matrix: continuous features pass through (missing pressure
/// scored as 1 atm), categorical features replaced by their codes.
/// Throws UnseenLabel when a label is absent from the map.
Eigen::MatrixXd apply_encoding(const EncodingMap& map, const Dataset& dataset);

/// Yeo-Johnson transform of one value.
double yeo_johnson(double x, double lambda);

struct PowerTransformParams {
  std::vector<double> lambda;  // per column
  std::vector<double> mean;    // post-transform means
  std::vector<double> sd;      // post-transform sds (population, 1/n)
};

/// Per column: lambda maximizing the Yeo-Johnson log-likelihood
/// (golden-section search over [-5, 5], tolerance 1e-6), then the
/// transformed column's mean/sd for standardization.
/// Throws DegenerateFeature(column) on constant columns.
PowerTransformParams fit_power_transform(const Eigen::MatrixXd& X);

/// Yeo-Johnson with the stored lambdas, then (x - mean) / sd.
Eigen::MatrixXd apply_power_transform(const PowerTransformParams& params,
                                      const Eigen::MatrixXd& X);

struct SplitTriple {
  int fold = 0;
  int repeat = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

struct SplitPlan {
  int k = 0;
  int repeats = 0;
  std::uint64_t seed = 0;
  std::vector<SplitTriple> triples;  // repeat-major: index = repeat*k + fold
};

/// Repeated stratified holdout: each of the k*repeats triples takes its own
/// seeded stratified shuffle (strata = quantile bins of y), holds out
/// floor(n/k) records, and splits the holdout into validation (ceil of half
/// of n/k) and test (the rest); leftover records stay in train.
SplitPlan make_splits(std::size_t n, int k, int repeats, int strat_bins,
                      const std::vector<double>& y, std::uint64_t seed);

nlohmann::json encoding_to_json(const EncodingMap& map);
EncodingMap encoding_from_json(const nlohmann::json& doc);
nlohmann::json power_params_to_json(const PowerTransformParams& params);
PowerTransformParams power_params_from_json(const nlohmann::json& doc);
nlohmann::json split_plan_to_json(const SplitPlan& plan);

}  // namespace tpayield
