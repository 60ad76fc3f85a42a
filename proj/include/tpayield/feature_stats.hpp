#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tpayield/schema.hpp"

namespace tpayield {

struct CorrelationTest {
  double r = 0.0;
  double p = 1.0;
};

/// Sample Pearson correlation with the two-sided p-value from the exact
/// Student-t null distribution (t = r*sqrt((n-2)/(1-r^2)), n-2 dof).
/// Requires n >= 3 and both vectors non-constant (DegenerateInput otherwise).
CorrelationTest pearson_pvalue(const std::vector<double>& x,
                               const std::vector<double>& y);

struct RankTest {
  double H = 0.0;
  double p = 1.0;
};

/// Kruskal-Wallis H on mid-ranks with tie correction; p from the chi-square
/// approximation with (#groups - 1) dof. All values identical returns (0,1).
/// Requires >= 2 nonempty groups and >= 3 values total (InvalidArgument).
RankTest kruskal_wallis_pvalue(const std::vector<std::vector<double>>& groups);

struct SignificanceRow {
  std::string feature;
  std::string test;  // "pearson" or "kruskal-wallis"
  double statistic = 0.0;
  double p = 1.0;
  bool significant = false;
  std::string note;  // set when the test degenerated instead of failing
};

struct SignificanceTable {
  double alpha = 0.05;
  std::vector<SignificanceRow> rows;  // one per input feature, schema order
};

/// Pearson test of each continuous feature against yield (missing pressure
/// scored as 1 atm) and Kruskal-Wallis across each categorical feature's
/// label groups of yield.
SignificanceTable significance_table(const Dataset& dataset, double alpha);

struct RankedFeature {
  std::string feature;
  int column = 0;  // schema index
  double weight = 0.0;  // |logistic coefficient|
  int rank = 0;         // 1 = strongest
};

struct FeatureRanking {
  std::vector<RankedFeature> entries;  // ordered by rank
  double threshold = 0.0;              // median used to binarize the target
  bool ridge_fallback = false;  // separation or singular curvature hit
  int iterations = 0;
};

/// Binarizes y at its median (above-median = 1), fits an unregularized
/// logistic regression by damped Newton steps (stops when the gradient's
/// max-norm falls below 1e-8 or after max_iter), and ranks features by
/// descending |coefficient|, ties broken by schema order. Separation
/// (|coefficient| > 1e4) or a singular Newton system triggers a refit with
/// ridge strength 1e-6 and sets ridge_fallback. Columns of X must already be
/// standardized.
FeatureRanking rank_features_logistic(const Eigen::MatrixXd& X,
                                      const std::vector<double>& y,
                                      int max_iter,
                                      const std::vector<std::string>& names);

}  // namespace tpayield
