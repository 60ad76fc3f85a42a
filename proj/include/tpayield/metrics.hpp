#pragma once

#include <cstddef>
#include <vector>

namespace tpayield {

/// Coefficient of determination 1 - SS_res/SS_tot. Needs n >= 2 and a
/// non-constant y (DegenerateTarget otherwise).
double r_squared(const std::vector<double>& y, const std::vector<double>& yhat);

/// Root of the mean squared residual.
double rmse(const std::vector<double>& y, const std::vector<double>& yhat);

struct MetricPair {
  double r2 = 0.0;
  double rmse = 0.0;
  std::size_t n = 0;
};

MetricPair metric_pair(const std::vector<double>& y,
                       const std::vector<double>& yhat);

}  // namespace tpayield
