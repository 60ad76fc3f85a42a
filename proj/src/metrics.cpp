#include "tpayield/metrics.hpp"

#include <cmath>

#include "tpayield/errors.hpp"

namespace tpayield {

double r_squared(const std::vector<double>& y,
                 const std::vector<double>& yhat) {
  if (y.size() != yhat.size()) {
    throw Error(ErrorCode::LengthMismatch, "r_squared: length mismatch");
  }
  const std::size_t n = y.size();
  if (n < 2) {
    throw Error(ErrorCode::DegenerateTarget,
                "r_squared: need at least 2 points");
  }
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (ss_tot == 0.0) {
    throw Error(ErrorCode::DegenerateTarget, "r_squared: constant target");
  }
  return 1.0 - ss_res / ss_tot;
}

double rmse(const std::vector<double>& y, const std::vector<double>& yhat) {
  if (y.size() != yhat.size()) {
    throw Error(ErrorCode::LengthMismatch, "rmse: length mismatch");
  }
  if (y.empty()) {
    throw Error(ErrorCode::LengthMismatch, "rmse: empty input");
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  }
  return std::sqrt(ss / static_cast<double>(y.size()));
}

MetricPair metric_pair(const std::vector<double>& y,
                       const std::vector<double>& yhat) {
  return {r_squared(y, yhat), rmse(y, yhat), y.size()};
}

}  // namespace tpayield
