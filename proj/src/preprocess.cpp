#include "tpayield/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tpayield/errors.hpp"
#include "tpayield/rng.hpp"

namespace tpayield {

int EncodingMap::code_for(int column, const std::string& label) const {
  for (const Table& table : tables) {
    if (table.column != column) continue;
    const auto it =
        std::find(table.labels.begin(), table.labels.end(), label);
    return it == table.labels.end()
               ? -1
               : static_cast<int>(it - table.labels.begin());
  }
  return -1;
}

EncodingMap fit_encoding(const Dataset& dataset) {
  if (dataset.records.empty()) {
    throw Error(ErrorCode::EmptyDataset, "fit_encoding: empty dataset");
  }
  EncodingMap map;
  for (int c = 0; c < kInputCount; ++c) {
    if (dataset.schema[static_cast<std::size_t>(c)].kind !=
        FeatureKind::Categorical) {
      continue;
    }
    EncodingMap::Table table;
    table.column = c;
    for (const auto& record : dataset.records) {
      const std::string& label = record.inputs[static_cast<std::size_t>(c)].label;
      if (std::find(table.labels.begin(), table.labels.end(), label) ==
          table.labels.end()) {
        table.labels.push_back(label);
      }
    }
    map.tables.push_back(std::move(table));
  }
  return map;
}

Eigen::MatrixXd apply_encoding(const EncodingMap& map,
                               const Dataset& dataset) {
  Eigen::MatrixXd X(dataset.n(), kInputCount);
  for (std::size_t r = 0; r < dataset.n(); ++r) {
    for (int c = 0; c < kInputCount; ++c) {
      const Cell& cell = dataset.records[r].inputs[static_cast<std::size_t>(c)];
      double value = 0.0;
      switch (cell.kind) {
        case Cell::Kind::Number:
          value = cell.number;
          break;
        case Cell::Kind::Missing:
          value = 1.0;  // ambient pressure stand-in
          break;
        case Cell::Kind::Label: {
          const int code = map.code_for(c, cell.label);
          if (code < 0) {
            throw Error(ErrorCode::UnseenLabel,
                        "apply_encoding: label '" + cell.label +
                            "' was not present when the map was fitted",
                        static_cast<long>(r), c);
          }
          value = static_cast<double>(code);
          break;
        }
      }
      X(static_cast<Eigen::Index>(r), c) = value;
    }
  }
  return X;
}

double yeo_johnson(double x, double lambda) {
  if (x >= 0.0) {
    if (std::fabs(lambda) < 1e-12) return std::log1p(x);
    return std::expm1(lambda * std::log1p(x)) / lambda;
  }
  const double two_minus = 2.0 - lambda;
  if (std::fabs(two_minus) < 1e-12) return -std::log1p(-x);
  return -std::expm1(two_minus * std::log1p(-x)) / two_minus;
}

namespace {

/// Profile log-likelihood of the Yeo-Johnson parameter for one column,
/// up to constants: -(n/2) log(sigma_hat^2) + (lambda-1) sum sign(x) log1p|x|.
double yj_log_likelihood(const Eigen::VectorXd& column, double lambda) {
  const Eigen::Index n = column.size();
  double mean = 0.0;
  std::vector<double> transformed(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    transformed[static_cast<std::size_t>(i)] = yeo_johnson(column[i], lambda);
    mean += transformed[static_cast<std::size_t>(i)];
  }
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double t : transformed) ss += (t - mean) * (t - mean);
  const double variance = ss / static_cast<double>(n);
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    return -std::numeric_limits<double>::infinity();
  }
  double jacobian = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = column[i];
    jacobian += (x >= 0.0 ? 1.0 : -1.0) * std::log1p(std::fabs(x));
  }
  return -0.5 * static_cast<double>(n) * std::log(variance) +
         (lambda - 1.0) * jacobian;
}

double golden_section_max(const Eigen::VectorXd& column, double lo,
                          double hi, double tol) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a);
  double x2 = a + phi * (b - a);
  double f1 = yj_log_likelihood(column, x1);
  double f2 = yj_log_likelihood(column, x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = yj_log_likelihood(column, x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = yj_log_likelihood(column, x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

PowerTransformParams fit_power_transform(const Eigen::MatrixXd& X) {
  PowerTransformParams params;
  const Eigen::Index n = X.rows();
  if (n < 2) {
    throw Error(ErrorCode::InvalidArgument,
                "fit_power_transform: need at least 2 rows");
  }
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const Eigen::VectorXd column = X.col(c);
    if (column.maxCoeff() == column.minCoeff()) {
      throw Error(ErrorCode::DegenerateFeature,
                  "fit_power_transform: column " + std::to_string(c) +
                      " is constant",
                  -1, static_cast<long>(c));
    }
    const double lambda = golden_section_max(column, -5.0, 5.0, 1e-6);

    double mean = 0.0;
    Eigen::VectorXd transformed(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      transformed[i] = yeo_johnson(column[i], lambda);
      mean += transformed[i];
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      ss += (transformed[i] - mean) * (transformed[i] - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (!(sd > 0.0)) {
      throw Error(ErrorCode::DegenerateFeature,
                  "fit_power_transform: column " + std::to_string(c) +
                      " collapsed to a constant",
                  -1, static_cast<long>(c));
    }
    params.lambda.push_back(lambda);
    params.mean.push_back(mean);
    params.sd.push_back(sd);
  }
  return params;
}

Eigen::MatrixXd apply_power_transform(const PowerTransformParams& params,
                                      const Eigen::MatrixXd& X) {
  if (static_cast<std::size_t>(X.cols()) != params.lambda.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "apply_power_transform: column count does not match params");
  }
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const auto cc = static_cast<std::size_t>(c);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      out(i, c) = (yeo_johnson(X(i, c), params.lambda[cc]) - params.mean[cc]) /
                  params.sd[cc];
    }
  }
  return out;
}

SplitPlan make_splits(std::size_t n, int k, int repeats, int strat_bins,
                      const std::vector<double>& y, std::uint64_t seed) {
  if (k < 2 || n < static_cast<std::size_t>(k) || repeats < 1 ||
      strat_bins < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "make_splits: need n >= k >= 2, repeats >= 1, bins >= 1");
  }
  if (y.size() != n) {
    throw Error(ErrorCode::LengthMismatch,
                "make_splits: y length must equal n");
  }
  const std::size_t bins =
      std::min<std::size_t>(static_cast<std::size_t>(strat_bins), n);

  // Quantile bins: sort indices by (y, index), then cut into contiguous runs.
  std::vector<std::size_t> by_target(n);
  std::iota(by_target.begin(), by_target.end(), 0);
  std::sort(by_target.begin(), by_target.end(),
            [&](std::size_t a, std::size_t b) {
              return y[a] != y[b] ? y[a] < y[b] : a < b;
            });
  std::vector<std::vector<std::size_t>> bin_members(bins);
  for (std::size_t j = 0; j < bins; ++j) {
    const std::size_t begin = j * n / bins;
    const std::size_t end = (j + 1) * n / bins;
    bin_members[j].assign(by_target.begin() + static_cast<long>(begin),
                          by_target.begin() + static_cast<long>(end));
  }

  const std::size_t pool = n / static_cast<std::size_t>(k);
  // Half of n/k before flooring; the holdout's validation share.
  const std::size_t val_size =
      std::min(pool, (n + 2 * static_cast<std::size_t>(k) - 1) /
                         (2 * static_cast<std::size_t>(k)));

  // Largest-remainder allocation of the holdout pool across bins.
  std::vector<std::size_t> quota(bins, 0);
  {
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t j = 0; j < bins; ++j) {
      const double exact = static_cast<double>(pool) *
                           static_cast<double>(bin_members[j].size()) /
                           static_cast<double>(n);
      quota[j] = static_cast<std::size_t>(exact);
      assigned += quota[j];
      remainders.push_back({exact - static_cast<double>(quota[j]), j});
    }
    std::sort(remainders.begin(), remainders.end(),
              [](const auto& a, const auto& b) {
                return a.first != b.first ? a.first > b.first
                                          : a.second < b.second;
              });
    for (std::size_t i = 0; assigned < pool; ++i, ++assigned) {
      ++quota[remainders[i % remainders.size()].second];
    }
  }

  SplitPlan plan;
  plan.k = k;
  plan.repeats = repeats;
  plan.seed = seed;

  for (int repeat = 0; repeat < repeats; ++repeat) {
    for (int fold = 0; fold < k; ++fold) {
      Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(repeat),
                                 static_cast<std::uint64_t>(fold)}));
      std::vector<std::size_t> holdout;
      std::vector<char> held(n, 0);
      for (std::size_t j = 0; j < bins; ++j) {
        std::vector<std::size_t> members = bin_members[j];
        rng.shuffle(members);
        for (std::size_t i = 0; i < quota[j]; ++i) {
          holdout.push_back(members[i]);
          held[members[i]] = 1;
        }
      }
      rng.shuffle(holdout);

      SplitTriple triple;
      triple.fold = fold;
      triple.repeat = repeat;
      triple.validation.assign(holdout.begin(),
                               holdout.begin() + static_cast<long>(val_size));
      triple.test.assign(holdout.begin() + static_cast<long>(val_size),
                         holdout.end());
      for (std::size_t i = 0; i < n; ++i) {
        if (!held[i]) triple.train.push_back(i);
      }
      std::sort(triple.validation.begin(), triple.validation.end());
      std::sort(triple.test.begin(), triple.test.end());
      plan.triples.push_back(std::move(triple));
    }
  }
  return plan;
}

nlohmann::json encoding_to_json(const EncodingMap& map) {
  nlohmann::json doc;
  doc["tables"] = nlohmann::json::array();
  for (const auto& table : map.tables) {
    doc["tables"].push_back({{"column", table.column},
                             {"labels", table.labels}});
  }
  return doc;
}

EncodingMap encoding_from_json(const nlohmann::json& doc) {
  EncodingMap map;
  for (const auto& entry : doc.at("tables")) {
    EncodingMap::Table table;
    table.column = entry.at("column").get<int>();
    table.labels = entry.at("labels").get<std::vector<std::string>>();
    map.tables.push_back(std::move(table));
  }
  return map;
}

nlohmann::json power_params_to_json(const PowerTransformParams& params) {
  return {{"lambda", params.lambda},
          {"mean", params.mean},
          {"sd", params.sd}};
}

PowerTransformParams power_params_from_json(const nlohmann::json& doc) {
  PowerTransformParams params;
  params.lambda = doc.at("lambda").get<std::vector<double>>();
  params.mean = doc.at("mean").get<std::vector<double>>();
  params.sd = doc.at("sd").get<std::vector<double>>();
  return params;
}

nlohmann::json split_plan_to_json(const SplitPlan& plan) {
  nlohmann::json doc;
  doc["k"] = plan.k;
  doc["repeats"] = plan.repeats;
  doc["seed"] = plan.seed;
  doc["triples"] = nlohmann::json::array();
  for (const auto& triple : plan.triples) {
    doc["triples"].push_back({{"fold", triple.fold},
                              {"repeat", triple.repeat},
                              {"train", triple.train},
                              {"validation", triple.validation},
                              {"test", triple.test}});
  }
  return doc;
}

}  // namespace tpayield
