#include "tpayield/anfis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tpayield/errors.hpp"

namespace tpayield {

namespace {

constexpr double kParamFloor = 1e-6;

void check_model(const AnfisModel& model) {
  if (model.input_dim <= 0) {
    throw Error(ErrorCode::InvalidArgument, "anfis input_dim must be positive");
  }
  if (model.rules.empty()) {
    throw Error(ErrorCode::InvalidArgument, "anfis model has no rules");
  }
  for (const Rule& rule : model.rules) {
    if (rule.premise.size() != static_cast<std::size_t>(model.input_dim) ||
        rule.consequent.size() != static_cast<std::size_t>(model.input_dim) + 1) {
      throw Error(ErrorCode::DimensionMismatch,
                  "anfis rule shape does not match input_dim");
    }
    for (const BellMF& mf : rule.premise) {
      if (!(mf.a > 0.0) || !(mf.b > 0.0)) {
        throw Error(ErrorCode::InvalidArgument,
                    "bell membership requires a > 0 and b > 0");
      }
    }
  }
}

void check_batch(const AnfisModel& model, const Eigen::MatrixXd& X,
                 const std::vector<double>& y) {
  if (X.cols() != model.input_dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "batch width does not match anfis input_dim");
  }
  if (static_cast<std::size_t>(X.rows()) != y.size() || y.empty()) {
    throw Error(ErrorCode::LengthMismatch,
                "batch rows and target length differ or are empty");
  }
}

double batch_mse(const AnfisModel& model, const Eigen::MatrixXd& X,
                 const std::vector<double>& y) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const ForwardTrace trace = anfis_forward(model, X.row(i).transpose());
    const double r = trace.output - y[static_cast<std::size_t>(i)];
    acc += r * r;
  }
  return acc / static_cast<double>(X.rows());
}

}  // namespace

double membership(const BellMF& mf, double x) {
  const double u = (x - mf.c) / mf.a;
  const double t = u * u;
  return 1.0 / (1.0 + std::pow(t, mf.b));
}

ForwardTrace anfis_forward(const AnfisModel& model, const Eigen::VectorXd& x) {
  check_model(model);
  if (x.size() != model.input_dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "input length does not match anfis input_dim");
  }
  const std::size_t m = model.rules.size();
  ForwardTrace trace;
  trace.w.resize(m);
  trace.wbar.resize(m);
  trace.f.resize(m);
  double total = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const Rule& rule = model.rules[r];
    double w = 1.0;
    for (int j = 0; j < model.input_dim; ++j) {
      w *= membership(rule.premise[static_cast<std::size_t>(j)], x[j]);
    }
    double f = rule.consequent[0];
    for (int j = 0; j < model.input_dim; ++j) {
      f += rule.consequent[static_cast<std::size_t>(j) + 1] * x[j];
    }
    trace.w[r] = w;
    trace.f[r] = f;
    total += w;
  }
  double output = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    // A fully underflowed batch of firing strengths degrades to a uniform
    // blend instead of dividing by zero.
    trace.wbar[r] = total > 0.0 ? trace.w[r] / total
                                : 1.0 / static_cast<double>(m);
    output += trace.wbar[r] * trace.f[r];
  }
  trace.output = output;
  return trace;
}

std::vector<double> anfis_predict(const AnfisModel& model,
                                  const Eigen::MatrixXd& X) {
  std::vector<double> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    out[static_cast<std::size_t>(i)] =
        anfis_forward(model, X.row(i).transpose()).output;
  }
  return out;
}

std::vector<std::size_t> subtractive_cluster(const Eigen::MatrixXd& X,
                                             const SubClusterConfig& config) {
  if (X.rows() == 0 || X.cols() == 0) {
    throw Error(ErrorCode::EmptyDataset, "cannot cluster an empty matrix");
  }
  if (!(config.range_of_influence > 0.0) || !(config.squash_factor > 0.0) ||
      !(config.rejection_ratio > 0.0) ||
      config.acceptance_ratio < config.rejection_ratio ||
      config.acceptance_ratio > 1.0) {
    throw Error(ErrorCode::InvalidArgument,
                "subtractive clustering ratios must satisfy "
                "0 < reject <= accept <= 1 with positive radii");
  }
  const Eigen::Index n = X.rows();
  const double alpha =
      4.0 / (config.range_of_influence * config.range_of_influence);
  const double squash_r = config.squash_factor * config.range_of_influence;
  const double beta = 4.0 / (squash_r * squash_r);

  // Potentials are measured in unit-box coordinates so that the radii are
  // fractions of the data spread, independent of the columns' units.
  Eigen::MatrixXd U = X;
  for (Eigen::Index j = 0; j < U.cols(); ++j) {
    const double lo = U.col(j).minCoeff();
    const double hi = U.col(j).maxCoeff();
    if (hi > lo) {
      U.col(j) = (U.col(j).array() - lo) / (hi - lo);
    } else {
      U.col(j).setZero();
    }
  }

  Eigen::MatrixXd dist2(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dist2(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d2 = (U.row(i) - U.row(j)).squaredNorm();
      dist2(i, j) = d2;
      dist2(j, i) = d2;
    }
  }

  std::vector<double> potential(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      acc += std::exp(-alpha * dist2(i, j));
    }
    potential[static_cast<std::size_t>(i)] = acc;
  }

  const auto argmax = [&potential]() {
    std::size_t best = 0;
    for (std::size_t i = 1; i < potential.size(); ++i) {
      if (potential[i] > potential[best]) best = i;
    }
    return best;
  };

  std::vector<std::size_t> centers;
  double first_potential = 0.0;
  for (Eigen::Index round = 0; round < n; ++round) {
    const std::size_t pick = argmax();
    const double peak = potential[pick];
    if (centers.empty()) {
      if (!(peak > 0.0)) break;
      first_potential = peak;
    } else {
      const double ratio = peak / first_potential;
      if (ratio < config.rejection_ratio) break;
      if (ratio < config.acceptance_ratio) {
        // Gray zone: keep the candidate only if it is far enough from the
        // accepted centers to add coverage, otherwise retire it and rescan.
        double dmin2 = std::numeric_limits<double>::infinity();
        for (const std::size_t c : centers) {
          dmin2 = std::min(dmin2, dist2(static_cast<Eigen::Index>(pick),
                                        static_cast<Eigen::Index>(c)));
        }
        const double dmin = std::sqrt(dmin2);
        if (dmin / config.range_of_influence + ratio < 1.0) {
          potential[pick] = 0.0;
          continue;
        }
      }
    }
    centers.push_back(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      potential[static_cast<std::size_t>(i)] -=
          peak * std::exp(-beta * dist2(i, static_cast<Eigen::Index>(pick)));
    }
  }
  return centers;
}

AnfisModel init_from_clusters(const std::vector<std::size_t>& centers,
                              const Eigen::MatrixXd& X,
                              const SubClusterConfig& config) {
  if (centers.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no cluster centers supplied");
  }
  if (X.rows() == 0 || X.cols() == 0) {
    throw Error(ErrorCode::EmptyDataset, "cannot initialize from an empty matrix");
  }
  const Eigen::Index n = X.rows();
  const Eigen::Index dim = X.cols();
  std::vector<double> widths(static_cast<std::size_t>(dim));
  for (Eigen::Index j = 0; j < dim; ++j) {
    const double spread = X.col(j).maxCoeff() - X.col(j).minCoeff();
    widths[static_cast<std::size_t>(j)] = std::max(
        kParamFloor, config.range_of_influence * spread / std::sqrt(8.0));
  }
  AnfisModel model;
  model.input_dim = static_cast<int>(dim);
  model.rules.reserve(centers.size());
  for (const std::size_t center : centers) {
    if (center >= static_cast<std::size_t>(n)) {
      throw Error(ErrorCode::InvalidArgument, "cluster center index out of range");
    }
    Rule rule;
    rule.premise.resize(static_cast<std::size_t>(dim));
    rule.consequent.assign(static_cast<std::size_t>(dim) + 1, 0.0);
    for (Eigen::Index j = 0; j < dim; ++j) {
      BellMF& mf = rule.premise[static_cast<std::size_t>(j)];
      mf.a = widths[static_cast<std::size_t>(j)];
      mf.b = 1.0;
      mf.c = X(static_cast<Eigen::Index>(center), j);
    }
    model.rules.push_back(std::move(rule));
  }
  return model;
}

std::size_t consequent_rule_budget(std::size_t rows, int input_dim) {
  const std::size_t params_per_rule = static_cast<std::size_t>(input_dim) + 1;
  return std::max<std::size_t>(1, rows / (2 * params_per_rule));
}

AnfisModel fit_consequents_ls(const AnfisModel& model, const Eigen::MatrixXd& X,
                              const std::vector<double>& y, LsInfo* info) {
  check_model(model);
  check_batch(model, X, y);
  const Eigen::Index n = X.rows();
  const Eigen::Index dim = X.cols();
  const Eigen::Index m = static_cast<Eigen::Index>(model.rules.size());
  const Eigen::Index block = dim + 1;
  Eigen::MatrixXd A(n, m * block);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const ForwardTrace trace = anfis_forward(model, X.row(i).transpose());
    for (Eigen::Index r = 0; r < m; ++r) {
      const double wbar = trace.wbar[static_cast<std::size_t>(r)];
      A(i, r * block) = wbar;
      for (Eigen::Index j = 0; j < dim; ++j) {
        A(i, r * block + 1 + j) = wbar * X(i, j);
      }
    }
    target[i] = y[static_cast<std::size_t>(i)];
  }
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  const Eigen::VectorXd theta = cod.solve(target);
  if (!theta.allFinite()) {
    throw Error(ErrorCode::NonFiniteLoss,
                "consequent least squares produced non-finite coefficients");
  }
  if (info != nullptr) {
    info->rank = cod.rank();
    info->rank_deficient = cod.rank() < A.cols();
  }
  AnfisModel out = model;
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index j = 0; j < block; ++j) {
      out.rules[static_cast<std::size_t>(r)]
          .consequent[static_cast<std::size_t>(j)] = theta[r * block + j];
    }
  }
  return out;
}

std::vector<double> premise_gradients(const AnfisModel& model,
                                      const Eigen::MatrixXd& X,
                                      const std::vector<double>& y) {
  check_model(model);
  check_batch(model, X, y);
  const Eigen::Index n = X.rows();
  const int dim = model.input_dim;
  const std::size_t m = model.rules.size();
  std::vector<double> grad(m * static_cast<std::size_t>(dim) * 3, 0.0);
  const double scale = 2.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd x = X.row(i).transpose();
    const ForwardTrace trace = anfis_forward(model, x);
    const double residual = trace.output - y[static_cast<std::size_t>(i)];
    double total = 0.0;
    for (const double w : trace.w) total += w;
    if (total <= 0.0) continue;  // uniform-blend fallback has zero gradient
    for (std::size_t r = 0; r < m; ++r) {
      const double dydw =
          (trace.f[r] - trace.output) / total;  // quotient-rule factor
      if (trace.w[r] == 0.0) continue;
      const Rule& rule = model.rules[r];
      for (int j = 0; j < dim; ++j) {
        const BellMF& mf = rule.premise[static_cast<std::size_t>(j)];
        const double mu = membership(mf, x[j]);
        if (mu <= 0.0) continue;
        const double dwdmu = trace.w[r] / mu;
        const double u = (x[j] - mf.c) / mf.a;
        const double t = u * u;
        double dmu_da = 0.0, dmu_db = 0.0, dmu_dc = 0.0;
        if (t > 0.0) {
          const double tb = std::pow(t, mf.b);
          const double mu2 = mu * mu;
          dmu_da = 2.0 * mf.b * mu2 * tb / mf.a;
          dmu_db = -mu2 * tb * std::log(t);
          dmu_dc = 2.0 * mf.b * mu2 * std::pow(t, mf.b - 1.0) * (x[j] - mf.c) /
                   (mf.a * mf.a);
        }
        const double common = scale * residual * dydw * dwdmu;
        const std::size_t base =
            (r * static_cast<std::size_t>(dim) + static_cast<std::size_t>(j)) * 3;
        grad[base + 0] += common * dmu_da;
        grad[base + 1] += common * dmu_db;
        grad[base + 2] += common * dmu_dc;
      }
    }
  }
  return grad;
}

PremiseStep backprop_premise(const AnfisModel& model, const Eigen::MatrixXd& X,
                             const std::vector<double>& y, double step) {
  PremiseStep result;
  result.loss = batch_mse(model, X, y);
  if (!std::isfinite(result.loss)) {
    throw Error(ErrorCode::NonFiniteLoss, "premise update saw non-finite loss");
  }
  const std::vector<double> grad = premise_gradients(model, X, y);
  double norm2 = 0.0;
  for (const double g : grad) norm2 += g * g;
  const double norm = std::sqrt(norm2);
  result.model = model;
  if (norm == 0.0 || step == 0.0) return result;
  const int dim = model.input_dim;
  for (std::size_t r = 0; r < model.rules.size(); ++r) {
    for (int j = 0; j < dim; ++j) {
      const std::size_t base =
          (r * static_cast<std::size_t>(dim) + static_cast<std::size_t>(j)) * 3;
      BellMF& mf = result.model.rules[r].premise[static_cast<std::size_t>(j)];
      mf.a -= step * grad[base + 0] / norm;
      mf.b -= step * grad[base + 1] / norm;
      mf.c -= step * grad[base + 2] / norm;
      mf.a = std::max(mf.a, kParamFloor);
      mf.b = std::max(mf.b, kParamFloor);
    }
  }
  return result;
}

HybridTrainResult train_hybrid(const AnfisModel& model, const Eigen::MatrixXd& X,
                               const std::vector<double>& y,
                               const HybridTrainConfig& config,
                               const Eigen::MatrixXd* check_X,
                               const std::vector<double>* check_y) {
  if (config.epochs < 1 || config.max_iter < 1 ||
      !(config.initial_step > 0.0) || !(config.step_decrease > 0.0) ||
      !(config.step_decrease < 1.0) || !(config.step_increase > 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid hybrid training settings");
  }
  check_model(model);
  check_batch(model, X, y);
  const bool has_check = check_X != nullptr && check_y != nullptr &&
                         check_X->rows() > 0;
  if (has_check) {
    check_batch(model, *check_X, *check_y);
  }
  HybridTrainResult result;
  result.model = model;
  AnfisModel best_model = model;
  double best_metric = std::numeric_limits<double>::infinity();
  // training error by default; checking error when a checking set is given
  const auto selection_metric = [&](double train_loss) {
    return has_check ? batch_mse(result.model, *check_X, *check_y)
                     : train_loss;
  };
  const auto consider = [&](double metric) {
    if (std::isfinite(metric) && metric < best_metric) {
      best_metric = metric;
      best_model = result.model;
    }
    return metric;
  };
  double step = config.initial_step;
  double prev = std::numeric_limits<double>::infinity();
  int decrease_run = 0;
  std::vector<int> delta_signs;
  for (int iter = 0; iter < config.max_iter; ++iter) {
    result.model = fit_consequents_ls(result.model, X, y);
    const double post_ls = batch_mse(result.model, X, y);
    if (!std::isfinite(post_ls)) {
      throw Error(ErrorCode::NonFiniteLoss, "hybrid training loss diverged");
    }
    result.post_ls_history.push_back(post_ls);
    consider(selection_metric(post_ls));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      result.model = backprop_premise(result.model, X, y, step).model;
    }
    const double loss = batch_mse(result.model, X, y);
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::NonFiniteLoss, "hybrid training loss diverged");
    }
    result.history.push_back(loss);
    const double metric = consider(selection_metric(loss));
    if (has_check) {
      result.check_history.push_back(metric);
    }
    if (iter > 0 && std::abs(loss - prev) < 1e-10) {
      prev = loss;
      break;
    }
    if (iter > 0) {
      if (loss < prev) {
        ++decrease_run;
      } else {
        decrease_run = 0;
      }
      delta_signs.push_back(loss < prev ? -1 : (loss > prev ? 1 : 0));
      if (decrease_run >= 4) {
        step *= config.step_increase;
        decrease_run = 0;
        delta_signs.clear();
      } else if (delta_signs.size() >= 4) {
        const std::size_t k = delta_signs.size();
        bool oscillating = true;
        for (std::size_t t = k - 4; t + 1 < k; ++t) {
          if (delta_signs[t] == 0 || delta_signs[t + 1] == 0 ||
              delta_signs[t] == delta_signs[t + 1]) {
            oscillating = false;
            break;
          }
        }
        if (delta_signs[k - 1] == 0) oscillating = false;
        if (oscillating) {
          step *= config.step_decrease;
          decrease_run = 0;
          delta_signs.clear();
        }
      }
    }
    prev = loss;
  }
  // the adaptive step can overshoot late in the run; hand back the state
  // with the best selection metric, not the last iterate
  result.model = std::move(best_model);
  result.final_step = step;
  return result;
}

nlohmann::json anfis_to_json(const AnfisModel& model) {
  nlohmann::json rules = nlohmann::json::array();
  for (const Rule& rule : model.rules) {
    nlohmann::json premise = nlohmann::json::array();
    for (const BellMF& mf : rule.premise) {
      premise.push_back({{"a", mf.a}, {"b", mf.b}, {"c", mf.c}});
    }
    rules.push_back({{"premise", premise}, {"consequent", rule.consequent}});
  }
  return {{"input_dim", model.input_dim}, {"rules", rules}};
}

AnfisModel anfis_from_json(const nlohmann::json& doc) {
  AnfisModel model;
  try {
    model.input_dim = doc.at("input_dim").get<int>();
    for (const nlohmann::json& rule_doc : doc.at("rules")) {
      Rule rule;
      for (const nlohmann::json& mf_doc : rule_doc.at("premise")) {
        BellMF mf;
        mf.a = mf_doc.at("a").get<double>();
        mf.b = mf_doc.at("b").get<double>();
        mf.c = mf_doc.at("c").get<double>();
        rule.premise.push_back(mf);
      }
      rule.consequent = rule_doc.at("consequent").get<std::vector<double>>();
      model.rules.push_back(std::move(rule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError,
                std::string("malformed anfis document: ") + e.what());
  }
  check_model(model);
  return model;
}

}  // namespace tpayield
