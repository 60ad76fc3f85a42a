#include "tpayield/mlp.hpp"

#include <cmath>
#include <limits>

#include "tpayield/errors.hpp"
#include "tpayield/lbfgs.hpp"
#include "tpayield/metrics.hpp"
#include "tpayield/rng.hpp"

namespace tpayield {

namespace {

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

std::size_t param_count(const MlpParams& p) {
  return static_cast<std::size_t>(p.W1.size() + p.b1.size() + p.W2.size()) + 1;
}

// Flat layout: W1 row-major, b1, W2, b2.
Eigen::VectorXd flatten(const MlpParams& p) {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(param_count(p)));
  Eigen::Index at = 0;
  for (Eigen::Index i = 0; i < p.W1.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.W1.cols(); ++j) flat[at++] = p.W1(i, j);
  }
  for (Eigen::Index i = 0; i < p.b1.size(); ++i) flat[at++] = p.b1[i];
  for (Eigen::Index i = 0; i < p.W2.size(); ++i) flat[at++] = p.W2[i];
  flat[at] = p.b2;
  return flat;
}

void unflatten(const Eigen::VectorXd& flat, MlpParams& p) {
  Eigen::Index at = 0;
  for (Eigen::Index i = 0; i < p.W1.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.W1.cols(); ++j) p.W1(i, j) = flat[at++];
  }
  for (Eigen::Index i = 0; i < p.b1.size(); ++i) p.b1[i] = flat[at++];
  for (Eigen::Index i = 0; i < p.W2.size(); ++i) p.W2[i] = flat[at++];
  p.b2 = flat[at];
}

Eigen::VectorXd flatten_grad(const MlpGradients& g) {
  MlpParams shim;
  shim.W1 = g.dW1;
  shim.b1 = g.db1;
  shim.W2 = g.dW2;
  shim.b2 = g.db2;
  return flatten(shim);
}

}  // namespace

MlpParams mlp_init(int input_dim, int hidden, std::uint64_t seed) {
  if (input_dim < 1 || hidden < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "mlp_init: dimensions must be >= 1");
  }
  Rng rng(seed);
  MlpParams p;
  p.W1.resize(hidden, input_dim);
  const double limit1 =
      std::sqrt(6.0 / static_cast<double>(input_dim + hidden));
  for (int i = 0; i < hidden; ++i) {
    for (int j = 0; j < input_dim; ++j) {
      p.W1(i, j) = rng.uniform(-limit1, limit1);
    }
  }
  p.b1 = Eigen::VectorXd::Zero(hidden);
  p.W2.resize(hidden);
  const double limit2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
  for (int i = 0; i < hidden; ++i) p.W2[i] = rng.uniform(-limit2, limit2);
  p.b2 = 0.0;
  p.output_gain = 1.0;
  return p;
}

MlpForward mlp_forward(const MlpParams& params, const Eigen::VectorXd& x) {
  if (x.size() != params.W1.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "mlp_forward: input size");
  }
  MlpForward out;
  out.hidden_a = (params.W1 * x + params.b1).array().tanh();
  out.yhat = params.output_gain * (params.W2.dot(out.hidden_a) + params.b2);
  return out;
}

std::vector<double> mlp_predict(const MlpParams& params,
                                const Eigen::MatrixXd& X) {
  if (X.cols() != params.W1.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "mlp_predict: input size");
  }
  const Eigen::MatrixXd A =
      ((X * params.W1.transpose()).rowwise() + params.b1.transpose())
          .array()
          .tanh();
  const Eigen::VectorXd yhat =
      params.output_gain *
      ((A * params.W2.transpose()).array() + params.b2);
  return {yhat.data(), yhat.data() + yhat.size()};
}

double mlp_loss(const std::vector<double>& yhat,
                const std::vector<double>& y) {
  if (yhat.size() != y.size() || y.empty()) {
    throw Error(ErrorCode::LengthMismatch, "mlp_loss: length mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sum += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  }
  return sum / static_cast<double>(y.size());
}

MlpBackward mlp_backward(const MlpParams& params, const Eigen::MatrixXd& X,
                         const std::vector<double>& y) {
  const Eigen::Index n = X.rows();
  if (static_cast<std::size_t>(n) != y.size() || n == 0) {
    throw Error(ErrorCode::LengthMismatch, "mlp_backward: batch size");
  }
  if (X.cols() != params.W1.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "mlp_backward: input size");
  }

  const Eigen::MatrixXd A =
      ((X * params.W1.transpose()).rowwise() + params.b1.transpose())
          .array()
          .tanh();                                        // n x S
  const Eigen::VectorXd yhat =
      params.output_gain *
      ((A * params.W2.transpose()).array() + params.b2);  // n
  const Eigen::VectorXd yv = to_vector(y);

  MlpBackward out;
  const Eigen::VectorXd residual = yhat - yv;
  out.loss = residual.squaredNorm() / static_cast<double>(n);

  // delta_out_i = dE/dyhat_i = (2/n)(yhat - y), scaled by the output gain.
  const Eigen::VectorXd delta_out =
      (2.0 / static_cast<double>(n)) * params.output_gain * residual;
  out.grad.dW2 = delta_out.transpose() * A;  // 1 x S
  out.grad.db2 = delta_out.sum();
  // delta_hidden = (1 - a^2) .* (W2^T delta_out), per sample.
  const Eigen::MatrixXd delta_hidden =
      (delta_out * params.W2).array() * (1.0 - A.array().square());  // n x S
  out.grad.dW1 = delta_hidden.transpose() * X;  // S x R
  out.grad.db1 = delta_hidden.colwise().sum().transpose();
  return out;
}

MlpParams gd_step(const MlpParams& params, const MlpGradients& grad,
                  double learning_rate) {
  if (learning_rate < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "gd_step: negative learning rate");
  }
  MlpParams next = params;
  next.W1 -= learning_rate * grad.dW1;
  next.b1 -= learning_rate * grad.db1;
  next.W2 -= learning_rate * grad.dW2;
  next.b2 -= learning_rate * grad.db2;
  return next;
}

MlpTrainResult mlp_train(const MlpParams& params, const Eigen::MatrixXd& X,
                         const std::vector<double>& y,
                         const MlpTrainConfig& config) {
  if (config.trainer != "gd" && config.trainer != "lbfgs") {
    throw Error(ErrorCode::InvalidArgument,
                "mlp_train: trainer must be 'gd' or 'lbfgs'");
  }
  if (config.max_iter < 0 || config.learning_rate <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "mlp_train: bad config");
  }
  if (X.rows() == 0 || static_cast<std::size_t>(X.rows()) != y.size()) {
    throw Error(ErrorCode::LengthMismatch, "mlp_train: batch size");
  }

  MlpTrainResult result;
  result.params = params;

  if (config.trainer == "gd") {
    for (int iter = 0; iter < config.max_iter; ++iter) {
      const MlpBackward step = mlp_backward(result.params, X, y);
      if (!std::isfinite(step.loss)) {
        throw Error(ErrorCode::NonFiniteLoss, "mlp_train: loss diverged");
      }
      result.history.push_back(step.loss);
      const double gnorm = std::max(
          {step.grad.dW1.lpNorm<Eigen::Infinity>(),
           step.grad.db1.lpNorm<Eigen::Infinity>(),
           step.grad.dW2.lpNorm<Eigen::Infinity>(), std::fabs(step.grad.db2)});
      if (gnorm < config.tolerance) break;
      result.params = gd_step(result.params, step.grad, config.learning_rate);
    }
    return result;
  }

  MlpParams scratch = params;
  const Objective objective = [&](const Eigen::VectorXd& flat,
                                  Eigen::VectorXd& grad_out) -> double {
    unflatten(flat, scratch);
    const MlpBackward step = mlp_backward(scratch, X, y);
    grad_out = flatten_grad(step.grad);
    return step.loss;
  };

  LbfgsOptions options;
  options.max_iter = config.max_iter;
  options.memory = config.lbfgs_memory;
  options.gradient_tolerance = config.tolerance;
  const LbfgsResult fit = lbfgs_minimize(objective, flatten(params), options);
  if (!std::isfinite(fit.f)) {
    throw Error(ErrorCode::NonFiniteLoss, "mlp_train: loss diverged");
  }
  unflatten(fit.x, result.params);
  result.history = fit.history;
  return result;
}

SweepResult sweep_hidden_size(int lo, int hi, const Eigen::MatrixXd& train_X,
                              const std::vector<double>& train_y,
                              const Eigen::MatrixXd& val_X,
                              const std::vector<double>& val_y,
                              const MlpTrainConfig& config,
                              std::uint64_t seed) {
  if (lo < 1 || hi < lo) {
    throw Error(ErrorCode::InvalidArgument, "sweep: need 1 <= lo <= hi");
  }
  SweepResult result;
  double best_val_r2 = -std::numeric_limits<double>::infinity();
  for (int hidden = lo; hidden <= hi; ++hidden) {
    SweepEntry entry;
    entry.hidden = hidden;
    try {
      const MlpParams initial =
          mlp_init(static_cast<int>(train_X.cols()), hidden,
                   derive_seed(seed, {static_cast<std::uint64_t>(hidden)}));
      const MlpTrainResult trained =
          mlp_train(initial, train_X, train_y, config);
      const std::vector<double> train_pred =
          mlp_predict(trained.params, train_X);
      const std::vector<double> val_pred = mlp_predict(trained.params, val_X);
      entry.train_r2 = r_squared(train_y, train_pred);
      entry.train_rmse = rmse(train_y, train_pred);
      entry.val_r2 = r_squared(val_y, val_pred);
      entry.val_rmse = rmse(val_y, val_pred);
      entry.valid = true;
      if (entry.val_r2 > best_val_r2) {
        best_val_r2 = entry.val_r2;
        result.best_hidden = hidden;
      }
    } catch (const Error& e) {
      entry.error = e.what();
    }
    result.curve.push_back(std::move(entry));
  }
  if (result.best_hidden == 0) {
    throw Error(ErrorCode::NonConvergence, "sweep: every hidden size failed");
  }
  return result;
}

nlohmann::json mlp_to_json(const MlpParams& params) {
  nlohmann::json doc;
  doc["input_dim"] = params.input_dim();
  doc["hidden_dim"] = params.hidden_dim();
  doc["output_gain"] = params.output_gain;
  std::vector<double> w1;
  for (Eigen::Index i = 0; i < params.W1.rows(); ++i) {
    for (Eigen::Index j = 0; j < params.W1.cols(); ++j) {
      w1.push_back(params.W1(i, j));
    }
  }
  doc["W1"] = w1;
  doc["b1"] = std::vector<double>(params.b1.data(),
                                  params.b1.data() + params.b1.size());
  doc["W2"] = std::vector<double>(params.W2.data(),
                                  params.W2.data() + params.W2.size());
  doc["b2"] = params.b2;
  return doc;
}

MlpParams mlp_from_json(const nlohmann::json& doc) {
  MlpParams params;
  const int input_dim = doc.at("input_dim").get<int>();
  const int hidden = doc.at("hidden_dim").get<int>();
  const auto w1 = doc.at("W1").get<std::vector<double>>();
  const auto b1 = doc.at("b1").get<std::vector<double>>();
  const auto w2 = doc.at("W2").get<std::vector<double>>();
  if (w1.size() != static_cast<std::size_t>(input_dim * hidden) ||
      b1.size() != static_cast<std::size_t>(hidden) ||
      w2.size() != static_cast<std::size_t>(hidden)) {
    throw Error(ErrorCode::ParseError, "mlp_from_json: shape mismatch");
  }
  params.W1.resize(hidden, input_dim);
  for (int i = 0; i < hidden; ++i) {
    for (int j = 0; j < input_dim; ++j) {
      params.W1(i, j) = w1[static_cast<std::size_t>(i * input_dim + j)];
    }
  }
  params.b1 = Eigen::Map<const Eigen::VectorXd>(b1.data(), hidden);
  params.W2 = Eigen::Map<const Eigen::RowVectorXd>(w2.data(), hidden);
  params.b2 = doc.at("b2").get<double>();
  params.output_gain = doc.at("output_gain").get<double>();
  return params;
}

}  // namespace tpayield
