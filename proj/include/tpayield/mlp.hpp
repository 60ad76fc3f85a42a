#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace tpayield {

/// Two-layer perceptron: tanh hidden layer, linear output scaled by a fixed
/// unit gain.
struct MlpParams {
  Eigen::MatrixXd W1;      // hidden x input
  Eigen::VectorXd b1;      // hidden
  Eigen::RowVectorXd W2;   // 1 x hidden
  double b2 = 0.0;
  double output_gain = 1.0;

  int input_dim() const { return static_cast<int>(W1.cols()); }
  int hidden_dim() const { return static_cast<int>(W1.rows()); }
};

struct MlpGradients {
  Eigen::MatrixXd dW1;
  Eigen::VectorXd db1;
  Eigen::RowVectorXd dW2;
  double db2 = 0.0;
};

struct MlpTrainConfig {
  std::string trainer = "lbfgs";  // "gd" or "lbfgs"
  double learning_rate = 0.01;    // gd only
  int max_iter = 200;
  int lbfgs_memory = 10;
  double tolerance = 1e-8;  // gradient max-norm stop threshold
};

/// Xavier-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases.
MlpParams mlp_init(int input_dim, int hidden, std::uint64_t seed);

struct MlpForward {
  double yhat = 0.0;
  Eigen::VectorXd hidden_a;
};

MlpForward mlp_forward(const MlpParams& params, const Eigen::VectorXd& x);

/// Batch predictions, one row of X per sample.
std::vector<double> mlp_predict(const MlpParams& params,
                                const Eigen::MatrixXd& X);

/// Mean squared error (1/n) * sum (y - yhat)^2.
double mlp_loss(const std::vector<double>& yhat, const std::vector<double>& y);

struct MlpBackward {
  double loss = 0.0;
  MlpGradients grad;  // true gradients of the mean squared error
};

MlpBackward mlp_backward(const MlpParams& params, const Eigen::MatrixXd& X,
                         const std::vector<double>& y);

MlpParams gd_step(const MlpParams& params, const MlpGradients& grad,
                  double learning_rate);

struct MlpTrainResult {
  MlpParams params;
  std::vector<double> history;  // loss after each accepted update
};

MlpTrainResult mlp_train(const MlpParams& params, const Eigen::MatrixXd& X,
                         const std::vector<double>& y,
                         const MlpTrainConfig& config);

struct SweepEntry {
  int hidden = 0;
  bool valid = false;
  double train_r2 = 0.0;
  double val_r2 = 0.0;
  double train_rmse = 0.0;
  double val_rmse = 0.0;
  std::string error;  // set when this size failed to train
};

struct SweepResult {
  int best_hidden = 0;  // argmax validation r2, ties to the smaller size
  std::vector<SweepEntry> curve;
};

/// Trains one net per hidden size in [lo, hi] (per-size seed derived from
/// `seed` and the size) and scores each on the train and validation sets.
SweepResult sweep_hidden_size(int lo, int hi, const Eigen::MatrixXd& train_X,
                              const std::vector<double>& train_y,
                              const Eigen::MatrixXd& val_X,
                              const std::vector<double>& val_y,
                              const MlpTrainConfig& config,
                              std::uint64_t seed);

nlohmann::json mlp_to_json(const MlpParams& params);
MlpParams mlp_from_json(const nlohmann::json& doc);

}  // namespace tpayield
