#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace tpayield {

/// Generalized bell membership: mu(x) = 1 / (1 + ((x-c)/a)^(2b)).
struct BellMF {
  double a = 1.0;  // width, > 0
  double b = 1.0;  // shape, > 0
  double c = 0.0;  // center
};

double membership(const BellMF& mf, double x);

/// First-order Takagi-Sugeno rule: bell premise per input, linear consequent
/// f = consequent[0] + sum_j consequent[j+1] * x_j.
struct Rule {
  std::vector<BellMF> premise;
  std::vector<double> consequent;
};

struct AnfisModel {
  int input_dim = 0;
  std::vector<Rule> rules;
};

struct ForwardTrace {
  std::vector<double> w;     // firing strengths (products of memberships)
  std::vector<double> wbar;  // normalized; uniform if every w underflows to 0
  std::vector<double> f;     // consequent values
  double output = 0.0;
};

ForwardTrace anfis_forward(const AnfisModel& model, const Eigen::VectorXd& x);

std::vector<double> anfis_predict(const AnfisModel& model,
                                  const Eigen::MatrixXd& X);

struct SubClusterConfig {
  double range_of_influence = 0.9;
  double squash_factor = 1.2;
  double acceptance_ratio = 0.5;
  double rejection_ratio = 0.2;
};

/// Potential-based center selection over the rows of X. Distances are taken
/// in per-column unit-box coordinates so the radii are fractions of the data
/// spread. Returns row indices in descending-potential acceptance order; ties
/// in potential go to the lowest row index.
std::vector<std::size_t> subtractive_cluster(const Eigen::MatrixXd& X,
                                             const SubClusterConfig& config);

/// One rule per center: premise centers at the data point, width
/// a = range_of_influence * column range / sqrt(8), shape b = 1,
/// consequents 0.
AnfisModel init_from_clusters(const std::vector<std::size_t>& centers,
                              const Eigen::MatrixXd& X,
                              const SubClusterConfig& config);

/// Largest rule count the consequent least-squares stage supports for a given
/// training-set size while staying overdetermined by at least 2x
/// (rows >= 2 * rules * (input_dim + 1)); never less than 1.
std::size_t consequent_rule_budget(std::size_t rows, int input_dim);

struct LsInfo {
  Eigen::Index rank = 0;
  bool rank_deficient = false;
};

/// Exact least-squares fit of all consequents with premises held fixed
/// (rank-revealing orthogonal decomposition; minimum-norm solution when the
/// design is rank-deficient).
AnfisModel fit_consequents_ls(const AnfisModel& model,
                              const Eigen::MatrixXd& X,
                              const std::vector<double>& y,
                              LsInfo* info = nullptr);

struct PremiseStep {
  AnfisModel model;
  double loss = 0.0;  // mean squared error of the incoming model
};

/// One normalized-gradient descent step on every premise (a, b, c), step
/// measured along the unit gradient direction; a and b clamped to >= 1e-6.
PremiseStep backprop_premise(const AnfisModel& model, const Eigen::MatrixXd& X,
                             const std::vector<double>& y, double step);

/// Premise gradients of the batch mean squared error, laid out rule-major as
/// (a, b, c) triples. Exposed for gradient-check tests.
std::vector<double> premise_gradients(const AnfisModel& model,
                                      const Eigen::MatrixXd& X,
                                      const std::vector<double>& y);

struct HybridTrainConfig {
  int epochs = 2;     // premise-update passes per iteration
  int max_iter = 200;
  double initial_step = 1e-4;
  double step_decrease = 0.9;
  double step_increase = 1.2;
};

struct HybridTrainResult {
  AnfisModel model;
  std::vector<double> history;          // E after each hybrid iteration
  std::vector<double> post_ls_history;  // E right after each LS pass
  std::vector<double> check_history;    // checking E per iteration, if given
  double final_step = 0.0;
};

/// Alternates exact least squares on consequents with `epochs` premise
/// updates, adapting the step (x increase after 4 consecutive error drops,
/// x decrease after two consecutive up-down oscillations); stops early when
/// |dE| < 1e-10. Returns the state with the lowest recorded training error,
/// or the lowest checking error when a checking set is supplied (the usual
/// guard against premise-tuning overfit).
HybridTrainResult train_hybrid(const AnfisModel& model,
                               const Eigen::MatrixXd& X,
                               const std::vector<double>& y,
                               const HybridTrainConfig& config,
                               const Eigen::MatrixXd* check_X = nullptr,
                               const std::vector<double>* check_y = nullptr);

nlohmann::json anfis_to_json(const AnfisModel& model);
AnfisModel anfis_from_json(const nlohmann::json& doc);

}  // namespace tpayield
