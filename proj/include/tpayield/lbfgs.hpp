#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace tpayield {

struct LbfgsOptions {
  int max_iter = 200;
  int memory = 10;
  double gradient_tolerance = 1e-8;  // stop when ||g||_inf falls below
  double c1 = 1e-4;                  // Armijo sufficient-decrease constant
  double c2 = 0.9;                   // Wolfe curvature constant
  int max_line_search = 40;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;        // gradient tolerance reached
  bool line_search_failed = false;
  std::vector<double> history;   // f after each accepted step
};

/// Objective: fills grad (same size as x) and returns f(x).
using Objective =
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Limited-memory BFGS with two-loop recursion and a strong-Wolfe line
/// search. Deterministic: no randomness, result depends only on the
/// objective, start point, and options.
LbfgsResult lbfgs_minimize(const Objective& objective,
                           const Eigen::VectorXd& x0,
                           const LbfgsOptions& options);

}  // namespace tpayield
