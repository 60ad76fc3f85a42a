#include "tpayield/lbfgs.hpp"

#include <cmath>
#include <deque>

namespace tpayield {

namespace {

struct Evaluation {
  double f = 0.0;
  double slope = 0.0;  // directional derivative along d
  Eigen::VectorXd x;
  Eigen::VectorXd g;
};

class LineFunction {
 public:
  LineFunction(const Objective& objective, const Eigen::VectorXd& x,
               const Eigen::VectorXd& d)
      : objective_(objective), x0_(x), d_(d), g_(x.size()) {}

  Evaluation at(double alpha) {
    Evaluation e;
    e.x = x0_ + alpha * d_;
    e.f = objective_(e.x, g_);
    e.g = g_;
    e.slope = g_.dot(d_);
    return e;
  }

 private:
  const Objective& objective_;
  const Eigen::VectorXd& x0_;
  const Eigen::VectorXd& d_;
  Eigen::VectorXd g_;
};

/// Strong-Wolfe search (bracket then zoom by bisection). Returns true and
/// fills `out` on success.
bool wolfe_line_search(LineFunction& line, double f0, double slope0,
                       double alpha_init, const LbfgsOptions& options,
                       Evaluation& out) {
  const double c1 = options.c1;
  const double c2 = options.c2;

  auto zoom = [&](double lo, double f_lo, double hi) -> bool {
    for (int i = 0; i < options.max_line_search; ++i) {
      const double alpha = 0.5 * (lo + hi);
      Evaluation e = line.at(alpha);
      if (!std::isfinite(e.f) || e.f > f0 + c1 * alpha * slope0 ||
          e.f >= f_lo) {
        hi = alpha;
      } else {
        if (std::fabs(e.slope) <= -c2 * slope0) {
          out = e;
          return true;
        }
        if (e.slope * (hi - lo) >= 0.0) hi = lo;
        lo = alpha;
        f_lo = e.f;
      }
      if (std::fabs(hi - lo) < 1e-16 * std::max(1.0, std::fabs(lo))) break;
    }
    // fall back to the best sufficient-decrease point found
    if (lo > 0.0) {
      Evaluation e = line.at(lo);
      if (std::isfinite(e.f) && e.f <= f0 + c1 * lo * slope0) {
        out = e;
        return true;
      }
    }
    return false;
  };

  double alpha_prev = 0.0;
  double f_prev = f0;
  double alpha = alpha_init;
  for (int i = 0; i < options.max_line_search; ++i) {
    Evaluation e = line.at(alpha);
    if (!std::isfinite(e.f) || e.f > f0 + c1 * alpha * slope0 ||
        (i > 0 && e.f >= f_prev)) {
      return zoom(alpha_prev, f_prev, alpha);
    }
    if (std::fabs(e.slope) <= -c2 * slope0) {
      out = e;
      return true;
    }
    if (e.slope >= 0.0) {
      return zoom(alpha, e.f, alpha_prev);
    }
    alpha_prev = alpha;
    f_prev = e.f;
    alpha *= 2.0;
    if (alpha > 1e12) break;
  }
  return false;
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective,
                           const Eigen::VectorXd& x0,
                           const LbfgsOptions& options) {
  LbfgsResult result;
  result.x = x0;
  Eigen::VectorXd g(x0.size());
  result.f = objective(result.x, g);

  std::deque<Eigen::VectorXd> s_list, y_list;
  std::deque<double> rho_list;

  for (int iter = 0; iter < options.max_iter; ++iter) {
    if (!std::isfinite(result.f) || !g.allFinite()) break;
    if (g.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
      result.converged = true;
      break;
    }

    // Two-loop recursion for the search direction.
    Eigen::VectorXd q = g;
    std::vector<double> alpha_cache(s_list.size());
    for (std::size_t i = s_list.size(); i-- > 0;) {
      alpha_cache[i] = rho_list[i] * s_list[i].dot(q);
      q -= alpha_cache[i] * y_list[i];
    }
    double gamma = 1.0;
    if (!s_list.empty()) {
      gamma = s_list.back().dot(y_list.back()) /
              y_list.back().dot(y_list.back());
    }
    Eigen::VectorXd direction = gamma * q;
    for (std::size_t i = 0; i < s_list.size(); ++i) {
      const double beta = rho_list[i] * y_list[i].dot(direction);
      direction += s_list[i] * (alpha_cache[i] - beta);
    }
    direction = -direction;

    double slope = g.dot(direction);
    if (slope >= 0.0) {
      // curvature memory has gone stale; fall back to steepest descent
      direction = -g;
      slope = g.dot(direction);
      s_list.clear();
      y_list.clear();
      rho_list.clear();
    }

    const double alpha_init =
        s_list.empty() && iter == 0
            ? std::min(1.0, 1.0 / g.lpNorm<1>())
            : 1.0;

    LineFunction line(objective, result.x, direction);
    Evaluation accepted;
    if (!wolfe_line_search(line, result.f, slope, alpha_init, options,
                           accepted)) {
      result.line_search_failed = true;
      break;
    }

    const Eigen::VectorXd s = accepted.x - result.x;
    const Eigen::VectorXd y = accepted.g - g;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      s_list.push_back(s);
      y_list.push_back(y);
      rho_list.push_back(1.0 / sy);
      if (static_cast<int>(s_list.size()) > options.memory) {
        s_list.pop_front();
        y_list.pop_front();
        rho_list.pop_front();
      }
    }

    result.x = accepted.x;
    result.f = accepted.f;
    g = accepted.g;
    result.iterations = iter + 1;
    result.history.push_back(result.f);
  }
  return result;
}

}  // namespace tpayield
