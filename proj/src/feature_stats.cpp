#include "tpayield/feature_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tpayield/errors.hpp"
#include "tpayield/stats_math.hpp"

namespace tpayield {

namespace {

bool is_constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(),
                     [&](double x) { return x == v.front(); });
}

/// Mid-ranks (1-based, ties averaged) of the pooled values.
std::vector<double> mid_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double logistic_nll(const Eigen::MatrixXd& design, const Eigen::VectorXd& yb,
                    const Eigen::VectorXd& beta, double ridge) {
  const Eigen::VectorXd eta = design * beta;
  double nll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // log(1 + exp(eta)) - y*eta, evaluated without overflow
    const double t = eta[i];
    nll += (t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)));
    nll -= yb[i] * t;
  }
  if (ridge > 0.0) {
    // intercept (last column) stays unpenalized
    nll += 0.5 * ridge * beta.head(beta.size() - 1).squaredNorm();
  }
  return nll;
}

struct NewtonFit {
  Eigen::VectorXd beta;
  int iterations = 0;
  bool singular = false;
  bool separated = false;
};

NewtonFit fit_logistic_newton(const Eigen::MatrixXd& design,
                              const Eigen::VectorXd& yb, int max_iter,
                              double ridge) {
  const Eigen::Index p = design.cols();
  NewtonFit fit;
  fit.beta = Eigen::VectorXd::Zero(p);
  double nll = logistic_nll(design, yb, fit.beta, ridge);

  for (int iter = 0; iter < max_iter; ++iter) {
    fit.iterations = iter + 1;
    const Eigen::VectorXd eta = design * fit.beta;
    Eigen::VectorXd prob(eta.size());
    Eigen::VectorXd w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      prob[i] = 1.0 / (1.0 + std::exp(-eta[i]));
      w[i] = prob[i] * (1.0 - prob[i]);
    }
    Eigen::VectorXd grad = design.transpose() * (prob - yb);
    Eigen::MatrixXd hess = design.transpose() * w.asDiagonal() * design;
    if (ridge > 0.0) {
      grad.head(p - 1) += ridge * fit.beta.head(p - 1);
      for (Eigen::Index j = 0; j < p - 1; ++j) hess(j, j) += ridge;
    }
    if (grad.lpNorm<Eigen::Infinity>() < 1e-8) break;

    const Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    const Eigen::VectorXd step = ldlt.solve(grad);
    const double residual = (hess * step - grad).lpNorm<Eigen::Infinity>();
    if (ldlt.rcond() < 1e-10 || !step.allFinite() ||
        residual > 1e-6 * std::max(1.0, grad.lpNorm<Eigen::Infinity>())) {
      fit.singular = true;
      return fit;
    }

    // Damping: halve the step until the objective stops increasing.
    double scale = 1.0;
    Eigen::VectorXd candidate = fit.beta - step;
    double candidate_nll = logistic_nll(design, yb, candidate, ridge);
    for (int halving = 0; halving < 30 && candidate_nll > nll; ++halving) {
      scale *= 0.5;
      candidate = fit.beta - scale * step;
      candidate_nll = logistic_nll(design, yb, candidate, ridge);
    }
    if (candidate_nll > nll) break;  // no progress at any damping level
    fit.beta = candidate;
    nll = candidate_nll;

    if (fit.beta.head(p - 1).lpNorm<Eigen::Infinity>() > 1e4) {
      fit.separated = true;
      return fit;
    }
  }
  return fit;
}

}  // namespace

CorrelationTest pearson_pvalue(const std::vector<double>& x,
                               const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "pearson: vectors must have equal length");
  }
  const std::size_t n = x.size();
  if (n < 3) {
    throw Error(ErrorCode::DegenerateInput, "pearson: need at least 3 points");
  }
  if (is_constant(x) || is_constant(y)) {
    throw Error(ErrorCode::DegenerateInput, "pearson: constant input vector");
  }

  const double nd = static_cast<double>(n);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= nd;
  my /= nd;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }

  CorrelationTest out;
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double nu = nd - 2.0;
  if (std::fabs(out.r) == 1.0) {
    out.p = 0.0;
  } else {
    const double t = out.r * std::sqrt(nu / (1.0 - out.r * out.r));
    out.p = student_t_two_sided_p(t, nu);
  }
  return out;
}

RankTest kruskal_wallis_pvalue(
    const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) {
    throw Error(ErrorCode::InvalidArgument,
                "kruskal-wallis: need at least 2 groups");
  }
  std::vector<double> pooled;
  std::vector<std::size_t> group_of;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) {
      throw Error(ErrorCode::InvalidArgument,
                  "kruskal-wallis: empty group " + std::to_string(g));
    }
    for (double v : groups[g]) {
      pooled.push_back(v);
      group_of.push_back(g);
    }
  }
  const std::size_t N = pooled.size();
  if (N < 3) {
    throw Error(ErrorCode::InvalidArgument,
                "kruskal-wallis: need at least 3 values");
  }
  if (is_constant(pooled)) return {0.0, 1.0};

  const std::vector<double> ranks = mid_ranks(pooled);
  std::vector<double> rank_sum(groups.size(), 0.0);
  for (std::size_t i = 0; i < N; ++i) rank_sum[group_of[i]] += ranks[i];

  const double Nd = static_cast<double>(N);
  double H = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    H += rank_sum[g] * rank_sum[g] / static_cast<double>(groups[g].size());
  }
  H = 12.0 / (Nd * (Nd + 1.0)) * H - 3.0 * (Nd + 1.0);

  // Tie correction over runs of equal pooled values.
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_sum = 0.0;
  std::size_t i = 0;
  while (i < N) {
    std::size_t j = i;
    while (j + 1 < N && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie_sum += t * t * t - t;
    i = j + 1;
  }
  const double correction = 1.0 - tie_sum / (Nd * Nd * Nd - Nd);
  if (correction <= 0.0) return {0.0, 1.0};
  H /= correction;
  if (H < 0.0) H = 0.0;  // guard against rounding just below zero

  const double dof = static_cast<double>(groups.size()) - 1.0;
  return {H, chi_square_sf(H, dof)};
}

SignificanceTable significance_table(const Dataset& dataset, double alpha) {
  SignificanceTable table;
  table.alpha = alpha;
  const std::vector<double> yield = yield_vector(dataset);

  for (int c = 0; c < kInputCount; ++c) {
    const FeatureSchema& feature = dataset.schema[static_cast<std::size_t>(c)];
    SignificanceRow row;
    row.feature = feature.name;
    try {
      if (feature.kind == FeatureKind::Continuous) {
        row.test = "pearson";
        std::vector<double> x;
        x.reserve(dataset.n());
        for (const auto& record : dataset.records) {
          const Cell& cell = record.inputs[static_cast<std::size_t>(c)];
          x.push_back(cell.kind == Cell::Kind::Missing ? 1.0 : cell.number);
        }
        const CorrelationTest result = pearson_pvalue(x, yield);
        row.statistic = result.r;
        row.p = result.p;
      } else {
        row.test = "kruskal-wallis";
        std::vector<std::vector<double>> groups;
        for (const std::string& label : feature.allowed_labels) {
          std::vector<double> group;
          for (std::size_t r = 0; r < dataset.n(); ++r) {
            if (dataset.records[r].inputs[static_cast<std::size_t>(c)].label ==
                label) {
              group.push_back(dataset.records[r].yield);
            }
          }
          if (!group.empty()) groups.push_back(std::move(group));
        }
        const RankTest result = kruskal_wallis_pvalue(groups);
        row.statistic = result.H;
        row.p = result.p;
      }
      row.significant = row.p < alpha;
    } catch (const Error& e) {
      row.statistic = 0.0;
      row.p = 1.0;
      row.significant = false;
      row.note = e.what();
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

FeatureRanking rank_features_logistic(const Eigen::MatrixXd& X,
                                      const std::vector<double>& y,
                                      int max_iter,
                                      const std::vector<std::string>& names) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (static_cast<std::size_t>(n) != y.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "logistic ranking: X rows must match y length");
  }
  if (names.size() != static_cast<std::size_t>(p)) {
    throw Error(ErrorCode::LengthMismatch,
                "logistic ranking: one name per column required");
  }
  if (n <= 10) {
    throw Error(ErrorCode::DegenerateInput,
                "logistic ranking: need more than 10 rows");
  }

  FeatureRanking ranking;
  ranking.threshold = median(y);
  Eigen::VectorXd yb(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    yb[i] = y[static_cast<std::size_t>(i)] > ranking.threshold ? 1.0 : 0.0;
  }
  if (yb.sum() == 0.0 || yb.sum() == static_cast<double>(n)) {
    throw Error(ErrorCode::DegenerateTarget,
                "logistic ranking: binarized target has a single class");
  }

  Eigen::MatrixXd design(n, p + 1);
  design.leftCols(p) = X;
  design.col(p).setOnes();

  NewtonFit fit = fit_logistic_newton(design, yb, max_iter, 0.0);
  if (fit.singular || fit.separated || !fit.beta.allFinite()) {
    ranking.ridge_fallback = true;
    fit = fit_logistic_newton(design, yb, max_iter, 1e-6);
  }
  if (!fit.beta.allFinite()) {
    throw Error(ErrorCode::NonConvergence,
                "logistic ranking: coefficients did not stay finite");
  }
  ranking.iterations = fit.iterations;

  std::vector<int> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double wa = std::fabs(fit.beta[a]);
    const double wb = std::fabs(fit.beta[b]);
    return wa != wb ? wa > wb : a < b;
  });
  for (std::size_t i = 0; i < order.size(); ++i) {
    RankedFeature entry;
    entry.feature = names[static_cast<std::size_t>(order[i])];
    entry.column = order[i];
    entry.weight = std::fabs(fit.beta[order[i]]);
    entry.rank = static_cast<int>(i) + 1;
    ranking.entries.push_back(std::move(entry));
  }
  return ranking;
}

}  // namespace tpayield
