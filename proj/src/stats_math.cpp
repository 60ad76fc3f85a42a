#include "tpayield/stats_math.hpp"

#include <algorithm>
#include <cmath>

#include "tpayield/errors.hpp"

namespace tpayield {

namespace {

// Continued fraction for the incomplete beta, modified Lentz iteration.
double beta_cf(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return h;
}

// Series expansion of P(s,x), valid for x < s+1.
double lower_gamma_series(double s, double x) {
  double term = 1.0 / s;
  double sum = term;
  double ap = s;
  for (int i = 0; i < 1000; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

// Continued fraction for Q(s,x), valid for x >= s+1 (modified Lentz).
double upper_gamma_cf(double s, double x) {
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - s);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "incomplete beta requires a, b > 0");
  }
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                          std::lgamma(b) + a * std::log(x) +
                          b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(a, b, x) / a;
  }
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double regularized_lower_gamma(double s, double x) {
  if (!(s > 0.0) || x < 0.0) {
    throw Error(ErrorCode::InvalidArgument,
                "incomplete gamma requires s > 0, x >= 0");
  }
  if (x == 0.0) return 0.0;
  if (x < s + 1.0) return lower_gamma_series(s, x);
  return 1.0 - upper_gamma_cf(s, x);
}

double regularized_upper_gamma(double s, double x) {
  if (!(s > 0.0) || x < 0.0) {
    throw Error(ErrorCode::InvalidArgument,
                "incomplete gamma requires s > 0, x >= 0");
  }
  if (x == 0.0) return 1.0;
  if (x < s + 1.0) return 1.0 - lower_gamma_series(s, x);
  return upper_gamma_cf(s, x);
}

double student_t_two_sided_p(double t, double nu) {
  if (!(nu > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "degrees of freedom must be > 0");
  }
  if (std::isinf(t)) return 0.0;
  const double x = nu / (nu + t * t);
  return std::clamp(regularized_incomplete_beta(nu / 2.0, 0.5, x), 0.0, 1.0);
}

double chi_square_sf(double x, double k) {
  if (!(k > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "degrees of freedom must be > 0");
  }
  if (x <= 0.0) return 1.0;
  return std::clamp(regularized_upper_gamma(k / 2.0, x / 2.0), 0.0, 1.0);
}

}  // namespace tpayield
