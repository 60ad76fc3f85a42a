#pragma once

namespace tpayield {

/// Regularized incomplete beta I_x(a,b), continued-fraction evaluation
/// (|error| < 1e-12 over the tested domain). a, b > 0; x in [0,1].
double regularized_incomplete_beta(double a, double b, double x);

/// Regularized lower incomplete gamma P(s,x) for s > 0, x >= 0.
double regularized_lower_gamma(double s, double x);

/// Q(s,x) = 1 - P(s,x).
double regularized_upper_gamma(double s, double x);

/// Two-sided p-value of a Student-t statistic with nu degrees of freedom:
/// p = I_{nu/(nu+t^2)}(nu/2, 1/2).
double student_t_two_sided_p(double t, double nu);

/// Chi-square survival function with k degrees of freedom.
double chi_square_sf(double x, double k);

}  // namespace tpayield
