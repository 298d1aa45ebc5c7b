#pragma once

namespace cilab::normal {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2Pi = 2.50662827463100050242;

// Standard normal density.
double pdf(double x);

// Normal density with the given mean and standard deviation.
double pdf(double x, double mean, double sd);

// Standard normal CDF.
double cdf(double x);

// Upper bivariate normal probability P(X > h, Y > k) for standard margins
// with correlation r (Drezner-Wesolowsky with Genz's refinements; about
// 1e-15 absolute accuracy).
double bivariate_upper(double h, double k, double r);

// P(X > 0, Y > 0) + P(X < 0, Y < 0) = 1/2 + asin(r)/pi.
double same_sign_probability(double r);

}  // namespace cilab::normal
