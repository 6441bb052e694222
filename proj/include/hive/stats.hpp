#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hive::stats {

// Regularized lower incomplete gamma P(a, x).
double lower_regularized_gamma(double a, double x);

double chi2_cdf(double x, double df);

// Inverse of chi2_cdf in prob, by bisection. prob in (0, 1).
double chi2_quantile(double prob, double df);

// Decision threshold from an assumed outlier fraction: with m = floor(c * n)
// the returned value is the (n - m)-th smallest score, so that exactly m
// scores lie strictly above it (up to ties). c in [0, 1).
double quantile_threshold(std::vector<double> scores, double contamination);

// Pearson correlation of two equal-length samples. Returns NaN if either
// side is constant or fewer than two points are given.
double pearson(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> v);
double variance(std::span<const double> v); // population (divides by n)

} // namespace hive::stats
