#pragma once

#include <span>

namespace dgnpp::stats {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Asymptotic Kolmogorov survival function P(K > x).
double kolmogorov_survival(double x);

// One-sample KS test of the samples against Exp(rate).
KsResult ks_test_exponential(std::span<const double> samples, double rate = 1.0);

// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);

}  // namespace dgnpp::stats
