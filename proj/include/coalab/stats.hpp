#pragma once

#include <vector>

namespace coalab {

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double std_error = 0.0;
  double min = 0.0, max = 0.0;
};

/// Requires at least two samples.
Summary summarize(const std::vector<double>& x);

/// Linear interpolation between order statistics (R type 7); q in [0, 1].
double percentile(std::vector<double> x, double q);

struct KsResult {
  double d;
  double p_value;
};

/// One-sample Kolmogorov-Smirnov test against N(0, variance). The p-value
/// comes from the Kolmogorov series (20 terms) at sqrt(n) D with Stephens'
/// small-sample correction.
KsResult ks_normal(const std::vector<double>& x, double variance);

/// P(K > t) for the Kolmogorov distribution.
double kolmogorov_survival(double t);

/// Standard normal quantile (Acklam's rational approximation polished by one
/// Halley step).
double normal_quantile(double p);

}  // namespace coalab
