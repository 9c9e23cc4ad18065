#pragma once

#include <cstddef>
#include <vector>

namespace lrmc {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal inverse CDF, accurate to well below 1e-8 on (0, 1).
double normal_quantile(double p);

/// Type-7 quantile (linear interpolation between order statistics) of a
/// *sorted* sample.
double quantile_type7_sorted(const std::vector<double>& sorted, double q);

/// Autocorrelation-based effective sample size of one scalar chain (initial
/// positive sequence truncation). A constant chain reports 1.
double effective_sample_size(const std::vector<double>& chain);

}  // namespace lrmc
