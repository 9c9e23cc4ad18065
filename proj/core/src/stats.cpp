#include "lrmc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lrmc {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Acklam's rational approximation, |relative error| < 1.15e-9.
double quantile_seed(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("normal_quantile: p must lie in (0,1)");
  }
  double x = quantile_seed(p);
  // One Halley step against the exact CDF pushes the error to machine level.
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double quantile_type7_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) {
    throw std::invalid_argument("quantile: empty sample");
  }
  if (q <= 0.0) return sorted.front();
  if (q >= 1.0) return sorted.back();
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const std::size_t lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double effective_sample_size(const std::vector<double>& chain) {
  const std::size_t n = chain.size();
  if (n < 2) {
    throw std::invalid_argument("effective_sample_size: need at least 2 draws");
  }
  double mean = 0.0;
  for (double x : chain) mean += x;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double x : chain) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n);
  if (var <= 1e-24 * (1.0 + mean * mean)) {
    return 1.0;  // constant chain carries one draw of information
  }
  // Initial positive sequence: sum lag-pair autocorrelations while positive.
  double rho_sum = 0.0;
  const std::size_t max_lag = n - 1;
  std::size_t lag = 1;
  while (lag + 1 <= max_lag) {
    double g0 = 0.0, g1 = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) {
      g0 += (chain[t] - mean) * (chain[t + lag] - mean);
    }
    for (std::size_t t = 0; t + lag + 1 < n; ++t) {
      g1 += (chain[t] - mean) * (chain[t + lag + 1] - mean);
    }
    g0 /= static_cast<double>(n) * var;
    g1 /= static_cast<double>(n) * var;
    if (g0 + g1 <= 0.0) break;
    rho_sum += g0 + g1;
    lag += 2;
  }
  const double ess = static_cast<double>(n) / (1.0 + 2.0 * rho_sum);
  return std::clamp(ess, 1.0, static_cast<double>(n));
}

}  // namespace lrmc
