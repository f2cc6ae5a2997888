#pragma once

// Ensemble summaries: moments, chi-square variance intervals, and
// Kolmogorov-Smirnov tests (one-sample vs a centred normal, two-sample).

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace fbmbt {

/// Minimum ensemble size accepted by aggregate().
inline constexpr std::size_t kMinReplications = 30;

inline double normal_cdf(double x, double sigma = 1.0) { return 0.5 * std::erfc(-x / (sigma * std::sqrt(2.0))); }

/// P(K > lambda) for the limiting Kolmogorov distribution.
inline double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Theta-function form converges fast for small lambda.
    const double pi2 = M_PI * M_PI;
    double cdf = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(-odd * odd * pi2 / (8.0 * lambda * lambda));
      cdf += term;
      if (term < 1e-17) break;
    }
    cdf *= std::sqrt(2.0 * M_PI) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double q = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    q += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(q, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Asymptotic p-value with the Stephens small-sample correction.
inline double ks_p_value(double d, double effective_n) {
  const double sn = std::sqrt(effective_n);
  return kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
}

/// One-sample KS test of the data against N(0, sigma^2).
inline KsResult ks_test_normal(std::span<const double> data, double sigma) {
  if (data.empty()) throw std::invalid_argument("ks_test_normal: empty sample");
  if (!(sigma > 0.0)) throw std::invalid_argument("ks_test_normal: sigma must be positive");
  std::vector<double> x(data.begin(), data.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double c = normal_cdf(x[i], sigma);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - c, c - static_cast<double>(i) / n});
  }
  return {d, ks_p_value(d, n)};
}

/// Two-sample KS test.
inline KsResult ks_test_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_test_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return {d, ks_p_value(d, nx * ny / (nx + ny))};
}

inline double mean_of(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean_of: empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Unbiased sample variance (two-pass).
inline double variance_of(std::span<const double> v) {
  if (v.size() < 2) throw std::invalid_argument("variance_of: need at least two values");
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline double correlation_of(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("correlation_of: size mismatch");
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

/// Mean squared difference.
inline double mse_of(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("mse_of: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

struct ColumnSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;
  double var_ci_low = 0.0;   ///< 95% chi-square interval
  double var_ci_high = 0.0;
  bool degenerate = false;   ///< all values equal
  std::optional<KsResult> ks;  ///< vs N(0, variance); absent when degenerate or not requested
};

/// Mean, unbiased variance, its 95% chi-square interval, and optionally a KS
/// test of the column against the centred normal N(0, sample variance).
inline ColumnSummary aggregate(std::span<const double> values, bool normality_test = true) {
  if (values.size() < kMinReplications) {
    throw std::invalid_argument("aggregate: insufficient replications (need at least 30)");
  }
  ColumnSummary s;
  s.count = values.size();
  s.mean = mean_of(values);
  s.variance = variance_of(values);
  s.degenerate = std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); });
  const double dof = static_cast<double>(s.count - 1);
  boost::math::chi_squared chi(dof);
  s.var_ci_low = dof * s.variance / boost::math::quantile(chi, 0.975);
  s.var_ci_high = dof * s.variance / boost::math::quantile(chi, 0.025);
  if (normality_test && !s.degenerate && s.variance > 0.0) {
    s.ks = ks_test_normal(values, std::sqrt(s.variance));
  }
  return s;
}

}  // namespace fbmbt
