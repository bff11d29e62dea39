#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace psyprobe::stats {

/// Median of an unsorted sample; even counts average the middle pair.
/// Throws std::invalid_argument on an empty sample.
double median(std::span<const double> values);

/// Quantile of a sorted sample with linear interpolation between order
/// statistics (position q * (n - 1)).
double quantile_sorted(std::span<const double> sorted, double q);

/// Sample standard deviation (n - 1 denominator); 0 for n < 2.
double sample_stddev(std::span<const double> values);

double mean(std::span<const double> values);

/// Box-plot summary with Tukey whiskers (most extreme points within
/// 1.5 IQR of the quartiles).
struct BoxSummary {
  std::size_t count = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  double whisker_low = 0, whisker_high = 0;
  double iqr = 0;
  double mean = 0;
  double stddev = 0;

  bool operator==(const BoxSummary&) const = default;
};

/// Throws std::invalid_argument on an empty sample.
BoxSummary summarize(std::span<const double> values);

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
/// Throws std::invalid_argument if either sample is empty.
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// Asymptotic two-sided KS critical value c(alpha) * sqrt((n + m) / (n m)).
double ks_critical_value(std::size_t n, std::size_t m, double alpha);

}  // namespace psyprobe::stats
