#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "psyprobe/stats.hpp"
#include "psyprobe/traits.hpp"

namespace psyprobe {

/// Raw per-trait score samples for one subject (a corpus or a probe run).
struct TraitDistribution {
  TraitMap<std::vector<double>> scores;

  void add(Trait t, double score) { scores[t].push_back(score); }
  std::size_t count(Trait t) const { return scores[t].size(); }

  /// Box summary per trait; nullopt for traits without samples.
  TraitMap<std::optional<stats::BoxSummary>> summaries() const;

  bool operator==(const TraitDistribution&) const = default;
};

struct DistributionComparison {
  double ks = 0.0;                 // two-sample Kolmogorov-Smirnov statistic
  double median_difference = 0.0;  // |median(a) - median(b)|
};

/// Per-trait distance between two distributions. Throws
/// std::invalid_argument naming the trait if either side has no samples.
TraitMap<DistributionComparison> compare_distributions(const TraitDistribution& a, const TraitDistribution& b);

/// Median and spread of one trait in a profile. A trait with no valid
/// scores has no median; it is never silently reported as neutral.
struct TraitSummary {
  std::optional<double> median;
  double spread = 0.0;  // sample standard deviation
  double iqr = 0.0;
  std::size_t n_samples = 0;
  std::size_t holes = 0;

  bool missing() const noexcept { return !median.has_value(); }
  bool operator==(const TraitSummary&) const = default;
};

using TraitProfile = TraitMap<TraitSummary>;

TraitProfile profile_of(const TraitDistribution& distribution, const TraitMap<std::size_t>& holes = TraitMap<std::size_t>(0));

}  // namespace psyprobe
