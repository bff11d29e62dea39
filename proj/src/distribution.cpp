#include "psyprobe/distribution.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace psyprobe {

TraitMap<std::optional<stats::BoxSummary>> TraitDistribution::summaries() const {
  TraitMap<std::optional<stats::BoxSummary>> out;
  for (Trait t : kAllTraits) {
    if (!scores[t].empty()) out[t] = stats::summarize(scores[t]);
  }
  return out;
}

TraitMap<DistributionComparison> compare_distributions(const TraitDistribution& a, const TraitDistribution& b) {
  TraitMap<DistributionComparison> out;
  for (Trait t : kAllTraits) {
    if (a.scores[t].empty() || b.scores[t].empty()) {
      throw std::invalid_argument("cannot compare distributions: no samples for " + std::string(trait_key(t)));
    }
    out[t].ks = stats::ks_statistic(a.scores[t], b.scores[t]);
    out[t].median_difference = std::abs(stats::median(a.scores[t]) - stats::median(b.scores[t]));
  }
  return out;
}

TraitProfile profile_of(const TraitDistribution& distribution, const TraitMap<std::size_t>& holes) {
  TraitProfile profile;
  for (Trait t : kAllTraits) {
    const auto& v = distribution.scores[t];
    auto& s = profile[t];
    s.holes = holes[t];
    s.n_samples = v.size();
    if (v.empty()) continue;
    const auto box = stats::summarize(v);
    s.median = box.median;
    s.spread = box.stddev;
    s.iqr = box.iqr;
  }
  return profile;
}

}  // namespace psyprobe
