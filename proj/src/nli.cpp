#include "psyprobe/nli.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace psyprobe {

NliResult NliResult::from_logits(double entailment, double contradiction, double neutral) {
  const double m = std::max({entailment, contradiction, neutral});
  const double e = std::exp(entailment - m);
  const double c = std::exp(contradiction - m);
  const double n = std::exp(neutral - m);
  const double z = e + c + n;
  return NliResult{e / z, c / z, n / z, entailment};
}

void NliResult::validate() const {
  for (double p : {entailment, contradiction, neutral}) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("NLI probability outside [0, 1]");
  }
  if (std::abs(entailment + contradiction + neutral - 1.0) > 1e-6) {
    throw std::invalid_argument("NLI probabilities do not sum to 1");
  }
  if (entailment_logit && std::isnan(*entailment_logit)) {
    throw std::invalid_argument("NLI entailment logit is NaN");
  }
}

std::vector<NliResult> NliBackend::classify_many(std::span<const NliPair> pairs) const {
  std::vector<NliResult> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(classify(p.premise, p.hypothesis));
  return out;
}

}  // namespace psyprobe
