#include "psyprobe/generation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace psyprobe {

void GenerationConfig::validate() const {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (top_k < 0) throw std::invalid_argument("top_k must be non-negative");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw std::invalid_argument("top_p must lie in (0, 1]");
  if (max_seq_length <= 0) throw std::invalid_argument("max_seq_length must be positive");
}

std::vector<double> filtered_distribution(std::span<const float> logits, const GenerationConfig& config) {
  if (logits.empty()) throw std::invalid_argument("no logits to sample from");
  const std::size_t n = logits.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return logits[a] > logits[b]; });

  std::size_t keep = n;
  if (config.top_k > 0) keep = std::min<std::size_t>(keep, static_cast<std::size_t>(config.top_k));

  const double max_logit = logits[order[0]];
  std::vector<double> probs(n, 0.0);
  double z = 0.0;
  for (std::size_t r = 0; r < keep; ++r) {
    const auto i = order[r];
    probs[i] = std::exp((static_cast<double>(logits[i]) - max_logit) / config.temperature);
    z += probs[i];
  }
  for (std::size_t r = 0; r < keep; ++r) probs[order[r]] /= z;

  if (config.top_p < 1.0) {
    // Smallest prefix of the sorted tokens whose mass reaches top_p.
    double cumulative = 0.0;
    std::size_t nucleus = 0;
    while (nucleus < keep) {
      cumulative += probs[order[nucleus]];
      ++nucleus;
      if (cumulative >= config.top_p) break;
    }
    double kept_mass = 0.0;
    for (std::size_t r = 0; r < keep; ++r) {
      if (r < nucleus) {
        kept_mass += probs[order[r]];
      } else {
        probs[order[r]] = 0.0;
      }
    }
    for (std::size_t r = 0; r < nucleus; ++r) probs[order[r]] /= kept_mass;
  }
  return probs;
}

std::size_t sample_next_token(std::span<const float> logits, const GenerationConfig& config,
                              std::mt19937_64& rng) {
  const auto probs = filtered_distribution(logits, config);
  std::discrete_distribution<std::size_t> dist(probs.begin(), probs.end());
  return dist(rng);
}

FixtureGenerator::FixtureGenerator(std::vector<Rule> rules, Selection selection, std::string name)
    : selection_(selection), name_(std::move(name)) {
  for (auto& rule : rules) {
    if (rule.responses.empty()) throw std::invalid_argument("fixture rule without responses");
    Compiled c{std::move(rule), std::nullopt, false};
    if (c.rule.prompt_pattern.empty()) {
      c.empty_only = true;
    } else if (c.rule.prompt_pattern != "*") {
      c.pattern.emplace(c.rule.prompt_pattern);
    }
    rules_.push_back(std::move(c));
  }
}

FixtureGenerator FixtureGenerator::constant(std::string response) {
  return FixtureGenerator({{"*", {std::move(response)}}}, Selection::BySeed, "constant");
}

std::string FixtureGenerator::generate(std::string_view prompt, const GenerationConfig& config,
                                       std::optional<std::uint64_t> seed) const {
  config.validate();
  for (const auto& c : rules_) {
    if (c.empty_only && !prompt.empty()) continue;
    if (c.pattern && !std::regex_search(prompt.begin(), prompt.end(), *c.pattern)) continue;
    const auto& responses = c.rule.responses;
    if (selection_ == Selection::RoundRobin) {
      std::lock_guard lock(mutex_);
      return responses[cursor_++ % responses.size()];
    }
    return responses[seed.value_or(0) % responses.size()];
  }
  return {};
}

FixtureGenerator make_demo_generator() {
  return FixtureGenerator(
      {
          {"part|people|conversation|attention|talk",
           {"I love meeting people and going to parties with friends.",
            "I am usually quiet and keep to myself in the background.",
            "Honestly it depends on the day. Sometimes I talk to everyone at the party."}},
          {"concern|soft heart|sympathize|others|insult|ease|interested",
           {"I try to be kind and helpful to everyone I meet.",
            "People can be rude, and I can be harsh back.", "That is how it goes."}},
          {"prepared|belongings|details|mess|chores|order|schedule|duties|exacting|forget",
           {"I keep a tidy schedule and plan every detail.", "My desk is a mess and I forget things.",
            "The report was filed on Tuesday."}},
          {"stress|relaxed|worry|blue|disturbed|upset|mood|irritated",
           {"I stay calm and relaxed most days.", "I get anxious and worried about small things.",
            "It rained all week."}},
          {"vocabulary|imagination|ideas|abstract|words|reflecting|understand",
           {"I am full of creative ideas and curious about art.",
            "I prefer a simple routine and conventional habits.", "The train left at noon."}},
          {"*", {"The weather report was published on Tuesday."}},
      },
      FixtureGenerator::Selection::BySeed, "mock");
}

}  // namespace psyprobe
