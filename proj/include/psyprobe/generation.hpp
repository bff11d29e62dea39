#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <random>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace psyprobe {

/// Sampling settings for autoregressive completion. top_k = 0 disables the
/// top-k filter; top_p = 1 disables nucleus filtering.
struct GenerationConfig {
  double temperature = 1.0;
  int top_k = 40;
  double top_p = 1.0;
  int max_seq_length = 256;

  /// Defaults for locally hosted models.
  static GenerationConfig local_defaults() { return {}; }
  /// Remote completion APIs take no top-k.
  static GenerationConfig remote_defaults() { return {1.0, 0, 1.0, 256}; }

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;

  bool operator==(const GenerationConfig&) const = default;
};

/// A text generator. generate() completes the prompt token by token until
/// an end-of-sequence token or max_seq_length. Backends that echo the
/// prompt in their output are fine; the probe strips it.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;

  virtual std::string name() const = 0;

  virtual std::string generate(std::string_view prompt, const GenerationConfig& config,
                               std::optional<std::uint64_t> seed) const = 0;

  /// Same (prompt, config, seed) gives the same text.
  virtual bool reproducible() const { return true; }
  virtual bool thread_safe() const { return true; }
  /// Can complete an empty prompt.
  virtual bool supports_unprompted() const { return true; }
};

/// Index of the next token drawn from raw logits after temperature scaling,
/// top-k filtering and nucleus (top-p) filtering.
std::size_t sample_next_token(std::span<const float> logits, const GenerationConfig& config,
                              std::mt19937_64& rng);

/// Probability vector actually sampled from by sample_next_token.
std::vector<double> filtered_distribution(std::span<const float> logits, const GenerationConfig& config);

/// Canned responses keyed by prompt pattern. The first rule whose regex
/// matches the prompt supplies the response list. BySeed picks
/// responses[seed % size]; RoundRobin cycles through them in call order.
class FixtureGenerator final : public GenerationBackend {
 public:
  enum class Selection { BySeed, RoundRobin };

  struct Rule {
    std::string prompt_pattern;  // ECMAScript regex; "" matches only the empty prompt, "*" anything
    std::vector<std::string> responses;
  };

  explicit FixtureGenerator(std::vector<Rule> rules, Selection selection = Selection::BySeed,
                            std::string name = "fixture");

  FixtureGenerator(FixtureGenerator&& other) noexcept
      : rules_(std::move(other.rules_)), selection_(other.selection_), name_(std::move(other.name_)),
        cursor_(other.cursor_) {}

  /// Every prompt gets the same response.
  static FixtureGenerator constant(std::string response);

  std::string name() const override { return name_; }
  std::string generate(std::string_view prompt, const GenerationConfig& config,
                       std::optional<std::uint64_t> seed) const override;
  bool thread_safe() const override { return selection_ == Selection::BySeed; }

 private:
  struct Compiled {
    Rule rule;
    std::optional<std::regex> pattern;
    bool empty_only = false;
  };
  std::vector<Compiled> rules_;
  Selection selection_;
  std::string name_;
  mutable std::mutex mutex_;
  mutable std::size_t cursor_ = 0;
};

/// Built-in offline generator used by --mock: mixes trait-laden and neutral
/// responses so every pipeline stage has something to measure.
FixtureGenerator make_demo_generator();

}  // namespace psyprobe
