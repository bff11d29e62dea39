#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace psyprobe {

/// Class probabilities for one premise/hypothesis pair. entailment_logit is
/// the pre-normalisation entailment score when the backend exposes it.
struct NliResult {
  double entailment = 0.0;
  double contradiction = 0.0;
  double neutral = 0.0;
  std::optional<double> entailment_logit;

  /// Softmax over the three class logits; keeps the entailment logit.
  static NliResult from_logits(double entailment, double contradiction, double neutral);

  /// Throws std::invalid_argument unless each probability lies in [0, 1]
  /// and the three sum to 1 within 1e-6.
  void validate() const;

  bool operator==(const NliResult&) const = default;
};

struct NliPair {
  std::string premise;
  std::string hypothesis;
};

/// Any natural-language-inference model. Implementations must be
/// deterministic for a fixed configuration, and classify_many must agree
/// elementwise with classify.
class NliBackend {
 public:
  virtual ~NliBackend() = default;

  virtual std::string name() const = 0;

  virtual NliResult classify(std::string_view premise, std::string_view hypothesis) const = 0;

  virtual std::vector<NliResult> classify_many(std::span<const NliPair> pairs) const;

  /// Whether concurrent calls from several threads are allowed.
  virtual bool thread_safe() const { return true; }

  /// Longest premise in bytes the backend accepts; 0 means unlimited.
  virtual std::size_t max_premise_bytes() const { return 0; }
};

}  // namespace psyprobe
