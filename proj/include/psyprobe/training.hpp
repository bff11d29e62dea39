#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "psyprobe/generation.hpp"

namespace psyprobe {

/// Causal-LM finetuning settings. Defaults: batch 16, 20 epochs, no warmup,
/// lr 1e-5, weight decay 0.01 (AdamW, linear decay after warmup).
struct CausalHyperparameters {
  int batch_size = 16;
  int epochs = 20;
  double warmup_proportion = 0.0;
  double learning_rate = 1e-5;
  double weight_decay = 0.01;
  double validation_fraction = 0.1;

  void validate() const;
};

/// Binary-classification finetuning settings: cross-entropy, Adam,
/// lr 5e-5, 10 epochs. The batch size is not given by the method; 16 keeps
/// it in line with the causal recipe.
struct ClassifierHyperparameters {
  int batch_size = 16;
  int epochs = 10;
  double learning_rate = 5e-5;
  double validation_fraction = 0.1;

  void validate() const;
};

struct TrainingSummary {
  std::vector<double> train_loss;       // mean loss per epoch
  std::vector<double> validation_loss;  // per epoch; empty without a validation split
  std::size_t train_examples = 0;
  std::size_t validation_examples = 0;
  std::size_t steps = 0;
};

/// Thrown when a loss turns non-finite.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, TrainingSummary partial)
      : std::runtime_error(what), summary(std::move(partial)) {}
  TrainingSummary summary;
};

struct ModelHandle {
  std::string id;
  TrainingSummary summary;
};

/// A model that can be finetuned and then used for generation again.
/// as_generation_backend on a classifier-finetuned handle generates with
/// the finetuned backbone; the classification head is dropped.
class TrainableBackend {
 public:
  virtual ~TrainableBackend() = default;

  virtual std::string name() const = 0;

  /// Generator over the untouched base weights.
  virtual std::shared_ptr<const GenerationBackend> base_generator() const = 0;

  virtual ModelHandle finetune_causal(std::span<const std::string> texts, const CausalHyperparameters& hp,
                                      std::uint64_t seed) = 0;

  virtual ModelHandle finetune_classifier(std::span<const std::string> texts, std::span<const int> labels,
                                          const ClassifierHyperparameters& hp, std::uint64_t seed) = 0;

  virtual std::shared_ptr<const GenerationBackend> as_generation_backend(const ModelHandle& handle) const = 0;
};

}  // namespace psyprobe
