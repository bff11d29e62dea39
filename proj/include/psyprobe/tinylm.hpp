#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "psyprobe/generation.hpp"
#include "psyprobe/training.hpp"

namespace psyprobe {

/// Lowercased word and punctuation tokens used by the local model.
std::vector<std::string> lm_tokenize(std::string_view text);

/// Joins tokens back into text: no space before punctuation, sentence
/// starts and the pronoun "i" capitalised.
std::string lm_detokenize(std::span<const std::string> tokens);

class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;

  Vocabulary();

  /// Tokens seen at least min_count times, most frequent first, capped at
  /// max_size entries including the three specials.
  static Vocabulary build(std::span<const std::string> texts, std::size_t max_size, std::size_t min_count = 1);

  int id(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return tokens_.size(); }

  std::vector<int> encode(std::string_view text) const;

  void add(std::string token);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// Small neural language model. The context vector at step t is the
/// exponentially decayed, normalised sum of the token embeddings seen so
/// far; next-token logits are an affine readout of it. A binary
/// classification head over the context of the last token shares the
/// embedding table, so classifier finetuning moves the weights that
/// generation uses.
template <typename Scalar>
class DecayContextLm {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Options {
    int dim = 32;
    Scalar decay = Scalar(0.6);
    std::size_t max_vocab = 4000;
    std::size_t min_count = 1;
    Scalar init_scale = Scalar(0.1);
  };

  DecayContextLm() = default;

  /// Builds a vocabulary over texts and draws small random weights.
  static DecayContextLm create(std::span<const std::string> texts, const Options& options, std::uint64_t seed);

  /// Next-token cross-entropy training with AdamW.
  TrainingSummary train_causal(std::span<const std::string> texts, const CausalHyperparameters& hp,
                               std::uint64_t seed);

  /// Binary classification training with Adam. The head is reset before
  /// training; label 1 is the positive class.
  TrainingSummary train_classifier(std::span<const std::string> texts, std::span<const int> labels,
                                   const ClassifierHyperparameters& hp, std::uint64_t seed);

  /// Mean next-token cross-entropy per predicted token.
  double causal_loss(std::span<const std::string> texts) const;

  /// Mean binary cross-entropy of the classification head.
  double classifier_loss(std::span<const std::string> texts, std::span<const int> labels) const;

  /// Positive-class probability from the classification head.
  double classify(std::string_view text) const;

  /// Completion of the prompt (prompt not included).
  std::string generate(std::string_view prompt, const GenerationConfig& config, std::uint64_t seed) const;

  /// Gradients of causal_loss over the given texts, for checking.
  struct Gradients {
    Matrix embed;
    Matrix readout;
    Vector bias;
  };
  Gradients causal_gradients(std::span<const std::string> texts) const;

  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  const Matrix& embeddings() const noexcept { return embed_; }
  Matrix& embeddings() noexcept { return embed_; }
  const Matrix& readout() const noexcept { return readout_; }
  Matrix& readout() noexcept { return readout_; }
  const Vector& bias() const noexcept { return bias_; }
  const Vector& head() const noexcept { return head_; }
  Scalar decay() const noexcept { return decay_; }

  void save(const std::filesystem::path& path) const;
  static DecayContextLm load(const std::filesystem::path& path);

 private:
  // Context vectors for every prefix of ids; row t summarises ids[0..t].
  Matrix contexts(std::span<const int> ids, Vector* norms) const;

  // Adds the embedding gradient given d(loss)/d(context) for every row.
  void backprop_contexts(std::span<const int> ids, const Matrix& d_context, const Vector& norms,
                         Matrix& d_embed) const;

  double sequence_gradients(std::span<const int> ids, Scalar weight, Gradients* grads) const;

  std::vector<int> classifier_ids(std::string_view text) const;

  Vocabulary vocab_;
  Scalar decay_ = Scalar(0.6);
  Matrix embed_;    // vocab x dim
  Matrix readout_;  // vocab x dim
  Vector bias_;     // vocab
  Vector head_;     // dim
  Scalar head_bias_ = Scalar(0);
};

extern template class DecayContextLm<float>;
extern template class DecayContextLm<double>;

using TinyLm = DecayContextLm<float>;

/// Generation backend over a shared, immutable TinyLm.
class TinyLmGenerator final : public GenerationBackend {
 public:
  TinyLmGenerator(std::shared_ptr<const TinyLm> model, std::string name)
      : model_(std::move(model)), name_(std::move(name)) {}

  std::string name() const override { return name_; }
  std::string generate(std::string_view prompt, const GenerationConfig& config,
                       std::optional<std::uint64_t> seed) const override;

  const TinyLm& model() const noexcept { return *model_; }

 private:
  std::shared_ptr<const TinyLm> model_;
  std::string name_;
};

/// TrainableBackend over a TinyLm checkpoint. Each finetune starts from a
/// copy of the base weights.
class TinyLmTrainer final : public TrainableBackend {
 public:
  TinyLmTrainer(std::shared_ptr<const TinyLm> base, std::string name);

  std::string name() const override { return name_; }
  std::shared_ptr<const GenerationBackend> base_generator() const override { return base_generator_; }

  ModelHandle finetune_causal(std::span<const std::string> texts, const CausalHyperparameters& hp,
                              std::uint64_t seed) override;
  ModelHandle finetune_classifier(std::span<const std::string> texts, std::span<const int> labels,
                                  const ClassifierHyperparameters& hp, std::uint64_t seed) override;
  std::shared_ptr<const GenerationBackend> as_generation_backend(const ModelHandle& handle) const override;

  std::shared_ptr<const TinyLm> model(const ModelHandle& handle) const;

 private:
  std::shared_ptr<const TinyLm> base_;
  std::string name_;
  std::shared_ptr<const GenerationBackend> base_generator_;
  std::map<std::string, std::shared_ptr<const TinyLm>> finetuned_;
};

}  // namespace psyprobe
