#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "psyprobe/tinylm.hpp"

using namespace psyprobe;

namespace {

const std::vector<std::string> kCorpus{
    "I love going to parties with my friends.",
    "I talk to everyone at the party.",
    "I stay quiet and keep to myself.",
    "I love meeting new people.",
    "My friends say I am the life of the party.",
    "I keep to myself at home.",
    "Parties are fun when friends are there.",
    "I am quiet in large groups.",
};

using DLm = DecayContextLm<double>;

DLm::Options small_options() {
  DLm::Options o;
  o.dim = 6;
  o.decay = 0.7;
  o.init_scale = 0.3;
  return o;
}

}  // namespace

TEST_CASE("tokenizer round trip") {
  const auto toks = lm_tokenize("I don't like well-known \"quotes\", OK?");
  const std::vector<std::string> expected{"i", "don't", "like", "well-known", "\"", "quotes", "\"", ",", "ok", "?"};
  CHECK(toks == expected);
  const std::vector<std::string> words{"i", "am", "here", ".", "so", "is", "i", "!"};
  CHECK(lm_detokenize(words) == "I am here. So is I!");
}

TEST_CASE("vocabulary") {
  const auto v = Vocabulary::build(kCorpus, 10);
  CHECK(v.size() == 10);
  CHECK(v.token(Vocabulary::kUnk) == "<unk>");
  CHECK(v.token(Vocabulary::kBos) == "<bos>");
  CHECK(v.token(Vocabulary::kEos) == "<eos>");
  CHECK(v.id(".") == 3);
  CHECK(v.id("i") == 4);
  CHECK(v.id("zebra") == Vocabulary::kUnk);
  const auto ids = v.encode("I zebra");
  REQUIRE(ids.size() == 2);
  CHECK(ids[1] == Vocabulary::kUnk);
}

TEST_CASE("analytic gradients match finite differences") {
  auto lm = DLm::create(kCorpus, small_options(), 4);
  const std::vector<std::string> batch(kCorpus.begin(), kCorpus.begin() + 3);
  const auto g = lm.causal_gradients(batch);
  const double h = 1e-6;
  auto check_entry = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = lm.causal_loss(batch);
    param = saved - h;
    const double down = lm.causal_loss(batch);
    param = saved;
    const double numeric = (up - down) / (2 * h);
    CHECK(analytic == doctest::Approx(numeric).epsilon(1e-5).scale(1.0));
  };
  for (int r : {3, 4, 5, 7}) {
    for (int c = 0; c < 6; c += 2) {
      check_entry(lm.embeddings()(r, c), g.embed(r, c));
      check_entry(lm.readout()(r, c), g.readout(r, c));
    }
  }
}

TEST_CASE("causal training lowers the loss") {
  auto lm = TinyLm::create(kCorpus, {}, 1);
  const double before = lm.causal_loss(kCorpus);
  CausalHyperparameters hp;
  hp.learning_rate = 2e-2;
  hp.epochs = 15;
  hp.batch_size = 4;
  hp.validation_fraction = 0.25;
  const auto summary = lm.train_causal(kCorpus, hp, 2);
  CHECK(summary.train_loss.size() == 15);
  CHECK(summary.validation_loss.size() == 15);
  CHECK(summary.train_examples == 6);
  CHECK(summary.validation_examples == 2);
  CHECK(summary.train_loss.back() < summary.train_loss.front());
  CHECK(lm.causal_loss(kCorpus) < before);
}

TEST_CASE("training is reproducible") {
  CausalHyperparameters hp;
  hp.learning_rate = 1e-2;
  hp.epochs = 3;
  auto a = TinyLm::create(kCorpus, {}, 5);
  auto b = TinyLm::create(kCorpus, {}, 5);
  a.train_causal(kCorpus, hp, 6);
  b.train_causal(kCorpus, hp, 6);
  CHECK(a.embeddings() == b.embeddings());
  const GenerationConfig gen;
  CHECK(a.generate("I", gen, 3) == b.generate("I", gen, 3));
}

TEST_CASE("classifier head learns a separable split") {
  auto lm = TinyLm::create(kCorpus, {}, 8);
  const std::vector<int> labels{1, 1, 0, 1, 1, 0, 1, 0};
  ClassifierHyperparameters hp;
  hp.learning_rate = 5e-2;
  hp.epochs = 60;
  hp.batch_size = 4;
  hp.validation_fraction = 0.0;
  const double before = lm.classifier_loss(kCorpus, labels);
  lm.train_classifier(kCorpus, labels, hp, 9);
  CHECK(lm.classifier_loss(kCorpus, labels) < before);
  int correct = 0;
  for (std::size_t i = 0; i < kCorpus.size(); ++i) correct += (lm.classify(kCorpus[i]) > 0.5) == (labels[i] == 1);
  CHECK(correct >= 7);
}

TEST_CASE("generation respects limits and avoids special tokens") {
  const auto lm = TinyLm::create(kCorpus, {}, 3);
  GenerationConfig gen;
  gen.max_seq_length = 5;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto text = lm.generate("I love", gen, s);
    CHECK(lm_tokenize(text).size() <= 5);
    CHECK(text.find("<unk>") == std::string::npos);
    CHECK(text.find("<bos>") == std::string::npos);
  }
}

TEST_CASE("save and load round trip") {
  auto lm = TinyLm::create(kCorpus, {}, 12);
  const auto path = std::filesystem::temp_directory_path() / "psyprobe-tinylm-roundtrip.bin";
  lm.save(path);
  const auto back = TinyLm::load(path);
  CHECK(back.embeddings() == lm.embeddings());
  CHECK(back.readout() == lm.readout());
  CHECK(back.bias() == lm.bias());
  CHECK(back.vocabulary().size() == lm.vocabulary().size());
  CHECK(back.generate("I", {}, 4) == lm.generate("I", {}, 4));
  CHECK_THROWS(DLm::load(path));
  std::filesystem::remove(path);
  CHECK_THROWS(TinyLm::load(path));
}

TEST_CASE("trainer keeps the base model untouched") {
  auto base = std::make_shared<const TinyLm>(TinyLm::create(kCorpus, {}, 21));
  TinyLmTrainer trainer(base, "tiny");
  CausalHyperparameters hp;
  hp.learning_rate = 1e-2;
  hp.epochs = 2;
  const auto snapshot = base->embeddings();
  const auto h = trainer.finetune_causal(kCorpus, hp, 1);
  CHECK(h.id == "causal-1");
  CHECK(base->embeddings() == snapshot);
  CHECK(trainer.model(h)->embeddings() != snapshot);
  CHECK(trainer.as_generation_backend(h)->name() == "tiny/causal-1");
  ClassifierHyperparameters chp;
  chp.epochs = 2;
  const std::vector<int> labels{1, 1, 0, 1, 1, 0, 1, 0};
  const auto c = trainer.finetune_classifier(kCorpus, labels, chp, 2);
  CHECK(c.id == "classifier-2");
  CHECK_THROWS_AS(trainer.model(ModelHandle{"nope", {}}), std::invalid_argument);
}
