#include "psyprobe/backends.hpp"

#include <stdexcept>

#include "psyprobe/alteration.hpp"
#include "psyprobe/http_backends.hpp"
#include "psyprobe/mock_nli.hpp"
#include "psyprobe/persist.hpp"
#include "psyprobe/tinylm.hpp"

namespace psyprobe {

namespace {

HttpEndpoint endpoint_of(const BackendSpec& spec) {
  if (spec.url.empty()) throw std::invalid_argument("http backend needs a url");
  if (spec.model.empty()) throw std::invalid_argument("http backend needs a model name");
  return {spec.url, spec.model, spec.api_key_env};
}

std::filesystem::path checkpoint_of(const BackendSpec& spec) {
  if (!spec.path.empty()) return spec.path;
  if (!spec.model.empty()) return spec.model;
  throw std::invalid_argument("tinylm backend needs a checkpoint path");
}

}  // namespace

nlohmann::ordered_json BackendSpec::to_json() const {
  return {{"kind", kind}, {"model", model}, {"url", url}, {"api_key_env", api_key_env},
          {"path", path.string()}, {"max_premise_bytes", max_premise_bytes}};
}

BackendSpec BackendSpec::from_json(const nlohmann::json& j) {
  BackendSpec s;
  s.kind = j.value("kind", s.kind);
  s.model = j.value("model", s.model);
  s.url = j.value("url", s.url);
  s.api_key_env = j.value("api_key_env", s.api_key_env);
  s.path = j.value("path", std::string());
  s.max_premise_bytes = j.value("max_premise_bytes", s.max_premise_bytes);
  return s;
}

std::shared_ptr<const GenerationBackend> load_fixture_generator(const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(read_text(path));
  std::vector<FixtureGenerator::Rule> rules;
  for (const auto& r : j.at("rules")) {
    rules.push_back({r.at("pattern").get<std::string>(), r.at("responses").get<std::vector<std::string>>()});
  }
  const auto sel = j.value("selection", std::string("seed"));
  if (sel != "seed" && sel != "round_robin") throw std::invalid_argument("selection must be seed or round_robin");
  return std::make_shared<FixtureGenerator>(
      std::move(rules), sel == "seed" ? FixtureGenerator::Selection::BySeed : FixtureGenerator::Selection::RoundRobin,
      j.value("name", path.stem().string()));
}

std::shared_ptr<const GenerationBackend> make_generation_backend(const BackendSpec& spec) {
  if (spec.kind == "mock") return std::make_shared<FixtureGenerator>(make_demo_generator());
  if (spec.kind == "fixture") return load_fixture_generator(spec.path);
  if (spec.kind == "tinylm") {
    const auto path = checkpoint_of(spec);
    return std::make_shared<TinyLmGenerator>(std::make_shared<TinyLm>(TinyLm::load(path)),
                                             "tinylm:" + path.stem().string());
  }
  if (spec.kind == "http") return std::make_shared<HttpGenerationBackend>(endpoint_of(spec));
  throw std::invalid_argument("unknown generation backend kind: " + spec.kind);
}

std::shared_ptr<const NliBackend> make_nli_backend(const BackendSpec& spec) {
  if (spec.kind == "lexicon" || spec.kind == "mock") {
    return std::make_shared<LexiconNli>(spec.path.empty() ? default_lexicon() : load_lexicon(spec.path));
  }
  if (spec.kind == "fixture") return std::make_shared<FixtureNli>(FixtureNli::load(spec.path));
  if (spec.kind == "http") return std::make_shared<HttpNliBackend>(endpoint_of(spec), spec.max_premise_bytes);
  throw std::invalid_argument("unknown NLI backend kind: " + spec.kind);
}

std::unique_ptr<TrainableBackend> make_trainable_backend(const BackendSpec& spec) {
  if (spec.kind == "mock") {
    return std::make_unique<FixtureTrainableBackend>(std::make_shared<FixtureGenerator>(make_demo_generator()));
  }
  if (spec.kind == "tinylm") {
    const auto path = checkpoint_of(spec);
    return std::make_unique<TinyLmTrainer>(std::make_shared<TinyLm>(TinyLm::load(path)),
                                           "tinylm:" + path.stem().string());
  }
  throw std::invalid_argument("backend kind " + spec.kind + " cannot be finetuned here");
}

}  // namespace psyprobe
