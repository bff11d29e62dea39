#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "psyprobe/generation.hpp"
#include "psyprobe/nli.hpp"
#include "psyprobe/training.hpp"

namespace psyprobe {

/// Which implementation to build and how to reach it.
///   generation kinds: mock, fixture (rules JSON at path), tinylm (checkpoint at path), http
///   nli kinds:        lexicon (optional lexicon JSON at path), fixture (TSV at path), http
///   trainable kinds:  mock, tinylm
struct BackendSpec {
  std::string kind = "mock";
  std::string model;
  std::string url;
  std::string api_key_env;
  std::filesystem::path path;
  std::size_t max_premise_bytes = 0;

  nlohmann::ordered_json to_json() const;
  static BackendSpec from_json(const nlohmann::json& j);
};

std::shared_ptr<const GenerationBackend> make_generation_backend(const BackendSpec& spec);
std::shared_ptr<const NliBackend> make_nli_backend(const BackendSpec& spec);
std::unique_ptr<TrainableBackend> make_trainable_backend(const BackendSpec& spec);

/// {"selection": "seed"|"round_robin", "rules": [{"pattern": ..., "responses": [...]}]}
std::shared_ptr<const GenerationBackend> load_fixture_generator(const std::filesystem::path& path);

}  // namespace psyprobe
