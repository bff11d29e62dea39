#pragma once

#include <string>

#include "psyprobe/generation.hpp"
#include "psyprobe/nli.hpp"

namespace psyprobe {

/// A model served over HTTP with a small JSON protocol:
///   POST {url}/generate {"model","prompt","temperature","top_k","top_p","max_length","seed"} -> {"text"}
///   POST {url}/nli {"model","pairs":[{"premise","hypothesis"}]}
///        -> {"results":[{"entailment","contradiction","neutral","entailment_logit"}]}
/// top_k is omitted when 0. When api_key_env names a set environment
/// variable its value is sent as a bearer token.
struct HttpEndpoint {
  std::string url;  // e.g. http://127.0.0.1:8700
  std::string model;
  std::string api_key_env;
  int timeout_seconds = 300;
};

class HttpGenerationBackend final : public GenerationBackend {
 public:
  explicit HttpGenerationBackend(HttpEndpoint endpoint);

  std::string name() const override { return "http:" + endpoint_.model; }
  std::string generate(std::string_view prompt, const GenerationConfig& config,
                       std::optional<std::uint64_t> seed) const override;
  // Remote sampling is not guaranteed to honour the seed.
  bool reproducible() const override { return false; }

 private:
  HttpEndpoint endpoint_;
};

class HttpNliBackend final : public NliBackend {
 public:
  explicit HttpNliBackend(HttpEndpoint endpoint, std::size_t max_premise_bytes = 0);

  std::string name() const override { return "http:" + endpoint_.model; }
  NliResult classify(std::string_view premise, std::string_view hypothesis) const override;
  std::vector<NliResult> classify_many(std::span<const NliPair> pairs) const override;
  std::size_t max_premise_bytes() const override { return max_premise_bytes_; }

 private:
  HttpEndpoint endpoint_;
  std::size_t max_premise_bytes_;
};

}  // namespace psyprobe
