#include "psyprobe/http_backends.hpp"

#include <cstdlib>
#include <regex>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "psyprobe/errors.hpp"

namespace psyprobe {

namespace {

using nlohmann::json;

struct SplitUrl {
  std::string host;  // scheme://host:port
  std::string prefix;
};

SplitUrl split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw std::invalid_argument("endpoint must look like http://host:port: " + url);
  if (m[1].str().starts_with("https")) throw std::invalid_argument("https endpoints are not supported: " + url);
  std::string prefix = m[2].matched ? m[2].str() : "";
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {m[1].str(), prefix};
}

json post(const HttpEndpoint& ep, const std::string& route, const json& body) {
  const auto url = split_url(ep.url);
  httplib::Client client(url.host);
  client.set_connection_timeout(10);
  client.set_read_timeout(ep.timeout_seconds);
  client.set_write_timeout(ep.timeout_seconds);
  httplib::Headers headers;
  if (!ep.api_key_env.empty()) {
    if (const char* key = std::getenv(ep.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  auto res = client.Post(url.prefix + route, headers, body.dump(), "application/json");
  if (!res) {
    throw BackendUnreachable(ep.url + route + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw BackendError(ep.url + route + " returned HTTP " + std::to_string(res->status) + ": " +
                       res->body.substr(0, 200));
  }
  auto j = json::parse(res->body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw BackendError(ep.url + route + " returned malformed JSON");
  return j;
}

}  // namespace

HttpGenerationBackend::HttpGenerationBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  split_url(endpoint_.url);
}

std::string HttpGenerationBackend::generate(std::string_view prompt, const GenerationConfig& config,
                                            std::optional<std::uint64_t> seed) const {
  config.validate();
  json body{{"model", endpoint_.model},
            {"prompt", prompt},
            {"temperature", config.temperature},
            {"top_p", config.top_p},
            {"max_length", config.max_seq_length}};
  if (config.top_k > 0) body["top_k"] = config.top_k;
  if (seed) body["seed"] = *seed;
  const auto j = post(endpoint_, "/generate", body);
  if (!j.contains("text") || !j["text"].is_string()) throw BackendError("generation response has no text field");
  return j["text"].get<std::string>();
}

HttpNliBackend::HttpNliBackend(HttpEndpoint endpoint, std::size_t max_premise_bytes)
    : endpoint_(std::move(endpoint)), max_premise_bytes_(max_premise_bytes) {
  split_url(endpoint_.url);
}

NliResult HttpNliBackend::classify(std::string_view premise, std::string_view hypothesis) const {
  const NliPair pair{std::string(premise), std::string(hypothesis)};
  return classify_many(std::span<const NliPair>(&pair, 1)).front();
}

std::vector<NliResult> HttpNliBackend::classify_many(std::span<const NliPair> pairs) const {
  json list = json::array();
  for (const auto& p : pairs) list.push_back({{"premise", p.premise}, {"hypothesis", p.hypothesis}});
  const auto j = post(endpoint_, "/nli", json{{"model", endpoint_.model}, {"pairs", std::move(list)}});
  if (!j.contains("results") || !j["results"].is_array() || j["results"].size() != pairs.size()) {
    throw BackendError("NLI response does not hold one result per pair");
  }
  std::vector<NliResult> out;
  for (const auto& r : j["results"]) {
    NliResult res;
    try {
      res.entailment = r.at("entailment").get<double>();
      res.contradiction = r.at("contradiction").get<double>();
      res.neutral = r.at("neutral").get<double>();
      if (r.contains("entailment_logit") && r["entailment_logit"].is_number()) {
        res.entailment_logit = r["entailment_logit"].get<double>();
      }
      res.validate();
    } catch (const std::exception& e) {
      throw BackendError(std::string("bad NLI result: ") + e.what());
    }
    out.push_back(res);
  }
  return out;
}

}  // namespace psyprobe
